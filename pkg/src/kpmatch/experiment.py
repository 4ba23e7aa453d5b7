"""Experiment orchestration: config loading, single runs, grids, ablations.

A run is fully described by its JSON config; artifacts land in a directory
named by a truncated hash of the canonical config, so identical configs map
to identical run directories and reruns reproduce every output byte for
byte (no timestamps or hidden state in any artifact).
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import os
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from pathlib import Path

from kpmatch.corpus import (
    AnnotationDoc,
    Dataset,
    EmbeddingVariant,
    Split,
    aux_text,
    load_annotations,
    load_argkp,
    load_embeddings,
    load_ibm30k,
    load_sts,
    pair_texts,
)
from kpmatch.ensemble import BoostConfig, boost_predict, boost_train
from kpmatch.errors import ConfigError, DataError, KpmatchError
from kpmatch.evaluation import (
    EvalMethod,
    LabelPolicy,
    SeedAggregate,
    aggregate_seeds,
    full_report,
    scored_from_predictions,
)
from kpmatch.features import (
    FeatureConfig,
    FeatureKind,
    TagKind,
    TagVocabulary,
    TfidfModel,
    build_tag_vocab,
    feature_vector_for,
    fit_tfidf,
    save_tag_vocab,
    save_tfidf,
)
from kpmatch.scorer import AuxTask, TrainConfig, predict, train

UNDECIDED_NOTE = (
    "Unlabeled (Undecided) pairs count as non-matching under the strict "
    "policy and as matching under the relaxed policy."
)

_ENV_PATH_OVERRIDES = {
    "KPMATCH_CORPUS_DIR": ("corpus_dir",),
    "KPMATCH_ANNOTATIONS": ("annotations",),
    "KPMATCH_EMBEDDINGS": ("embeddings",),
    "KPMATCH_AUX_STS": ("aux", "sts"),
    "KPMATCH_AUX_IBM30K": ("aux", "ibm30k"),
    "KPMATCH_AUX_ANNOTATIONS": ("aux", "annotations"),
    "KPMATCH_AUX_EMBEDDINGS": ("aux", "embeddings"),
    "KPMATCH_OUT_DIR": ("out_dir",),
}

PRETRAIN_CHOICES = ("none", "sts", "ibm30k")


@dataclass(frozen=True)
class ExperimentPaths:
    corpus_dir: Path
    embeddings: Path
    annotations: Path | None = None
    aux_sts: Path | None = None
    aux_ibm30k: Path | None = None
    aux_annotations: Path | None = None
    aux_embeddings: Path | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    paths: ExperimentPaths
    feature: FeatureKind = FeatureKind.NONE
    include_topic: bool = True
    n_pool_layers: int = 1
    pretrain: str = "none"
    boosting: bool = False
    seeds: tuple[int, ...] = (1, 2, 3)
    train: TrainConfig = field(default_factory=TrainConfig)
    boost: BoostConfig = field(default_factory=BoostConfig)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    eval_split: Split = Split.TEST
    best_match: bool = True
    separator: str = "[SEP]"
    out_dir: Path = Path("runs")
    model_label: str = "precomputed"

    def __post_init__(self) -> None:
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if self.n_pool_layers not in (1, 2, 3):
            raise ConfigError("n_pool_layers must be 1, 2, or 3")
        if self.pretrain not in PRETRAIN_CHOICES:
            raise ConfigError(f"pretrain must be one of {PRETRAIN_CHOICES}")
        if self.eval_split is Split.TRAIN:
            raise ConfigError("eval_split must be dev or test")

    @property
    def variant(self) -> EmbeddingVariant:
        return EmbeddingVariant.WITH_TOPIC if self.include_topic else EmbeddingVariant.NO_TOPIC


def _as_path(base: Path, value: str | None) -> Path | None:
    if value is None:
        return None
    path = Path(value)
    return path if path.is_absolute() else (base / path)


def load_config(path: str | Path, overrides: Mapping[str, object] | None = None) -> ExperimentConfig:
    """Parse a JSON config; relative paths resolve against the config file.

    Environment variables (KPMATCH_CORPUS_DIR, KPMATCH_EMBEDDINGS, ...)
    override paths only. `overrides` top-level keys replace parsed ones.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    if overrides:
        raw = {**raw, **overrides}
    for env, keys in _ENV_PATH_OVERRIDES.items():
        value = os.environ.get(env)
        if value:
            target = raw
            for key in keys[:-1]:
                target = target.setdefault(key, {})
            target[keys[-1]] = value
    return config_from_dict(raw, base_dir=path.parent)


def config_from_dict(raw: Mapping[str, object], base_dir: str | Path = ".") -> ExperimentConfig:
    base = Path(base_dir)
    try:
        aux = raw.get("aux") or {}
        paths = ExperimentPaths(
            corpus_dir=_as_path(base, raw["corpus_dir"]),
            embeddings=_as_path(base, raw["embeddings"]),
            annotations=_as_path(base, raw.get("annotations")),
            aux_sts=_as_path(base, aux.get("sts")),
            aux_ibm30k=_as_path(base, aux.get("ibm30k")),
            aux_annotations=_as_path(base, aux.get("annotations")),
            aux_embeddings=_as_path(base, aux.get("embeddings")),
        )
        train_raw = dict(raw.get("train") or {})
        train_raw.setdefault("seed", 0)
        train_raw["hidden_dims"] = tuple(train_raw.get("hidden_dims", (256, 64)))
        train_cfg = TrainConfig(**train_raw)
        boost_raw = dict(raw.get("boost") or {})
        boost_cfg = BoostConfig(base=train_cfg, **boost_raw)
        feat_raw = dict(raw.get("features") or {})
        feature_cfg = FeatureConfig(kind=FeatureKind(raw.get("feature", "none")), **feat_raw)
        eval_raw = dict(raw.get("eval") or {})
        return ExperimentConfig(
            paths=paths,
            feature=feature_cfg.kind,
            include_topic=bool(raw.get("include_topic", True)),
            n_pool_layers=int(raw.get("n_pool_layers", 1)),
            pretrain=str(raw.get("pretrain", "none")),
            boosting=bool(raw.get("boosting", False)),
            seeds=tuple(int(s) for s in raw.get("seeds", (1, 2, 3))),
            train=train_cfg,
            boost=boost_cfg,
            features=feature_cfg,
            eval_split=Split(eval_raw.get("split", "test")),
            best_match=bool(eval_raw.get("best_match", True)),
            separator=str(raw.get("separator", "[SEP]")),
            out_dir=_as_path(base, str(raw.get("out_dir", "runs"))),
            model_label=str(raw.get("model_label", "precomputed")),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad config: {exc}") from None


def canonical_config_dict(config: ExperimentConfig) -> dict:
    """The hashed, echoed view of a config; out_dir is excluded on purpose
    (it determines where a run lives, not what it computes)."""
    paths = config.paths
    return {
        "corpus_dir": str(paths.corpus_dir),
        "embeddings": str(paths.embeddings),
        "annotations": None if paths.annotations is None else str(paths.annotations),
        "aux": {
            "sts": None if paths.aux_sts is None else str(paths.aux_sts),
            "ibm30k": None if paths.aux_ibm30k is None else str(paths.aux_ibm30k),
            "annotations": None
            if paths.aux_annotations is None
            else str(paths.aux_annotations),
            "embeddings": None if paths.aux_embeddings is None else str(paths.aux_embeddings),
        },
        "feature": config.feature.value,
        "include_topic": config.include_topic,
        "n_pool_layers": config.n_pool_layers,
        "pretrain": config.pretrain,
        "boosting": config.boosting,
        "seeds": list(config.seeds),
        "train": {
            "learning_rate": config.train.learning_rate,
            "epochs_pretrain": config.train.epochs_pretrain,
            "epochs_finetune": config.train.epochs_finetune,
            "batch_size": config.train.batch_size,
            "hidden_dims": list(config.train.hidden_dims),
        },
        "boost": {
            "n_models": config.boost.n_models,
            "sample_k": config.boost.sample_k,
            "error_threshold": config.boost.error_threshold,
        },
        "features": {
            "max_tokens": config.features.max_tokens,
            "vocab_cap": config.features.vocab_cap,
            "lowercase": config.features.lowercase,
        },
        "eval": {"split": config.eval_split.value, "best_match": config.best_match},
        "separator": config.separator,
        "model_label": config.model_label,
    }


def config_hash(config: ExperimentConfig) -> str:
    blob = json.dumps(canonical_config_dict(config), sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:12]


@dataclass
class RunInputs:
    """Everything a per-seed run needs, loaded and featurized once."""

    train_ds: Dataset
    eval_ds: Dataset
    embeddings: Mapping
    train_features: dict
    eval_features: dict
    aux: AuxTask | None
    tag_vocab: TagVocabulary | None
    tfidf_model: TfidfModel | None


def _fit_and_featurize(
    config: ExperimentConfig,
    dataset: Dataset,
    texts: Mapping[str, str],
    annotations: Mapping[str, AnnotationDoc] | None,
    tag_vocab: TagVocabulary | None,
    tfidf_model: TfidfModel | None,
) -> dict:
    return {
        pair.pair_id: feature_vector_for(
            pair.pair_id, texts, annotations, tag_vocab, tfidf_model, config.features
        )
        for pair in dataset.pairs
    }


def _load_aux(config: ExperimentConfig) -> AuxTask | None:
    if config.pretrain == "none":
        return None
    paths = config.paths
    if config.pretrain == "sts":
        if paths.aux_sts is None:
            raise ConfigError("pretrain=sts requires aux.sts path")
        examples = load_sts(paths.aux_sts)
    else:
        if paths.aux_ibm30k is None:
            raise ConfigError("pretrain=ibm30k requires aux.ibm30k path")
        examples = load_ibm30k(paths.aux_ibm30k)
    if paths.aux_embeddings is None:
        raise ConfigError("pretraining requires aux.embeddings path")
    aux_embeddings = load_embeddings(paths.aux_embeddings)

    texts = {ex.id: aux_text(ex, separator=config.separator) for ex in examples}
    annotations = None
    tag_vocab = None
    tfidf_model = None
    if config.feature in (FeatureKind.DEP, FeatureKind.POS):
        if paths.aux_annotations is None:
            raise ConfigError("tag features with pretraining require aux.annotations path")
        annotations = load_annotations(paths.aux_annotations)
        kind = TagKind.DEP if config.feature is FeatureKind.DEP else TagKind.POS
        tag_vocab = build_tag_vocab(
            [annotations[ex.id] for ex in examples if ex.id in annotations], kind
        )
    elif config.feature is FeatureKind.TFIDF:
        tfidf_model = fit_tfidf(texts.values(), config.features)
    features = {
        ex.id: feature_vector_for(
            ex.id, texts, annotations, tag_vocab, tfidf_model, config.features
        )
        for ex in examples
    }
    return AuxTask(examples=tuple(examples), embeddings=aux_embeddings, features=features)


def prepare_inputs(config: ExperimentConfig) -> RunInputs:
    """Load corpora and embeddings, fit feature models on train, featurize."""
    train_ds = load_argkp(config.paths.corpus_dir, Split.TRAIN)
    eval_ds = load_argkp(config.paths.corpus_dir, config.eval_split)
    embeddings = load_embeddings(config.paths.embeddings)

    train_texts = pair_texts(train_ds, config.include_topic, separator=config.separator)
    eval_texts = pair_texts(eval_ds, config.include_topic, separator=config.separator)

    annotations = None
    tag_vocab = None
    tfidf_model = None
    if config.feature in (FeatureKind.DEP, FeatureKind.POS):
        if config.paths.annotations is None:
            raise ConfigError("tag features require the annotations path")
        annotations = load_annotations(config.paths.annotations)
        kind = TagKind.DEP if config.feature is FeatureKind.DEP else TagKind.POS
        train_docs = []
        for pair in train_ds.pairs:
            if pair.pair_id not in annotations:
                raise DataError(f"missing annotation for pair {pair.pair_id!r}")
            train_docs.append(annotations[pair.pair_id])
        tag_vocab = build_tag_vocab(train_docs, kind)
    elif config.feature is FeatureKind.TFIDF:
        tfidf_model = fit_tfidf(train_texts.values(), config.features)

    aux = _load_aux(config)
    if (
        aux is not None
        and config.feature is FeatureKind.TFIDF
        and aux.examples
        and next(iter(aux.features.values())).dim != tfidf_model.dim
    ):
        aux_dim = next(iter(aux.features.values())).dim
        raise ConfigError(
            f"tf-idf vocabulary sizes differ between corpora (main "
            f"{tfidf_model.dim}, auxiliary {aux_dim}); set features.vocab_cap "
            f"to at most {min(tfidf_model.dim, aux_dim)} so both corpora fill it"
        )

    return RunInputs(
        train_ds=train_ds,
        eval_ds=eval_ds,
        embeddings=embeddings,
        train_features=_fit_and_featurize(
            config, train_ds, train_texts, annotations, tag_vocab, tfidf_model
        ),
        eval_features=_fit_and_featurize(
            config, eval_ds, eval_texts, annotations, tag_vocab, tfidf_model
        ),
        aux=aux,
        tag_vocab=tag_vocab,
        tfidf_model=tfidf_model,
    )


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    run_dir: Path
    per_seed: dict[int, dict]
    aggregates: dict[str, dict[str, SeedAggregate]]  # method -> policy -> aggregate

    def aggregate(self, method: EvalMethod, policy: LabelPolicy) -> SeedAggregate:
        return self.aggregates[method.value][policy.value]


def _write_predictions(path: Path, eval_ds: Dataset, predictions: Mapping[str, float]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["arg_id", "key_point_id", "score"])
        for pair in eval_ds.pairs:
            writer.writerow([pair.argument_id, pair.keypoint_id, repr(predictions[pair.pair_id])])


def read_predictions(path: str | Path) -> dict[str, float]:
    """Read a predictions CSV back into a pair_id -> score map."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing predictions file: {path}")
    out: dict[str, float] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for col in ("arg_id", "key_point_id", "score"):
            if col not in (reader.fieldnames or []):
                raise DataError(f"{path}: missing column {col!r}")
        for row in reader:
            try:
                score = float(row["score"])
            except (TypeError, ValueError):
                raise DataError(f"{path}: malformed score {row['score']!r}") from None
            out[f"{row['arg_id']}::{row['key_point_id']}"] = score
    return out


def _dump_json(path: Path, obj: object) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def run_experiment(config: ExperimentConfig, *, inputs: RunInputs | None = None) -> ExperimentResult:
    """End to end: load, featurize, (pretrain +) train or boost, predict,
    evaluate under both policies and both methods, aggregate across seeds."""
    if config.pretrain != "none" and config.train.epochs_pretrain < 1:
        raise ConfigError("pretraining requested but epochs_pretrain < 1")
    if inputs is None:
        inputs = prepare_inputs(config)
    run_dir = config.out_dir / config_hash(config)
    run_dir.mkdir(parents=True, exist_ok=True)
    _dump_json(run_dir / "config.json", canonical_config_dict(config))
    if inputs.tag_vocab is not None:
        save_tag_vocab(inputs.tag_vocab, run_dir / "tag_vocab.json")
    if inputs.tfidf_model is not None:
        save_tfidf(inputs.tfidf_model, run_dir / "tfidf.json")

    per_seed: dict[int, dict] = {}
    for seed in config.seeds:
        seed_dir = run_dir / f"seed_{seed}"
        seed_dir.mkdir(exist_ok=True)
        train_cfg = replace(config.train, seed=seed)
        aux = inputs.aux if config.pretrain != "none" else None
        if config.boosting:
            boost_cfg = replace(config.boost, base=train_cfg)
            model = boost_train(
                inputs.train_ds.pairs,
                inputs.embeddings,
                inputs.train_features,
                boost_cfg,
                variant=config.variant,
                n_pool_layers=config.n_pool_layers,
                feature_config=config.features,
            )
            model.save(seed_dir / "model.json")
            predictions = boost_predict(
                model, inputs.eval_ds.pairs, inputs.embeddings, inputs.eval_features
            )
        else:
            model = train(
                inputs.train_ds.pairs,
                inputs.embeddings,
                inputs.train_features,
                train_cfg,
                aux=aux,
                variant=config.variant,
                n_pool_layers=config.n_pool_layers,
                feature_config=config.features,
            )
            model.save(seed_dir / "model.json")
            predictions = predict(
                model, inputs.eval_ds.pairs, inputs.embeddings, inputs.eval_features
            )
        _write_predictions(seed_dir / "predictions.csv", inputs.eval_ds, predictions)
        scored = scored_from_predictions(inputs.eval_ds.pairs, predictions)
        report = full_report(scored, best_match=config.best_match)
        _dump_json(seed_dir / "report.json", {"note": UNDECIDED_NOTE, "seed": seed, **report})
        per_seed[seed] = report

    aggregates: dict[str, dict[str, SeedAggregate]] = {}
    for method in EvalMethod:
        aggregates[method.value] = {}
        for policy in LabelPolicy:
            values = [per_seed[s][method.value][policy.value]["map"] for s in config.seeds]
            if any(v is None for v in values):
                raise DataError(f"undefined mAP for {method.value}/{policy.value}")
            aggregates[method.value][policy.value] = aggregate_seeds(values)

    _dump_json(
        run_dir / "report.json",
        {
            "note": UNDECIDED_NOTE,
            "model": config.model_label,
            "config_hash": config_hash(config),
            "per_seed": {str(s): per_seed[s] for s in config.seeds},
            "aggregate": {
                method: {
                    policy: {"mean": agg.mean, "std": agg.std, "n_seeds": agg.n_seeds}
                    for policy, agg in by_policy.items()
                }
                for method, by_policy in aggregates.items()
            },
        },
    )
    result = ExperimentResult(
        config=config, run_dir=run_dir, per_seed=per_seed, aggregates=aggregates
    )
    (run_dir / "report.md").write_text(_run_markdown(result), encoding="utf-8")
    return result


def _run_markdown(result: ExperimentResult) -> str:
    lines = [
        f"# Run {config_hash(result.config)} — {result.config.model_label}",
        "",
        f"> {UNDECIDED_NOTE}",
        "",
        "| Method | mAP Strict | mAP Relaxed |",
        "| --- | --- | --- |",
    ]
    for method in EvalMethod:
        strict = result.aggregate(method, LabelPolicy.STRICT).render()
        relaxed = result.aggregate(method, LabelPolicy.RELAXED).render()
        lines.append(f"| {method.value} | {strict} | {relaxed} |")
    lines.append("")
    return "\n".join(lines)


@dataclass(frozen=True)
class GridSpec:
    """Cartesian experiment grid; unset axes fall back to the base config."""

    feature: tuple[FeatureKind, ...] = ()
    pretrain: tuple[str, ...] = ()
    include_topic: tuple[bool, ...] = ()
    n_pool_layers: tuple[int, ...] = ()
    boosting: tuple[bool, ...] = ()

    @classmethod
    def from_dict(cls, raw: Mapping[str, object]) -> "GridSpec":
        try:
            return cls(
                feature=tuple(FeatureKind(v) for v in raw.get("feature", ())),
                pretrain=tuple(str(v) for v in raw.get("pretrain", ())),
                include_topic=tuple(bool(v) for v in raw.get("include_topic", ())),
                n_pool_layers=tuple(int(v) for v in raw.get("n_pool_layers", ())),
                boosting=tuple(bool(v) for v in raw.get("boosting", ())),
            )
        except ValueError as exc:
            raise ConfigError(f"bad grid spec: {exc}") from None


@dataclass(frozen=True)
class ReportRow:
    label: str
    cells: Mapping[str, SeedAggregate | None]
    note: str | None = None


def _cell_columns() -> list[str]:
    return ["mAP Strict", "mAP Relaxed"]


def _result_row(label: str, result: ExperimentResult, method: EvalMethod) -> ReportRow:
    return ReportRow(
        label=label,
        cells={
            "mAP Strict": result.aggregate(method, LabelPolicy.STRICT),
            "mAP Relaxed": result.aggregate(method, LabelPolicy.RELAXED),
        },
    )


def grid_cells(base: ExperimentConfig, spec: GridSpec) -> list[ExperimentConfig]:
    """Expand the grid product into per-cell configs, in deterministic order."""
    axes = [
        spec.feature or (base.feature,),
        spec.pretrain or (base.pretrain,),
        spec.include_topic or (base.include_topic,),
        spec.n_pool_layers or (base.n_pool_layers,),
        spec.boosting or (base.boosting,),
    ]
    cells = []
    for feature, pretrain, include_topic, n_pool, boosting in itertools.product(*axes):
        cells.append(
            replace(
                base,
                feature=feature,
                features=replace(base.features, kind=feature),
                pretrain=pretrain,
                include_topic=include_topic,
                n_pool_layers=n_pool,
                boosting=boosting,
            )
        )
    return cells


def cell_label(config: ExperimentConfig) -> str:
    return (
        f"{config.model_label}, feature={config.feature.value}, "
        f"pretrain={config.pretrain}, topic={'y' if config.include_topic else 'n'}, "
        f"pool={config.n_pool_layers}, boost={'y' if config.boosting else 'n'}"
    )


def run_grid(base: ExperimentConfig, spec: GridSpec) -> list[ReportRow]:
    """Run every grid cell; failed cells render as '--' with the reason
    footnoted and never affect other cells."""
    rows = []
    for config in grid_cells(base, spec):
        label = cell_label(config)
        try:
            result = run_experiment(config)
        except KpmatchError as exc:
            rows.append(
                ReportRow(label=label, cells={c: None for c in _cell_columns()}, note=str(exc))
            )
            continue
        rows.append(_result_row(label, result, EvalMethod.DEFAULT))
    return rows


ABLATION_VARIANTS = (
    ("baseline", {}),
    ("no-topic", {"include_topic": False}),
    ("pool-2", {"n_pool_layers": 2}),
    ("pool-3", {"n_pool_layers": 3}),
    ("boosted", {"boosting": True}),
)


def ablate(base: ExperimentConfig) -> list[ReportRow]:
    """The three ablations (topic exclusion, hidden-state averaging,
    boosting) against the baseline, as delta rows."""
    rows = []
    baseline_result = None
    for label, changes in ABLATION_VARIANTS:
        config = replace(base, **changes) if changes else base
        result = run_experiment(config)
        row = _result_row(label, result, EvalMethod.DEFAULT)
        if label == "baseline":
            baseline_result = result
            rows.append(row)
            continue
        deltas = {}
        for policy, column in ((LabelPolicy.STRICT, "mAP Strict"), (LabelPolicy.RELAXED, "mAP Relaxed")):
            delta = result.aggregate(EvalMethod.DEFAULT, policy).mean - baseline_result.aggregate(
                EvalMethod.DEFAULT, policy
            ).mean
            deltas[column] = delta
        note = "; ".join(f"Δ{col}={deltas[col]:+.3f}" for col in _cell_columns())
        rows.append(ReportRow(label=label, cells=row.cells, note=note))
    return rows


def emit_report(
    rows: Sequence[ReportRow],
    fmt: str,
    *,
    columns: Sequence[str] | None = None,
    path: str | Path | None = None,
) -> str:
    """Render report rows as markdown (bold column-best), CSV, or JSON."""
    if not rows:
        raise ValueError("emit_report requires at least one row")
    columns = list(columns or _cell_columns())
    if fmt == "markdown":
        best: dict[str, float] = {}
        for col in columns:
            means = [row.cells[col].mean for row in rows if row.cells.get(col) is not None]
            if means:
                best[col] = max(means)
        lines = ["| Model | " + " | ".join(columns) + " |"]
        lines.append("| --- |" + " --- |" * len(columns))
        notes = []
        for row in rows:
            cells = []
            for col in columns:
                agg = row.cells.get(col)
                if agg is None:
                    cells.append("--")
                else:
                    rendered = agg.render()
                    if best.get(col) is not None and agg.mean == best[col]:
                        rendered = f"**{rendered}**"
                    cells.append(rendered)
            lines.append(f"| {row.label} | " + " | ".join(cells) + " |")
            if row.note:
                notes.append(f"[^{len(notes) + 1}]: {row.label}: {row.note}")
        text = "\n".join(lines + ([""] + notes if notes else [])) + "\n"
    elif fmt == "csv":
        buffer = io.StringIO()
        writer = csv.writer(buffer)
        writer.writerow(
            ["label"] + [part for c in columns for part in (f"{c} mean", f"{c} std", f"{c} n")]
        )
        for row in rows:
            cells: list[object] = [row.label]
            for col in columns:
                agg = row.cells.get(col)
                cells += ["--", "--", "--"] if agg is None else [agg.mean, agg.std, agg.n_seeds]
            writer.writerow(cells)
        text = buffer.getvalue()
    elif fmt == "json":
        obj = {
            "columns": columns,
            "rows": [
                {
                    "label": row.label,
                    "note": row.note,
                    "cells": {
                        col: None
                        if row.cells.get(col) is None
                        else {
                            "mean": row.cells[col].mean,
                            "std": row.cells[col].std,
                            "n_seeds": row.cells[col].n_seeds,
                        }
                        for col in columns
                    },
                }
                for row in rows
            ],
        }
        text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_table_report(path: str | Path) -> tuple[list[str], list[ReportRow]]:
    """Parse emit_report's JSON output back into rows (round-trip reader)."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    rows = []
    for row in obj["rows"]:
        cells = {
            col: None
            if cell is None
            else SeedAggregate(mean=cell["mean"], std=cell["std"], n_seeds=cell["n_seeds"])
            for col, cell in row["cells"].items()
        }
        rows.append(ReportRow(label=row["label"], cells=cells, note=row.get("note")))
    return list(obj["columns"]), rows
