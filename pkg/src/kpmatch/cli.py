"""Command-line entry point.

Subcommands: ingest, featurize, train, predict, evaluate, boost, ablate,
grid. Exit codes: 0 success, 1 configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from kpmatch.corpus import Split, dataset_stats, load_argkp, load_embeddings
from kpmatch.errors import ConfigError, DataError, KpmatchError
from kpmatch.evaluation import (
    EvalMethod,
    LabelPolicy,
    full_report,
    map_score,
    scored_from_predictions,
)
from kpmatch.experiment import (
    GridSpec,
    UNDECIDED_NOTE,
    emit_report,
    load_config,
    prepare_inputs,
    read_predictions,
    run_experiment,
    run_grid,
    ablate as run_ablations,
)
from kpmatch.features import FeatureKind, save_tag_vocab, save_tfidf
from kpmatch.scorer import ModelArtifact, predict


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="experiment config JSON")
    parser.add_argument("--seeds", help="comma-separated seed list, overrides the config")
    parser.add_argument("--out", help="output directory, overrides the config")


def _parse_seeds(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in raw.split(",") if s.strip())
    except ValueError:
        raise ConfigError(f"bad --seeds value {raw!r}") from None


def _config_from_args(args: argparse.Namespace):
    config = load_config(args.config)
    if getattr(args, "seeds", None):
        config = replace(config, seeds=_parse_seeds(args.seeds))
    if getattr(args, "out", None):
        config = replace(config, out_dir=Path(args.out))
    if getattr(args, "no_best_match", False):
        config = replace(config, best_match=False)
    return config


def _cmd_ingest(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    for split in Split:
        try:
            ds = load_argkp(config.paths.corpus_dir, split)
        except DataError as exc:
            print(f"{split.value}: not loadable ({exc})")
            continue
        stats = dataset_stats(ds)
        print(
            f"{split.value}: {stats.n_args} arguments, {stats.n_kps} keypoints, "
            f"{stats.n_pairs} expanded pairs, {stats.n_topics} topics"
        )
    embeddings = load_embeddings(config.paths.embeddings)
    print(f"embeddings: {len(embeddings)} records")
    return 0


def _cmd_featurize(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    out = Path(args.out) if args.out else config.out_dir
    out.mkdir(parents=True, exist_ok=True)
    inputs = prepare_inputs(config)
    if inputs.tag_vocab is not None:
        save_tag_vocab(inputs.tag_vocab, out / "tag_vocab.json")
        print(f"wrote {out / 'tag_vocab.json'} ({len(inputs.tag_vocab.rank_of)} tags)")
    if inputs.tfidf_model is not None:
        save_tfidf(inputs.tfidf_model, out / "tfidf.json")
        print(f"wrote {out / 'tfidf.json'} ({inputs.tfidf_model.dim} terms)")
    if config.feature is FeatureKind.NONE:
        print("feature kind is none; nothing to fit")
    return 0


def _run_and_print(config) -> int:
    result = run_experiment(config)
    print(f"run dir: {result.run_dir}")
    for method in EvalMethod:
        strict = result.aggregate(method, LabelPolicy.STRICT).render()
        relaxed = result.aggregate(method, LabelPolicy.RELAXED).render()
        print(f"{method.value}: mAP strict {strict}, mAP relaxed {relaxed}")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    return _run_and_print(replace(config, boosting=False))


def _cmd_boost(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    return _run_and_print(replace(config, boosting=True))


def _cmd_predict(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    inputs = prepare_inputs(config)
    model = ModelArtifact.load(args.model)
    predictions = predict(model, inputs.eval_ds.pairs, inputs.embeddings, inputs.eval_features)
    out = Path(args.out) if args.out else config.out_dir / "predictions.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="") as fh:
        fh.write("arg_id,key_point_id,score\n")
        for pair in inputs.eval_ds.pairs:
            fh.write(f"{pair.argument_id},{pair.keypoint_id},{predictions[pair.pair_id]!r}\n")
    print(f"wrote {out} ({len(predictions)} scores)")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    eval_ds = load_argkp(config.paths.corpus_dir, config.eval_split)
    predictions = read_predictions(args.predictions)
    scored = scored_from_predictions(eval_ds.pairs, predictions)
    print(f"note: {UNDECIDED_NOTE}")
    methods = [EvalMethod(args.method)] if args.method else list(EvalMethod)
    policies = (
        list(LabelPolicy)
        if args.policy in (None, "both")
        else [LabelPolicy(args.policy)]
    )
    for method in methods:
        for policy in policies:
            report = map_score(scored, policy, method, best_match=config.best_match)
            value = report.map_strict if policy is LabelPolicy.STRICT else report.map_relaxed
            shown = "undefined" if value is None else f"{value:.6f}"
            print(f"{method.value}/{policy.value}: mAP {shown} over {report.n_groups} groups")
    if args.out:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        payload = {"note": UNDECIDED_NOTE, **full_report(scored, best_match=config.best_match)}
        out.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n", encoding="utf-8")
        print(f"wrote {out}")
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    rows = run_ablations(config)
    fmt = args.format
    out = Path(args.out) / f"ablation.{_ext(fmt)}" if args.out else None
    text = emit_report(rows, fmt, path=out)
    print(text, end="")
    if out:
        print(f"wrote {out}")
    return 0


def _cmd_grid(args: argparse.Namespace) -> int:
    config = _config_from_args(args)
    grid_path = Path(args.grid)
    if not grid_path.is_file():
        raise ConfigError(f"grid spec not found: {grid_path}")
    spec = GridSpec.from_dict(json.loads(grid_path.read_text(encoding="utf-8")))
    rows = run_grid(config, spec)
    fmt = args.format
    out = Path(args.out) / f"grid.{_ext(fmt)}" if args.out else None
    text = emit_report(rows, fmt, path=out)
    print(text, end="")
    if out:
        print(f"wrote {out}")
    return 0


def _ext(fmt: str) -> str:
    return {"markdown": "md", "csv": "csv", "json": "json"}[fmt]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kpmatch",
        description="keypoint-argument match scoring experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate and summarize the corpus")
    _add_common(p)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("featurize", help="fit and persist feature models")
    _add_common(p)
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("train", help="train, predict, and evaluate per seed")
    _add_common(p)
    p.add_argument("--no-best-match", action="store_true", dest="no_best_match")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("boost", help="boosted-ensemble training run")
    _add_common(p)
    p.add_argument("--no-best-match", action="store_true", dest="no_best_match")
    p.set_defaults(func=_cmd_boost)

    p = sub.add_parser("predict", help="score pairs with a saved model")
    _add_common(p)
    p.add_argument("--model", required=True, help="ModelArtifact JSON path")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate", help="evaluate a predictions CSV")
    _add_common(p)
    p.add_argument("--predictions", required=True)
    p.add_argument("--method", choices=[m.value for m in EvalMethod])
    p.add_argument("--policy", choices=["strict", "relaxed", "both"], default="both")
    p.add_argument("--no-best-match", action="store_true", dest="no_best_match")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("ablate", help="run the ablation suite against the baseline")
    _add_common(p)
    p.add_argument("--format", choices=["markdown", "csv", "json"], default="markdown")
    p.set_defaults(func=_cmd_ablate)

    p = sub.add_parser("grid", help="run a cartesian experiment grid")
    _add_common(p)
    p.add_argument("--grid", required=True, help="grid spec JSON")
    p.add_argument("--format", choices=["markdown", "csv", "json"], default="markdown")
    p.set_defaults(func=_cmd_grid)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except KpmatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
