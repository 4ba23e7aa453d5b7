"""Synthetic corpus generator: a full pipeline input set with no downloads.

Builds a small ArgKP-shaped corpus (3 topics x 2 stances) with a planted
match structure, plus annotations, embedding files for both input variants,
and auxiliary pretraining files. Three profiles exist:

* ``lexical``      30 train arguments / 9 keypoints; matched pairs share the
                   keypoint's signature words (a tf-idf-learnable signal)
                   while embeddings are pure noise. The bundled test fixture.
* ``topical``      embeddings carry the label signal, but the no_topic
                   variant has it erased on a fixed subset of pairs, so
                   including the topic is strictly more informative.
* ``hard-cluster`` two of the six groups encode the label on a different
                   embedding axis and contradict the easy groups' axis;
                   single heads plateau there, which boosting then targets.

Everything is deterministic for a fixed (profile, seed): files are written
with rounded decimals and stable ordering, so regeneration is byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import zlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from kpmatch.corpus import DEFAULT_SEPARATOR, Split, expand_input_text

EMBED_DIM = 12
N_LAYERS = 4

TOPICS = [
    ("renewable solar power", "solar"),
    ("mandatory school uniforms", "uniforms"),
    ("commercial space travel", "space"),
]
STANCES = [1, -1]

SIGNATURES = [
    ("amber", "basalt"),
    ("cobalt", "dune"),
    ("ember", "fjord"),
    ("garnet", "harbor"),
    ("indigo", "juniper"),
    ("krypton", "lagoon"),
    ("marble", "nectar"),
    ("onyx", "pearl"),
    ("quartz", "russet"),
    ("saffron", "thistle"),
    ("umber", "velvet"),
    ("walnut", "zephyr"),
]
ADVERBS = ["clearly", "truly", "indeed", "surely", "often", "mostly"]
FILLERS = ["policy", "budget", "safety", "culture", "future", "region"]

_POS_DEP_CLOSED = {
    "the": ("DET", "det"),
    "this": ("DET", "det"),
    "is": ("AUX", "aux"),
    "on": ("ADP", "prep"),
    "about": ("ADP", "prep"),
    "[sep]": ("SYM", "punct"),
}
_NOUN_DEPS = ["nsubj", "dobj", "pobj", "compound"]
_VERBS = {"drives", "matters", "hinges", "requires"}
_ADJS = {"decisive", "renewable", "mandatory", "commercial"}


@dataclass(frozen=True)
class Profile:
    name: str
    train_args_per_group: int
    eval_args_per_group: int
    kps_per_group: tuple[int, ...]
    embedding_mode: str  # noise | topical | hard_cluster
    undecided_rate: float


PROFILES = {
    "lexical": Profile("lexical", 5, 3, (2, 2, 2, 1, 1, 1), "noise", 0.10),
    "topical": Profile("topical", 4, 3, (2, 2, 2, 2, 2, 2), "topical", 0.0),
    "hard-cluster": Profile("hard-cluster", 6, 3, (2, 2, 2, 2, 2, 2), "hard_cluster", 0.0),
}


@dataclass(frozen=True)
class SyntheticPaths:
    root: Path
    corpus_dir: Path
    annotations: Path
    embeddings: Path
    aux_sts: Path
    aux_ibm30k: Path
    aux_annotations: Path
    aux_embeddings: Path
    config: Path


def _stable_pct(key: str) -> int:
    """Deterministic, seed-independent hash bucket in [0, 100)."""
    return zlib.crc32(key.encode("utf-8")) % 100


def _tags_for(token: str) -> tuple[str, str]:
    low = token.lower()
    if low in _POS_DEP_CLOSED:
        return _POS_DEP_CLOSED[low]
    if low in _VERBS:
        return "VERB", "ROOT"
    if low in _ADJS:
        return "ADJ", "amod"
    if low in ADVERBS:
        return "ADV", "advmod"
    return "NOUN", _NOUN_DEPS[zlib.crc32(low.encode()) % len(_NOUN_DEPS)]


def _annotate(text: str) -> list[tuple[str, str, str]]:
    return [(tok, *_tags_for(tok)) for tok in text.split()]


@dataclass
class _Pair:
    arg_id: str
    kp_id: str
    topic: str
    stance: int
    is_match: bool
    labeled: bool
    group_index: int

    @property
    def pair_id(self) -> str:
        return f"{self.arg_id}::{self.kp_id}"


@dataclass
class SyntheticBundle:
    """In-memory view of everything generate() writes to disk."""

    profile: Profile
    seed: int
    arguments: dict[Split, list[tuple[str, str, str, int]]]  # id, text, topic, stance
    keypoints: dict[Split, list[tuple[str, str, str, int]]]
    labels: dict[Split, list[tuple[str, str, int]]]
    pairs: dict[Split, list[_Pair]]
    embeddings: list[dict]
    annotations: list[tuple[str, str]]  # (doc_id, text)
    sts_rows: list[tuple[str, str, str, float]]
    ibm_rows: list[tuple[str, str, float]]
    aux_annotations: list[tuple[str, str]]
    aux_embeddings: list[dict]


def _embed_dim(mode: str) -> int:
    return 4 if mode == "hard_cluster" else EMBED_DIM


def _embed_layers(
    rng: np.random.Generator,
    mode: str,
    signal: float,
    group_index: int,
    ambiguous: bool,
    with_topic: bool,
) -> list[list[float]]:
    # Pure-noise embeddings stay small so planted text features can win.
    base_scale = 0.1 if mode == "noise" else 0.25
    layers = []
    for layer in range(N_LAYERS):
        vec = rng.normal(0.0, base_scale, size=_embed_dim(mode))
        final = layer == N_LAYERS - 1
        gain = 1.0 if final else 0.4
        if mode == "topical":
            carries = with_topic or not ambiguous
            vec[0] = gain * (signal if carries else 0.0) + rng.normal(0.0, 0.15)
        elif mode == "hard_cluster":
            # Both stances of the third topic anti-correlate with the easy
            # groups' signal axis; a weak cluster-indicator axis makes the
            # flip learnable, but only once training focuses on the cluster.
            hard = group_index >= 4
            vec[0] = gain * (-0.9 * signal if hard else signal) + rng.normal(0.0, 0.1)
            vec[1] = gain * (0.6 if hard else 0.0) + rng.normal(0.0, 0.1)
        layers.append([round(float(x), 5) for x in vec])
    return layers


def build(profile_name: str, seed: int) -> SyntheticBundle:
    profile = PROFILES[profile_name]
    rng = np.random.default_rng(seed)

    groups = [
        (topic_text, short, stance)
        for topic_text, short in TOPICS
        for stance in STANCES
    ]

    keypoints: list[tuple[str, str, str, int]] = []
    kp_by_group: dict[int, list[tuple[str, str]]] = {}
    sig_iter = iter(SIGNATURES)
    for g, (topic_text, short, stance) in enumerate(groups):
        stance_tag = "pro" if stance == 1 else "con"
        kp_by_group[g] = []
        for j in range(profile.kps_per_group[g]):
            sig1, sig2 = next(sig_iter)
            kp_id = f"kp_{short}_{stance_tag}_{j}"
            text = f"the {sig1} {sig2} factor is decisive"
            keypoints.append((kp_id, text, topic_text, stance))
            kp_by_group[g].append((kp_id, text))

    arguments: dict[Split, list[tuple[str, str, str, int]]] = {}
    labels: dict[Split, list[tuple[str, str, int]]] = {}
    pairs: dict[Split, list[_Pair]] = {}
    split_sizes = {
        Split.TRAIN: profile.train_args_per_group,
        Split.DEV: profile.eval_args_per_group,
        Split.TEST: profile.eval_args_per_group,
    }

    for split, n_args in split_sizes.items():
        arguments[split] = []
        labels[split] = []
        pairs[split] = []
        for g, (topic_text, short, stance) in enumerate(groups):
            stance_tag = "pro" if stance == 1 else "con"
            group_kps = kp_by_group[g]
            for i in range(n_args):
                matched_kp, matched_text = group_kps[i % len(group_kps)]
                sig_words = matched_text.split()[1:3]
                arg_id = f"arg_{split.value}_{short}_{stance_tag}_{i}"
                text = (
                    f"{ADVERBS[i % len(ADVERBS)]} the {sig_words[0]} {sig_words[1]} "
                    f"factor drives this {FILLERS[(g + i) % len(FILLERS)]} debate"
                )
                arguments[split].append((arg_id, text, topic_text, stance))
                for kp_id, _ in group_kps:
                    is_match = kp_id == matched_kp
                    drop = (
                        split is Split.TRAIN
                        and profile.undecided_rate > 0
                        and rng.random() < profile.undecided_rate
                    )
                    labeled = not drop
                    if labeled:
                        labels[split].append((arg_id, kp_id, 1 if is_match else 0))
                    pairs[split].append(
                        _Pair(
                            arg_id=arg_id,
                            kp_id=kp_id,
                            topic=topic_text,
                            stance=stance,
                            is_match=is_match,
                            labeled=labeled,
                            group_index=g,
                        )
                    )

    kp_text = {kp_id: text for kp_id, text, _, _ in keypoints}
    arg_text = {
        arg_id: text for split in split_sizes for arg_id, text, _, _ in arguments[split]
    }

    annotations: list[tuple[str, str]] = []
    embeddings: list[dict] = []
    for split in split_sizes:
        for pair in pairs[split]:
            with_topic_text = expand_input_text(
                kp_text[pair.kp_id], arg_text[pair.arg_id], pair.topic, True
            )
            annotations.append((pair.pair_id, with_topic_text))
            signal = 1.0 if pair.is_match else -1.0
            ambiguous = _stable_pct(pair.pair_id) < 40
            for variant, with_topic in (("with_topic", True), ("no_topic", False)):
                embeddings.append(
                    {
                        "pair_id": pair.pair_id,
                        "variant": variant,
                        "layers": _embed_layers(
                            rng,
                            profile.embedding_mode,
                            signal,
                            pair.group_index,
                            ambiguous,
                            with_topic,
                        ),
                    }
                )

    # Auxiliary pretraining corpora, built from the same vocabulary. The STS
    # score is a scaled token-overlap so targets correlate with the texts.
    sts_rows: list[tuple[str, str, str, float]] = []
    ibm_rows: list[tuple[str, str, float]] = []
    aux_annotations: list[tuple[str, str]] = []
    aux_embeddings: list[dict] = []
    train_args = arguments[Split.TRAIN]
    for i in range(24):
        arg_id, a_text, topic_text, _ = train_args[i % len(train_args)]
        kp_id, k_text, _, _ = keypoints[(i * 5 + seed) % len(keypoints)]
        shared = len(set(a_text.split()) & set(k_text.split()))
        union = len(set(a_text.split()) | set(k_text.split()))
        score = round(5.0 * shared / union, 1)
        sts_rows.append((f"sts-{i:04d}", a_text, k_text, score))
        ibm_rows.append((a_text, topic_text, round(float(rng.uniform(0.0, 1.0)), 3)))

    for ex_id, a_text, b_text in [
        (row[0], row[1], row[2]) for row in sts_rows
    ] + [(f"ibm30k-{i:05d}", row[0], row[1]) for i, row in enumerate(ibm_rows)]:
        text = f"{a_text} {DEFAULT_SEPARATOR} {b_text}"
        aux_annotations.append((ex_id, text))
        aux_embeddings.append(
            {
                "pair_id": ex_id,
                "variant": "no_topic",
                "layers": [
                    [round(float(x), 5) for x in rng.normal(0.0, 0.5, size=EMBED_DIM)]
                    for _ in range(N_LAYERS)
                ],
            }
        )

    return SyntheticBundle(
        profile=profile,
        seed=seed,
        arguments=arguments,
        keypoints={split: list(keypoints) for split in split_sizes},
        labels=labels,
        pairs=pairs,
        embeddings=embeddings,
        annotations=annotations,
        sts_rows=sts_rows,
        ibm_rows=ibm_rows,
        aux_annotations=aux_annotations,
        aux_embeddings=aux_embeddings,
    )


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_conllu(path: Path, docs: list[tuple[str, str]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, text in docs:
            fh.write(f"# doc_id = {doc_id}\n")
            for i, (form, pos, dep) in enumerate(_annotate(text), start=1):
                fh.write(f"{i}\t{form}\t{pos}\t{dep}\n")
            fh.write("\n")


def _write_jsonl(path: Path, records: list[dict]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, sort_keys=True) + "\n")


def generate(profile_name: str, seed: int, out_dir: str | Path) -> SyntheticPaths:
    """Write the full synthetic input set under out_dir (byte-deterministic)."""
    out = Path(out_dir)
    corpus_dir = out / "corpus"
    corpus_dir.mkdir(parents=True, exist_ok=True)
    bundle = build(profile_name, seed)

    for split in (Split.TRAIN, Split.DEV, Split.TEST):
        _write_csv(
            corpus_dir / f"arguments_{split.value}.csv",
            ["arg_id", "argument", "topic", "stance"],
            bundle.arguments[split],
        )
        _write_csv(
            corpus_dir / f"key_points_{split.value}.csv",
            ["key_point_id", "key_point", "topic", "stance"],
            bundle.keypoints[split],
        )
        _write_csv(
            corpus_dir / f"labels_{split.value}.csv",
            ["arg_id", "key_point_id", "label"],
            bundle.labels[split],
        )

    paths = SyntheticPaths(
        root=out,
        corpus_dir=corpus_dir,
        annotations=out / "annotations.conllu",
        embeddings=out / "embeddings.jsonl",
        aux_sts=out / "aux_sts.tsv",
        aux_ibm30k=out / "aux_ibm30k.csv",
        aux_annotations=out / "aux_annotations.conllu",
        aux_embeddings=out / "aux_embeddings.jsonl",
        config=out / "config.json",
    )
    _write_conllu(paths.annotations, bundle.annotations)
    _write_jsonl(paths.embeddings, bundle.embeddings)
    _write_conllu(paths.aux_annotations, bundle.aux_annotations)
    _write_jsonl(paths.aux_embeddings, bundle.aux_embeddings)

    with open(paths.aux_sts, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, delimiter="\t")
        writer.writerow(["id", "sentence1", "sentence2", "score"])
        writer.writerows(bundle.sts_rows)
    _write_csv(paths.aux_ibm30k, ["argument", "topic", "MACE-P"], bundle.ibm_rows)

    config = {
        "corpus_dir": "corpus",
        "annotations": "annotations.conllu",
        "embeddings": "embeddings.jsonl",
        "aux": {
            "sts": "aux_sts.tsv",
            "ibm30k": "aux_ibm30k.csv",
            "annotations": "aux_annotations.conllu",
            "embeddings": "aux_embeddings.jsonl",
        },
        "feature": "none",
        "include_topic": True,
        "n_pool_layers": 1,
        "pretrain": "none",
        "boosting": False,
        "seeds": [1],
        "train": {
            "learning_rate": 0.1,
            "epochs_pretrain": 0,
            "epochs_finetune": 50,
            "batch_size": 16,
            "hidden_dims": [32, 16],
        },
        "boost": {"n_models": 3, "sample_k": 60, "error_threshold": 0.5},
        "features": {"max_tokens": 64, "vocab_cap": 64, "lowercase": True},
        "eval": {"split": "test", "best_match": True},
        "out_dir": "runs",
    }
    paths.config.write_text(json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description="generate a synthetic pipeline corpus")
    parser.add_argument("--profile", choices=sorted(PROFILES), default="lexical")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    paths = generate(args.profile, args.seed, args.out)
    print(f"wrote synthetic corpus ({args.profile}, seed {args.seed}) under {paths.root}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
