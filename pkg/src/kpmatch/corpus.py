"""Corpus ingestion: main task CSVs, auxiliary corpora, annotations, embeddings.

All loaders are deterministic: records are sorted by id, so re-loading the
same directory yields identical in-memory datasets. Loaded objects are
immutable and safe to share across threads.

File formats
------------
* arguments CSV      header ``arg_id,argument,topic,stance``, stance in {1,-1}
* keypoints CSV      header ``key_point_id,key_point,topic,stance``
* labels CSV         header ``arg_id,key_point_id,label``, label in {0,1};
                     absent rows mean Undecided
* STS TSV            columns ``id,sentence1,sentence2,score``, score in [0,5]
* IBM-30k CSV        columns ``argument,topic,MACE-P`` (extra columns ignored)
* annotations        CoNLL-U subset: ``# doc_id = <id>`` comment, token lines
                     ``INDEX\\tFORM\\tUPOS\\tDEPREL``, blank line between
                     sentences, UTF-8
* embeddings JSONL   one object per line:
                     ``{"pair_id": str, "variant": "with_topic"|"no_topic",
                     "layers": [[...], ...]}``, layer order oldest to last
"""

from __future__ import annotations

import csv
import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import NamedTuple

import numpy as np

from kpmatch.errors import DataError

DEFAULT_SEPARATOR = "[SEP]"


class Stance(Enum):
    """Polarity of a text toward its topic, serialized as +1 / -1."""

    PRO = 1
    CON = -1

    @classmethod
    def from_int(cls, value: int) -> "Stance":
        if value == 1:
            return cls.PRO
        if value == -1:
            return cls.CON
        raise DataError(f"stance must be 1 or -1, got {value!r}")


class GoldLabel(Enum):
    MATCH = "match"
    NO_MATCH = "no_match"
    UNDECIDED = "undecided"


class Split(Enum):
    TRAIN = "train"
    DEV = "dev"
    TEST = "test"


class EmbeddingVariant(Enum):
    """Which input text the exported hidden states were computed from."""

    WITH_TOPIC = "with_topic"
    NO_TOPIC = "no_topic"


@dataclass(frozen=True)
class Argument:
    id: str
    text: str
    topic: str
    stance: Stance


@dataclass(frozen=True)
class KeyPoint:
    id: str
    text: str
    topic: str
    stance: Stance


@dataclass(frozen=True)
class LabeledPair:
    """One (argument, keypoint) candidate within a (topic, stance) group."""

    argument_id: str
    keypoint_id: str
    topic: str
    stance: Stance
    label: GoldLabel

    @property
    def pair_id(self) -> str:
        return pair_key(self.argument_id, self.keypoint_id)


def pair_key(argument_id: str, keypoint_id: str) -> str:
    """Canonical pair id used to key annotations and embedding records."""
    return f"{argument_id}::{keypoint_id}"


@dataclass(frozen=True)
class Dataset:
    """One split: arguments, keypoints, and the full expanded candidate set.

    ``pairs`` holds every same-(topic, stance) argument x keypoint candidate;
    pairs absent from the labels file carry GoldLabel.UNDECIDED.
    """

    split: Split
    arguments: Mapping[str, Argument]
    keypoints: Mapping[str, KeyPoint]
    pairs: tuple[LabeledPair, ...]

    def argument_of(self, pair: LabeledPair) -> Argument:
        return self.arguments[pair.argument_id]

    def keypoint_of(self, pair: LabeledPair) -> KeyPoint:
        return self.keypoints[pair.keypoint_id]


class DatasetStats(NamedTuple):
    n_args: int
    n_kps: int
    n_pairs: int
    n_topics: int


@dataclass(frozen=True)
class AuxExample:
    """A pretraining pair with a graded similarity target in [0, 1]."""

    id: str
    text_a: str
    text_b: str
    target: float


class Token(NamedTuple):
    surface: str
    pos_tag: str
    dep_tag: str


@dataclass(frozen=True)
class AnnotationDoc:
    doc_id: str
    tokens: tuple[Token, ...]


@dataclass(frozen=True, eq=False)
class EmbeddingRecord:
    """Per-pair hidden-state vectors, one row per exported layer, last = final."""

    pair_id: str
    variant: EmbeddingVariant
    layers: np.ndarray  # (n_layers, dim), float64

    @property
    def dim(self) -> int:
        return int(self.layers.shape[1])


def _read_csv_rows(path: Path, required: tuple[str, ...]) -> list[dict[str, str]]:
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        for col in required:
            if col not in header:
                raise DataError(f"{path}: missing column {col!r} (header: {header})")
        return list(reader)


def _parse_stance(raw: str, where: str) -> Stance:
    try:
        value = int(raw)
    except (TypeError, ValueError):
        raise DataError(f"{where}: stance must be an integer, got {raw!r}") from None
    return Stance.from_int(value)


def load_argkp(directory: str | Path, split: Split) -> Dataset:
    """Load one split and expand all same-(topic, stance) candidate pairs.

    Expects ``arguments_<split>.csv``, ``key_points_<split>.csv`` and
    ``labels_<split>.csv`` in ``directory``. Every label row must reference
    known ids whose topic and stance agree; candidates without a label row
    are marked Undecided.
    """
    directory = Path(directory)
    suffix = split.value

    arg_rows = _read_csv_rows(
        directory / f"arguments_{suffix}.csv", ("arg_id", "argument", "topic", "stance")
    )
    kp_rows = _read_csv_rows(
        directory / f"key_points_{suffix}.csv",
        ("key_point_id", "key_point", "topic", "stance"),
    )
    label_rows = _read_csv_rows(
        directory / f"labels_{suffix}.csv", ("arg_id", "key_point_id", "label")
    )

    arguments: dict[str, Argument] = {}
    for row in arg_rows:
        arg_id = row["arg_id"]
        if arg_id in arguments:
            raise DataError(f"duplicate arg_id {arg_id!r} in split {suffix}")
        text = (row["argument"] or "").strip()
        if not text:
            raise DataError(f"argument {arg_id!r} has empty text")
        arguments[arg_id] = Argument(
            id=arg_id,
            text=text,
            topic=row["topic"],
            stance=_parse_stance(row["stance"], f"argument {arg_id!r}"),
        )

    keypoints: dict[str, KeyPoint] = {}
    for row in kp_rows:
        kp_id = row["key_point_id"]
        if kp_id in keypoints:
            raise DataError(f"duplicate key_point_id {kp_id!r} in split {suffix}")
        text = (row["key_point"] or "").strip()
        if not text:
            raise DataError(f"keypoint {kp_id!r} has empty text")
        keypoints[kp_id] = KeyPoint(
            id=kp_id,
            text=text,
            topic=row["topic"],
            stance=_parse_stance(row["stance"], f"keypoint {kp_id!r}"),
        )

    labels: dict[tuple[str, str], GoldLabel] = {}
    for row in label_rows:
        arg_id, kp_id = row["arg_id"], row["key_point_id"]
        if arg_id not in arguments:
            raise DataError(f"labels file references unknown arg_id {arg_id!r}")
        if kp_id not in keypoints:
            raise DataError(f"labels file references unknown key_point_id {kp_id!r}")
        arg, kp = arguments[arg_id], keypoints[kp_id]
        if (arg.topic, arg.stance) != (kp.topic, kp.stance):
            raise DataError(
                f"label row ({arg_id!r}, {kp_id!r}) joins mismatched "
                f"(topic, stance): {(arg.topic, arg.stance.value)} vs "
                f"{(kp.topic, kp.stance.value)}"
            )
        if (arg_id, kp_id) in labels:
            raise DataError(f"duplicate label row for ({arg_id!r}, {kp_id!r})")
        raw = row["label"]
        if raw not in ("0", "1"):
            raise DataError(f"label for ({arg_id!r}, {kp_id!r}) must be 0 or 1, got {raw!r}")
        labels[(arg_id, kp_id)] = GoldLabel.MATCH if raw == "1" else GoldLabel.NO_MATCH

    # Expand the full cross product per (topic, stance), stably ordered by id.
    by_group_args: dict[tuple[str, int], list[Argument]] = {}
    for arg in sorted(arguments.values(), key=lambda a: a.id):
        by_group_args.setdefault((arg.topic, arg.stance.value), []).append(arg)
    by_group_kps: dict[tuple[str, int], list[KeyPoint]] = {}
    for kp in sorted(keypoints.values(), key=lambda k: k.id):
        by_group_kps.setdefault((kp.topic, kp.stance.value), []).append(kp)

    pairs: list[LabeledPair] = []
    seen: set[tuple[str, str]] = set()
    for group in sorted(set(by_group_args) | set(by_group_kps)):
        topic, stance_value = group
        for arg in by_group_args.get(group, []):
            for kp in by_group_kps.get(group, []):
                key = (arg.id, kp.id)
                seen.add(key)
                pairs.append(
                    LabeledPair(
                        argument_id=arg.id,
                        keypoint_id=kp.id,
                        topic=topic,
                        stance=Stance.from_int(stance_value),
                        label=labels.get(key, GoldLabel.UNDECIDED),
                    )
                )

    orphaned = set(labels) - seen
    if orphaned:
        raise DataError(f"label rows do not map to any expanded pair: {sorted(orphaned)[:5]}")

    arguments = dict(sorted(arguments.items()))
    keypoints = dict(sorted(keypoints.items()))
    return Dataset(split=split, arguments=arguments, keypoints=keypoints, pairs=tuple(pairs))


def dataset_stats(dataset: Dataset) -> DatasetStats:
    topics = {a.topic for a in dataset.arguments.values()}
    topics |= {k.topic for k in dataset.keypoints.values()}
    return DatasetStats(
        n_args=len(dataset.arguments),
        n_kps=len(dataset.keypoints),
        n_pairs=len(dataset.pairs),
        n_topics=len(topics),
    )


def load_sts(path: str | Path) -> tuple[AuxExample, ...]:
    """Load the STS TSV; raw 0-5 similarity scores are normalized to [0, 1]."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    examples = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh, delimiter="\t")
        for col in ("id", "sentence1", "sentence2", "score"):
            if col not in (reader.fieldnames or []):
                raise DataError(f"{path}: missing column {col!r}")
        for i, row in enumerate(reader, start=2):
            try:
                raw = float(row["score"])
            except (TypeError, ValueError):
                raise DataError(f"{path}:{i}: malformed score {row['score']!r}") from None
            if not 0.0 <= raw <= 5.0:
                raise DataError(f"{path}:{i}: score {raw} outside [0, 5]")
            examples.append(
                AuxExample(
                    id=row["id"],
                    text_a=row["sentence1"],
                    text_b=row["sentence2"],
                    target=raw / 5.0,
                )
            )
    return tuple(examples)


def load_ibm30k(path: str | Path) -> tuple[AuxExample, ...]:
    """Load the IBM Rank 30k CSV; the MACE-P column is the target, unchanged.

    Rows have no id column, so examples are keyed ``ibm30k-<row>`` by file
    position (0-based); embedding exports for this corpus use the same ids.
    """
    rows = _read_csv_rows(Path(path), ("argument", "topic", "MACE-P"))
    examples = []
    for i, row in enumerate(rows):
        try:
            target = float(row["MACE-P"])
        except (TypeError, ValueError):
            raise DataError(f"{path}: row {i}: malformed MACE-P {row['MACE-P']!r}") from None
        if not 0.0 <= target <= 1.0:
            raise DataError(f"{path}: row {i}: MACE-P {target} outside [0, 1]")
        examples.append(
            AuxExample(
                id=f"ibm30k-{i:05d}",
                text_a=row["argument"],
                text_b=row["topic"],
                target=target,
            )
        )
    return tuple(examples)


def expand_input_text(
    keypoint: str,
    argument: str,
    topic: str,
    include_topic: bool,
    *,
    separator: str = DEFAULT_SEPARATOR,
    allow_empty_topic: bool = False,
) -> str:
    """Concatenate keypoint, argument and (optionally) topic, in that order."""
    if not keypoint or not argument:
        raise ValueError("keypoint and argument must be nonempty")
    if not include_topic:
        return f"{keypoint} {separator} {argument}"
    if not topic and not allow_empty_topic:
        raise ValueError("topic is empty but include_topic is set")
    return f"{keypoint} {separator} {argument} {separator} {topic}"


def load_annotations(path: str | Path) -> dict[str, AnnotationDoc]:
    """Parse the CoNLL-U subset into AnnotationDocs keyed by doc_id."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    docs: dict[str, AnnotationDoc] = {}
    doc_id: str | None = None
    tokens: list[Token] = []

    def flush(lineno: int | str) -> None:
        nonlocal doc_id, tokens
        if doc_id is None and not tokens:
            return
        if doc_id is None:
            raise DataError(f"{path}:{lineno}: token block without a doc_id comment")
        if not tokens:
            raise DataError(f"{path}:{lineno}: doc {doc_id!r} has no tokens")
        if doc_id in docs:
            raise DataError(f"{path}:{lineno}: duplicate doc_id {doc_id!r}")
        docs[doc_id] = AnnotationDoc(doc_id=doc_id, tokens=tuple(tokens))
        doc_id, tokens = None, []

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                flush(lineno)
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if not body.startswith("doc_id"):
                    continue  # other comments are tolerated
                _, _, value = body.partition("=")
                if doc_id is not None or tokens:
                    flush(lineno)
                doc_id = value.strip()
                if not doc_id:
                    raise DataError(f"{path}:{lineno}: empty doc_id")
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise DataError(f"{path}:{lineno}: expected 4 tab-separated columns, got {len(cols)}")
            idx_raw, form, upos, deprel = cols
            try:
                idx = int(idx_raw)
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-integer token index {idx_raw!r}") from None
            if idx != len(tokens) + 1:
                raise DataError(f"{path}:{lineno}: token index {idx} out of order")
            if not upos or not deprel:
                raise DataError(f"{path}:{lineno}: empty tag")
            tokens.append(Token(surface=form, pos_tag=upos, dep_tag=deprel))
    flush("EOF")
    return docs


def load_embeddings(path: str | Path) -> dict[tuple[str, EmbeddingVariant], EmbeddingRecord]:
    """Load the embedding JSONL; all records must agree on the vector dim."""
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    records: dict[tuple[str, EmbeddingVariant], EmbeddingRecord] = {}
    dim: int | None = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from None
            try:
                pair_id = obj["pair_id"]
                variant = EmbeddingVariant(obj["variant"])
                layers = obj["layers"]
            except (KeyError, ValueError) as exc:
                raise DataError(f"{path}:{lineno}: bad record: {exc}") from None
            if not layers:
                raise DataError(f"{path}:{lineno}: record {pair_id!r} has empty layers")
            arr = np.asarray(layers, dtype=np.float64)
            if arr.ndim != 2:
                raise DataError(f"{path}:{lineno}: layers of {pair_id!r} are ragged or not 2-D")
            if dim is None:
                dim = int(arr.shape[1])
            elif int(arr.shape[1]) != dim:
                raise DataError(
                    f"{path}:{lineno}: dimension mismatch: {arr.shape[1]} != {dim}"
                )
            key = (pair_id, variant)
            if key in records:
                raise DataError(f"{path}:{lineno}: duplicate record for {key}")
            arr.setflags(write=False)
            records[key] = EmbeddingRecord(pair_id=pair_id, variant=variant, layers=arr)
    return records


def pair_texts(
    dataset: Dataset,
    include_topic: bool,
    *,
    separator: str = DEFAULT_SEPARATOR,
) -> dict[str, str]:
    """Concatenated input text for every expanded pair, keyed by pair id."""
    out = {}
    for pair in dataset.pairs:
        out[pair.pair_id] = expand_input_text(
            dataset.keypoint_of(pair).text,
            dataset.argument_of(pair).text,
            pair.topic,
            include_topic,
            separator=separator,
        )
    return out


def aux_text(example: AuxExample, *, separator: str = DEFAULT_SEPARATOR) -> str:
    """Single input string for an auxiliary pretraining pair."""
    return f"{example.text_a} {separator} {example.text_b}"


def iter_match_targets(pairs: Iterable[LabeledPair]) -> list[tuple[LabeledPair, float]]:
    """Training targets: Match=1, NoMatch=0; Undecided pairs are excluded."""
    out = []
    for pair in pairs:
        if pair.label is GoldLabel.MATCH:
            out.append((pair, 1.0))
        elif pair.label is GoldLabel.NO_MATCH:
            out.append((pair, 0.0))
    return out
