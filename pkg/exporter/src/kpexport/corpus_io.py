"""Minimal reader for the ArgKP-shaped corpus directory.

Only the file formats are shared with the scoring toolkit: argument and
keypoint CSVs per split, candidate pairs expanded per (topic, stance) and
keyed `<arg_id>::<key_point_id>`, input text `kp [SEP] arg [ [SEP] topic ]`.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass
from pathlib import Path

SPLITS = ("train", "dev", "test")
SEPARATOR = "[SEP]"


class CorpusError(Exception):
    pass


@dataclass(frozen=True)
class PairInput:
    pair_id: str
    keypoint: str
    argument: str
    topic: str
    split: str

    def text(self, include_topic: bool) -> str:
        if include_topic:
            return f"{self.keypoint} {SEPARATOR} {self.argument} {SEPARATOR} {self.topic}"
        return f"{self.keypoint} {SEPARATOR} {self.argument}"


def _read_rows(path: Path, required: tuple[str, ...]) -> list[dict[str, str]]:
    if not path.is_file():
        raise CorpusError(f"missing file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        for col in required:
            if col not in (reader.fieldnames or []):
                raise CorpusError(f"{path}: missing column {col!r}")
        return list(reader)


def available_splits(corpus_dir: str | Path) -> list[str]:
    corpus_dir = Path(corpus_dir)
    return [
        split
        for split in SPLITS
        if (corpus_dir / f"arguments_{split}.csv").is_file()
        and (corpus_dir / f"key_points_{split}.csv").is_file()
    ]


def load_pairs(corpus_dir: str | Path, splits: list[str] | None = None) -> list[PairInput]:
    """Expand all same-(topic, stance) candidate pairs, ordered by ids."""
    corpus_dir = Path(corpus_dir)
    splits = splits or available_splits(corpus_dir)
    if not splits:
        raise CorpusError(f"no loadable splits under {corpus_dir}")
    pairs: list[PairInput] = []
    for split in splits:
        args = _read_rows(
            corpus_dir / f"arguments_{split}.csv", ("arg_id", "argument", "topic", "stance")
        )
        kps = _read_rows(
            corpus_dir / f"key_points_{split}.csv",
            ("key_point_id", "key_point", "topic", "stance"),
        )
        kps_by_group: dict[tuple[str, str], list[dict[str, str]]] = {}
        for kp in sorted(kps, key=lambda row: row["key_point_id"]):
            kps_by_group.setdefault((kp["topic"], kp["stance"]), []).append(kp)
        for arg in sorted(args, key=lambda row: row["arg_id"]):
            for kp in kps_by_group.get((arg["topic"], arg["stance"]), []):
                pairs.append(
                    PairInput(
                        pair_id=f"{arg['arg_id']}::{kp['key_point_id']}",
                        keypoint=kp["key_point"],
                        argument=arg["argument"],
                        topic=arg["topic"],
                        split=split,
                    )
                )
    return pairs


@dataclass(frozen=True)
class AuxInput:
    example_id: str
    text: str


def load_aux_inputs(path: str | Path, kind: str) -> list[AuxInput]:
    """Auxiliary pretraining texts: STS TSV (id column) or IBM-30k CSV
    (keyed ibm30k-<row>); the two sides join as `a [SEP] b`."""
    path = Path(path)
    if kind == "sts":
        if not path.is_file():
            raise CorpusError(f"missing file: {path}")
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh, delimiter="\t")
            for col in ("id", "sentence1", "sentence2"):
                if col not in (reader.fieldnames or []):
                    raise CorpusError(f"{path}: missing column {col!r}")
            return [
                AuxInput(row["id"], f"{row['sentence1']} {SEPARATOR} {row['sentence2']}")
                for row in reader
            ]
    if kind == "ibm30k":
        rows = _read_rows(path, ("argument", "topic"))
        return [
            AuxInput(f"ibm30k-{i:05d}", f"{row['argument']} {SEPARATOR} {row['topic']}")
            for i, row in enumerate(rows)
        ]
    raise CorpusError(f"unknown auxiliary corpus kind {kind!r}")


def corpus_checksum(corpus_dir: str | Path, splits: list[str] | None = None) -> str:
    """sha256 over the split CSV bytes, stable across runs."""
    corpus_dir = Path(corpus_dir)
    splits = splits or available_splits(corpus_dir)
    digest = hashlib.sha256()
    for split in splits:
        for prefix in ("arguments", "key_points"):
            path = corpus_dir / f"{prefix}_{split}.csv"
            if path.is_file():
                digest.update(path.read_bytes())
    return f"sha256:{digest.hexdigest()}"
