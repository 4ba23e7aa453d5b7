"""Export routines: CoNLL-U annotations and embedding JSONL, with manifests.

Outputs are written to a temp file and finalized atomically via rename; a
manifest JSON lands next to each output and its counts always equal the
emitted record counts (skipped sentences are counted, never silently
dropped).
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from kpexport.annotate import annotate_text
from kpexport.corpus_io import corpus_checksum, load_aux_inputs, load_pairs
from kpexport.encode import resolve_encoder

logger = logging.getLogger("kpexport")

VARIANTS = ("with_topic", "no_topic")

# Top-ten dependency tags reported for this task family; used by the
# soft overlap check (logged, never asserted).
EXPECTED_FREQUENT_DEP_TAGS = [
    "aux", "nsubj", "amod", "dobj", "prep", "pobj", "ROOT", "compound",
    "conj", "ccomp",
]


@dataclass
class ExportManifest:
    model: str
    n_layers_exported: int
    pooling: str
    variants: list[str]
    corpus_checksum: str
    records: int = 0
    skipped: int = 0
    deterministic: bool = True
    splits: list[str] = field(default_factory=list)

    def write(self, out_path: Path) -> Path:
        manifest_path = out_path.with_name(out_path.name + ".manifest.json")
        payload = dict(self.__dict__)
        tmp = manifest_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        os.replace(tmp, manifest_path)
        return manifest_path


def _atomic_write(out_path: Path, lines: list[str]) -> None:
    out_path.parent.mkdir(parents=True, exist_ok=True)
    tmp = out_path.with_suffix(out_path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.writelines(lines)
    os.replace(tmp, out_path)


def export_annotations(
    corpus_dir: str | Path,
    out_path: str | Path,
    *,
    splits: list[str] | None = None,
    include_topic: bool = True,
) -> ExportManifest:
    """Annotate every concatenated pair input; doc_id = pair id.

    Sentences the annotator rejects are skipped and logged; the manifest
    carries both the emitted and skipped counts.
    """
    out_path = Path(out_path)
    pairs = load_pairs(corpus_dir, splits)
    lines: list[str] = []
    emitted = skipped = 0
    for pair in pairs:
        text = pair.text(include_topic)
        try:
            triples = annotate_text(text)
        except ValueError as exc:
            logger.warning("skipping %s: %s", pair.pair_id, exc)
            skipped += 1
            continue
        lines.append(f"# doc_id = {pair.pair_id}\n")
        for i, (form, upos, deprel) in enumerate(triples, start=1):
            lines.append(f"{i}\t{form}\t{upos}\t{deprel}\n")
        lines.append("\n")
        emitted += 1
    _atomic_write(out_path, lines)
    manifest = ExportManifest(
        model="rule-based-annotator",
        n_layers_exported=0,
        pooling="n/a",
        variants=["with_topic" if include_topic else "no_topic"],
        corpus_checksum=corpus_checksum(corpus_dir, splits),
        records=emitted,
        skipped=skipped,
        deterministic=True,
        splits=splits or [],
    )
    manifest.write(out_path)
    return manifest


def export_embeddings(
    corpus_dir: str | Path,
    model_label: str,
    out_path: str | Path,
    *,
    n_layers: int = 4,
    variants: list[str] | None = None,
    pooling: str = "cls",
    splits: list[str] | None = None,
) -> ExportManifest:
    """One JSONL record per (pair, variant): the last n_layers pooled
    hidden states, oldest to last, in the scoring toolkit's schema."""
    out_path = Path(out_path)
    variants = list(variants or VARIANTS)
    for variant in variants:
        if variant not in VARIANTS:
            raise ValueError(f"unknown variant {variant!r}")
    if n_layers < 3:
        # Fewer than 3 layers cannot serve the hidden-state-averaging study.
        raise ValueError("export at least 3 layers")
    encoder = resolve_encoder(model_label, n_layers, pooling)
    pairs = load_pairs(corpus_dir, splits)
    lines: list[str] = []
    emitted = truncated = 0
    for pair in pairs:
        for variant in variants:
            result = encoder.encode(pair.text(include_topic=(variant == "with_topic")))
            if result.truncated:
                truncated += 1
                logger.warning("input truncated for %s (%s)", pair.pair_id, variant)
            record = {"pair_id": pair.pair_id, "variant": variant, "layers": result.layers}
            lines.append(json.dumps(record, sort_keys=True) + "\n")
            emitted += 1
    if truncated:
        logger.warning("%d inputs exceeded the encoder length limit", truncated)
    _atomic_write(out_path, lines)
    manifest = ExportManifest(
        model=model_label,
        n_layers_exported=n_layers,
        pooling=pooling,
        variants=variants,
        corpus_checksum=corpus_checksum(corpus_dir, splits),
        records=emitted,
        skipped=0,
        deterministic=bool(getattr(encoder, "deterministic", False)),
        splits=splits or [],
    )
    manifest.write(out_path)
    return manifest


def export_aux_embeddings(
    aux_path: str | Path,
    kind: str,
    model_label: str,
    out_path: str | Path,
    *,
    n_layers: int = 4,
    pooling: str = "cls",
) -> ExportManifest:
    """Embeddings for an auxiliary pretraining corpus (STS or IBM-30k).

    Records are keyed by example id under the no_topic variant, matching
    the scoring toolkit's auxiliary-embedding convention. Use the same
    model label as the main export so the head input dims line up."""
    out_path = Path(out_path)
    if n_layers < 3:
        raise ValueError("export at least 3 layers")
    encoder = resolve_encoder(model_label, n_layers, pooling)
    inputs = load_aux_inputs(aux_path, kind)
    lines: list[str] = []
    truncated = 0
    for item in inputs:
        result = encoder.encode(item.text)
        if result.truncated:
            truncated += 1
            logger.warning("input truncated for %s", item.example_id)
        record = {"pair_id": item.example_id, "variant": "no_topic", "layers": result.layers}
        lines.append(json.dumps(record, sort_keys=True) + "\n")
    if truncated:
        logger.warning("%d inputs exceeded the encoder length limit", truncated)
    _atomic_write(out_path, lines)
    digest = hashlib.sha256(Path(aux_path).read_bytes()).hexdigest()
    manifest = ExportManifest(
        model=model_label,
        n_layers_exported=n_layers,
        pooling=pooling,
        variants=["no_topic"],
        corpus_checksum=f"sha256:{digest}",
        records=len(lines),
        skipped=0,
        deterministic=bool(getattr(encoder, "deterministic", False)),
        splits=[kind],
    )
    manifest.write(out_path)
    return manifest


def dep_tag_overlap_check(corpus_dir: str | Path, *, splits: list[str] | None = None) -> int:
    """Soft check: how many of the ten expected frequent dependency tags
    appear in this corpus's top ten. Logged, never asserted (the result is
    parser-dependent)."""
    counts: Counter[str] = Counter()
    for pair in load_pairs(corpus_dir, splits):
        for _, _, deprel in annotate_text(pair.text(include_topic=True)):
            counts[deprel] += 1
    top10 = [tag for tag, _ in counts.most_common(10)]
    overlap = len(set(top10) & set(EXPECTED_FREQUENT_DEP_TAGS))
    logger.info(
        "dependency tag overlap: %d/10 (top tags here: %s)", overlap, ", ".join(top10)
    )
    return overlap
