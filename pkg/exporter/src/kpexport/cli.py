"""CLI: kpexport export annotations|embeddings --corpus <dir> --out <path>."""

from __future__ import annotations

import argparse
import logging
import sys

from kpexport.corpus_io import CorpusError
from kpexport.encode import EncoderError
from kpexport.export import (
    dep_tag_overlap_check,
    export_annotations,
    export_aux_embeddings,
    export_embeddings,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kpexport", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    export = sub.add_parser("export", help="produce ingestion files")
    what = export.add_subparsers(dest="what", required=True)

    ann = what.add_parser("annotations", help="CoNLL-U token annotations per pair")
    ann.add_argument("--corpus", required=True)
    ann.add_argument("--out", required=True)
    ann.add_argument("--splits", help="comma-separated splits (default: all present)")
    ann.add_argument("--no-topic", action="store_true", help="annotate the no-topic input")

    emb = what.add_parser("embeddings", help="pooled hidden-state JSONL per pair")
    emb.add_argument("--corpus", required=True)
    emb.add_argument("--out", required=True)
    emb.add_argument("--model", default="hashed-64", help="encoder label (default hashed-64)")
    emb.add_argument("--layers", type=int, default=4, help="last k hidden states (default 4)")
    emb.add_argument(
        "--variants",
        default="with_topic,no_topic",
        help="comma-separated input variants (default both)",
    )
    emb.add_argument("--pooling", choices=["cls", "mean"], default="cls")
    emb.add_argument("--splits", help="comma-separated splits (default: all present)")

    aux = what.add_parser(
        "aux-embeddings", help="embeddings for an auxiliary pretraining corpus"
    )
    aux.add_argument("--input", required=True, help="STS TSV or IBM-30k CSV path")
    aux.add_argument("--kind", required=True, choices=["sts", "ibm30k"])
    aux.add_argument("--out", required=True)
    aux.add_argument("--model", default="hashed-64")
    aux.add_argument("--layers", type=int, default=4)
    aux.add_argument("--pooling", choices=["cls", "mean"], default="cls")

    check = sub.add_parser("check-tags", help="log the frequent-dependency-tag overlap")
    check.add_argument("--corpus", required=True)
    check.add_argument("--splits")

    return parser


def _splits(raw: str | None) -> list[str] | None:
    if not raw:
        return None
    return [s.strip() for s in raw.split(",") if s.strip()]


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "check-tags":
            overlap = dep_tag_overlap_check(args.corpus, splits=_splits(args.splits))
            print(f"overlap with expected frequent dependency tags: {overlap}/10")
            return 0
        if args.what == "annotations":
            manifest = export_annotations(
                args.corpus,
                args.out,
                splits=_splits(args.splits),
                include_topic=not args.no_topic,
            )
            print(f"wrote {args.out}: {manifest.records} sentences, {manifest.skipped} skipped")
            return 0
        if args.what == "aux-embeddings":
            manifest = export_aux_embeddings(
                args.input,
                args.kind,
                args.model,
                args.out,
                n_layers=args.layers,
                pooling=args.pooling,
            )
            print(f"wrote {args.out}: {manifest.records} records ({manifest.model})")
            return 0
        manifest = export_embeddings(
            args.corpus,
            args.model,
            args.out,
            n_layers=args.layers,
            variants=_splits(args.variants),
            pooling=args.pooling,
            splits=_splits(args.splits),
        )
        print(
            f"wrote {args.out}: {manifest.records} records "
            f"({manifest.model}, {manifest.n_layers_exported} layers, {manifest.pooling})"
        )
        return 0
    except (CorpusError, EncoderError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
