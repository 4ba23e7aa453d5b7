"""One-shot offline exporter for the keypoint-matching pipeline.

Produces the two ingestion files the scoring toolkit cannot create itself:
CoNLL-U token annotations (POS + dependency labels) and per-pair contextual
embedding JSONL, both with manifests.
"""

__version__ = "0.1.0"
