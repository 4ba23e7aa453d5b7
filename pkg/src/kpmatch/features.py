"""Feature vectors concatenated to the pooled embedding before the dense head.

Three kinds: dependency tags and POS tags encoded by descending-frequency
rank (most frequent tag = 1), and tf-idf of the concatenated input text.
Vocabularies and tf-idf models are fitted on the training split only, are
immutable afterwards, and vectorization is a pure function.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from kpmatch.corpus import AnnotationDoc, LabeledPair
from kpmatch.errors import DataError

_TOKEN_RE = re.compile(r"[0-9a-zA-Z]+")


class FeatureKind(Enum):
    NONE = "none"
    DEP = "dep"
    POS = "pos"
    TFIDF = "tfidf"


class TagKind(Enum):
    DEP = "dep"
    POS = "pos"


@dataclass(frozen=True)
class FeatureConfig:
    """Feature selection plus the knobs shared by a whole run.

    max_tokens is the fixed length L of tag-rank vectors (truncate/zero-pad);
    vocab_cap bounds the tf-idf vocabulary.
    """

    kind: FeatureKind = FeatureKind.NONE
    max_tokens: int = 128
    vocab_cap: int = 256
    lowercase: bool = True

    def __post_init__(self) -> None:
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if self.vocab_cap < 1:
            raise ValueError("vocab_cap must be >= 1")


@dataclass(frozen=True, eq=False)
class FeatureVector:
    values: np.ndarray  # float64, shape (dim,)

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


EMPTY_FEATURE = FeatureVector(values=np.zeros(0, dtype=np.float64))


@dataclass(frozen=True)
class TagVocabulary:
    """Tag -> 1-based rank by descending occurrence count, ties lexicographic."""

    kind: TagKind
    rank_of: Mapping[str, int]
    counts: Mapping[str, int]

    def to_json(self) -> str:
        return json.dumps(
            {"kind": self.kind.value, "rank_of": dict(self.rank_of), "counts": dict(self.counts)},
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "TagVocabulary":
        obj = json.loads(text)
        return cls(
            kind=TagKind(obj["kind"]),
            rank_of={k: int(v) for k, v in obj["rank_of"].items()},
            counts={k: int(v) for k, v in obj["counts"].items()},
        )


def _doc_tags(doc: AnnotationDoc, kind: TagKind) -> list[str]:
    if kind is TagKind.DEP:
        return [tok.dep_tag for tok in doc.tokens]
    return [tok.pos_tag for tok in doc.tokens]


def build_tag_vocab(docs: Iterable[AnnotationDoc], kind: TagKind) -> TagVocabulary:
    """Rank tags of the requested kind by descending corpus frequency."""
    counts: Counter[str] = Counter()
    for doc in docs:
        counts.update(_doc_tags(doc, kind))
    if not counts:
        raise DataError(f"no {kind.value} tags found in the annotation corpus")
    ordered = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    rank_of = {tag: rank for rank, (tag, _) in enumerate(ordered, start=1)}
    return TagVocabulary(kind=kind, rank_of=rank_of, counts=dict(counts))


def encode_tags(doc: AnnotationDoc, vocab: TagVocabulary, max_tokens: int) -> FeatureVector:
    """Fixed-length vector of tag ranks: truncated at max_tokens, zero-padded.

    Tags absent from the vocabulary get code 0, shared with padding.
    """
    if max_tokens < 1:
        raise ValueError("max_tokens must be >= 1")
    values = np.zeros(max_tokens, dtype=np.float64)
    for i, tag in enumerate(_doc_tags(doc, vocab.kind)[:max_tokens]):
        values[i] = vocab.rank_of.get(tag, 0)
    return FeatureVector(values=values)


def tokenize(text: str, lowercase: bool = True) -> list[str]:
    """Split on non-alphanumeric runs; the tf-idf tokenizer for this toolkit."""
    if lowercase:
        text = text.lower()
    return _TOKEN_RE.findall(text)


@dataclass(frozen=True)
class TfidfModel:
    """Smooth-idf tf-idf with an L2-normalized output vector.

    idf(t) = ln((1 + N) / (1 + df(t))) + 1 over N fitting documents.
    """

    vocabulary: Mapping[str, int]
    idf: np.ndarray = field(repr=False)
    doc_count: int = 0
    cap: int = 0
    lowercase: bool = True

    @property
    def dim(self) -> int:
        return len(self.vocabulary)

    def to_json(self) -> str:
        return json.dumps(
            {
                "vocabulary": dict(self.vocabulary),
                "idf": [float(x) for x in self.idf],
                "doc_count": self.doc_count,
                "cap": self.cap,
                "lowercase": self.lowercase,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "TfidfModel":
        obj = json.loads(text)
        return cls(
            vocabulary={k: int(v) for k, v in obj["vocabulary"].items()},
            idf=np.asarray(obj["idf"], dtype=np.float64),
            doc_count=int(obj["doc_count"]),
            cap=int(obj["cap"]),
            lowercase=bool(obj["lowercase"]),
        )


def fit_tfidf(texts: Iterable[str], config: FeatureConfig) -> TfidfModel:
    """Fit document frequencies over the given texts.

    The vocabulary keeps the vocab_cap most frequent terms by document
    frequency (ties broken lexicographically); indices are assigned in
    lexicographic order over the kept terms.
    """
    texts = list(texts)
    if not texts:
        raise DataError("cannot fit tf-idf on an empty text collection")
    df: Counter[str] = Counter()
    n_docs = 0
    for text in texts:
        n_docs += 1
        df.update(set(tokenize(text, config.lowercase)))
    if not df:
        raise DataError("all texts are empty after tokenization")
    kept = sorted(df.items(), key=lambda item: (-item[1], item[0]))[: config.vocab_cap]
    vocabulary = {term: i for i, term in enumerate(sorted(term for term, _ in kept))}
    idf = np.zeros(len(vocabulary), dtype=np.float64)
    for term, index in vocabulary.items():
        idf[index] = math.log((1 + n_docs) / (1 + df[term])) + 1.0
    idf.setflags(write=False)
    return TfidfModel(
        vocabulary=vocabulary,
        idf=idf,
        doc_count=n_docs,
        cap=config.vocab_cap,
        lowercase=config.lowercase,
    )


def tfidf_vector(text: str, model: TfidfModel) -> FeatureVector:
    """Raw tf times idf, L2-normalized; an all-zero vector stays all-zero."""
    values = np.zeros(model.dim, dtype=np.float64)
    for term, count in Counter(tokenize(text, model.lowercase)).items():
        index = model.vocabulary.get(term)
        if index is not None:
            values[index] = count * model.idf[index]
    norm = float(np.linalg.norm(values))
    if norm > 0.0:
        values /= norm
    return FeatureVector(values=values)


def feature_vector_for(
    item_id: str,
    texts: Mapping[str, str],
    annotations: Mapping[str, AnnotationDoc] | None,
    tag_vocab: TagVocabulary | None,
    tfidf_model: TfidfModel | None,
    config: FeatureConfig,
) -> FeatureVector:
    """Feature vector for one input (main pair or auxiliary example) by id."""
    if config.kind is FeatureKind.NONE:
        return EMPTY_FEATURE
    if config.kind in (FeatureKind.DEP, FeatureKind.POS):
        if annotations is None or item_id not in annotations:
            raise DataError(f"missing annotation for pair {item_id!r}")
        if tag_vocab is None:
            raise ValueError("tag features require a fitted TagVocabulary")
        expected = TagKind.DEP if config.kind is FeatureKind.DEP else TagKind.POS
        if tag_vocab.kind is not expected:
            raise ValueError(f"vocabulary kind {tag_vocab.kind} does not match {config.kind}")
        return encode_tags(annotations[item_id], tag_vocab, config.max_tokens)
    if tfidf_model is None:
        raise ValueError("tf-idf features require a fitted TfidfModel")
    if item_id not in texts:
        raise DataError(f"missing input text for pair {item_id!r}")
    return tfidf_vector(texts[item_id], tfidf_model)


def assemble_features(
    pair: LabeledPair,
    texts: Mapping[str, str],
    annotations: Mapping[str, AnnotationDoc] | None,
    tag_vocab: TagVocabulary | None,
    tfidf_model: TfidfModel | None,
    config: FeatureConfig,
) -> FeatureVector:
    """Feature vector for one pair under the configured kind.

    Tag kinds read the annotation of the pair's concatenated input (keyed by
    pair id); tf-idf reads the concatenated input text itself.
    """
    return feature_vector_for(pair.pair_id, texts, annotations, tag_vocab, tfidf_model, config)


def feature_dim(
    config: FeatureConfig,
    tfidf_model: TfidfModel | None = None,
) -> int:
    """Dimension every FeatureVector of a run will have."""
    if config.kind is FeatureKind.NONE:
        return 0
    if config.kind is FeatureKind.TFIDF:
        if tfidf_model is None:
            raise ValueError("tf-idf dimension requires the fitted model")
        return tfidf_model.dim
    return config.max_tokens


def save_tag_vocab(vocab: TagVocabulary, path: str | Path) -> None:
    Path(path).write_text(vocab.to_json(), encoding="utf-8")


def load_tag_vocab(path: str | Path) -> TagVocabulary:
    return TagVocabulary.from_json(Path(path).read_text(encoding="utf-8"))


def save_tfidf(model: TfidfModel, path: str | Path) -> None:
    Path(path).write_text(model.to_json(), encoding="utf-8")


def load_tfidf(path: str | Path) -> TfidfModel:
    return TfidfModel.from_json(Path(path).read_text(encoding="utf-8"))
