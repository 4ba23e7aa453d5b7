"""Trainable scoring head over pooled embeddings plus feature vectors.

The head is a stack of dense layers (relu on hidden layers) ending in a
single sigmoid unit; it is trained with mini-batch gradient descent on
binary cross-entropy, optionally in two stages: auxiliary pretraining on
graded similarity targets, then fine-tuning on the Match/NoMatch labels.
Everything runs in float64 and is deterministic for a fixed seed.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from kpmatch.corpus import (
    AuxExample,
    EmbeddingRecord,
    EmbeddingVariant,
    LabeledPair,
    iter_match_targets,
)
from kpmatch.errors import DataError
from kpmatch.features import FeatureConfig, FeatureKind, FeatureVector, TfidfModel, tfidf_vector

PRED_EPS = 1e-7


@dataclass(frozen=True, eq=False)
class PooledEmbedding:
    values: np.ndarray  # (dim,), float64

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


def pool_embedding(record: EmbeddingRecord, n: int) -> PooledEmbedding:
    """Element-wise mean of the last n layers; n=1 is the final hidden state."""
    n_layers = int(record.layers.shape[0])
    if not 1 <= n <= n_layers:
        raise ValueError(f"cannot pool last {n} of {n_layers} layers")
    return PooledEmbedding(values=record.layers[-n:].mean(axis=0))


@dataclass(eq=False)
class DenseHead:
    """Dense layers: relu on hidden layers, 1-unit sigmoid output.

    weights[i] has shape (fan_out, fan_in); the final fan_out is 1. The
    sigmoid is applied by forward(), not stored as a layer.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def __post_init__(self) -> None:
        if not self.weights or len(self.weights) != len(self.biases):
            raise ValueError("weights and biases must be nonempty and parallel")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape[0] != b.shape[0]:
                raise ValueError(f"layer {i}: weight/bias shape mismatch")
            if i > 0 and w.shape[1] != self.weights[i - 1].shape[0]:
                raise ValueError(f"layer {i}: input dim does not chain")
        if self.weights[-1].shape[0] != 1:
            raise ValueError("final layer must have a single output unit")

    @property
    def input_dim(self) -> int:
        return int(self.weights[0].shape[1])

    def copy(self) -> "DenseHead":
        return DenseHead(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
        )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    epochs_pretrain: int = 0
    epochs_finetune: int = 3
    batch_size: int = 32
    seed: int = 1
    hidden_dims: tuple[int, ...] = (256, 64)

    def __post_init__(self) -> None:
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs_pretrain < 0:
            raise ValueError("epochs_pretrain must be >= 0")
        if self.epochs_finetune < 1:
            raise ValueError("epochs_finetune must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


@dataclass(frozen=True)
class AuxTask:
    """Auxiliary pretraining data bundled with its embeddings and features.

    Embedding records for auxiliary examples are keyed by example id under
    the no_topic variant (the auxiliary input has a single concatenated
    form, so only that slot is used).
    """

    examples: tuple[AuxExample, ...]
    embeddings: Mapping[tuple[str, EmbeddingVariant], EmbeddingRecord]
    features: Mapping[str, FeatureVector]


@dataclass(frozen=True, eq=False)
class ModelArtifact:
    """Self-describing trained head: prediction needs no external config."""

    head: DenseHead
    feature_config: FeatureConfig
    variant: EmbeddingVariant
    n_pool_layers: int
    seed: int

    def to_json(self) -> str:
        return json.dumps(
            {
                "weights": [w.tolist() for w in self.head.weights],
                "biases": [b.tolist() for b in self.head.biases],
                "layer_dims": [int(w.shape[1]) for w in self.head.weights]
                + [int(self.head.weights[-1].shape[0])],
                "feature_config": {
                    "kind": self.feature_config.kind.value,
                    "max_tokens": self.feature_config.max_tokens,
                    "vocab_cap": self.feature_config.vocab_cap,
                    "lowercase": self.feature_config.lowercase,
                },
                "variant": self.variant.value,
                "n_pool_layers": self.n_pool_layers,
                "seed": self.seed,
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "ModelArtifact":
        obj = json.loads(text)
        head = DenseHead(
            weights=[np.asarray(w, dtype=np.float64) for w in obj["weights"]],
            biases=[np.asarray(b, dtype=np.float64) for b in obj["biases"]],
        )
        fc = obj["feature_config"]
        return cls(
            head=head,
            feature_config=FeatureConfig(
                kind=FeatureKind(fc["kind"]),
                max_tokens=int(fc["max_tokens"]),
                vocab_cap=int(fc["vocab_cap"]),
                lowercase=bool(fc["lowercase"]),
            ),
            variant=EmbeddingVariant(obj["variant"]),
            n_pool_layers=int(obj["n_pool_layers"]),
            seed=int(obj["seed"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "ModelArtifact":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def init_head(input_dim: int, hidden_dims: Iterable[int], rng: np.random.Generator) -> DenseHead:
    """Uniform init in [-1/sqrt(fan_in), +1/sqrt(fan_in)]."""
    dims = [input_dim, *hidden_dims, 1]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return DenseHead(weights=weights, biases=biases)


def _forward_batch(head: DenseHead, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Probabilities for a (n, input_dim) batch plus per-layer activations."""
    activations = [x]
    a = x
    last = len(head.weights) - 1
    for i, (w, b) in enumerate(zip(head.weights, head.biases)):
        z = a @ w.T + b
        a = z if i == last else np.maximum(z, 0.0)
        activations.append(a)
    probs = np.clip(_sigmoid(a[:, 0]), PRED_EPS, 1.0 - PRED_EPS)
    return probs, activations


def _backward_batch(
    head: DenseHead,
    activations: list[np.ndarray],
    probs: np.ndarray,
    targets: np.ndarray,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Mean-reduced gradients of BCE over the batch."""
    n = probs.shape[0]
    grad_w: list[np.ndarray] = [np.empty(0)] * len(head.weights)
    grad_b: list[np.ndarray] = [np.empty(0)] * len(head.weights)
    # d(mean BCE)/dz for the sigmoid output unit.
    delta = ((probs - targets) / n)[:, None]
    for i in range(len(head.weights) - 1, -1, -1):
        grad_w[i] = delta.T @ activations[i]
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ head.weights[i]) * (activations[i] > 0.0)
    return grad_w, grad_b


def _concat_input(emb: PooledEmbedding, feat: FeatureVector) -> np.ndarray:
    if feat.dim == 0:
        return emb.values
    return np.concatenate([emb.values, feat.values])


def forward(head: DenseHead, emb: PooledEmbedding, feat: FeatureVector) -> float:
    """Score one pair: sigmoid of the head's final pre-activation.

    The output is clipped to [1e-7, 1 - 1e-7] so it stays strictly inside
    (0, 1) at float64.
    """
    x = _concat_input(emb, feat)
    if x.shape[0] != head.input_dim:
        raise ValueError(f"input dim {x.shape[0]} != head input dim {head.input_dim}")
    probs, _ = _forward_batch(head, x[None, :])
    return float(probs[0])


def bce_loss(pred: float, target: float) -> float:
    """Binary cross-entropy with graded targets; pred is clamped to [eps, 1-eps]."""
    p = min(max(pred, PRED_EPS), 1.0 - PRED_EPS)
    return -(target * math.log(p) + (1.0 - target) * math.log(1.0 - p))


def backward(
    head: DenseHead,
    emb: PooledEmbedding,
    feat: FeatureVector,
    target: float,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Analytic gradients of bce_loss(forward(...), target) for one example."""
    x = _concat_input(emb, feat)
    if x.shape[0] != head.input_dim:
        raise ValueError(f"input dim {x.shape[0]} != head input dim {head.input_dim}")
    probs, activations = _forward_batch(head, x[None, :])
    return _backward_batch(head, activations, probs, np.asarray([target], dtype=np.float64))


def batch_bce(head: DenseHead, x: np.ndarray, y: np.ndarray) -> float:
    """Mean BCE of the head over a design matrix; used for monitoring."""
    probs, _ = _forward_batch(head, x)
    return float(-np.mean(y * np.log(probs) + (1.0 - y) * np.log(1.0 - probs)))


def _fit(
    head: DenseHead,
    x: np.ndarray,
    y: np.ndarray,
    epochs: int,
    config: TrainConfig,
    rng: np.random.Generator,
) -> None:
    n = x.shape[0]
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start : start + config.batch_size]
            probs, activations = _forward_batch(head, x[batch])
            grad_w, grad_b = _backward_batch(head, activations, probs, y[batch])
            for i in range(len(head.weights)):
                head.weights[i] -= config.learning_rate * grad_w[i]
                head.biases[i] -= config.learning_rate * grad_b[i]


def build_design(
    items: Iterable[tuple[str, float]],
    embeddings: Mapping[tuple[str, EmbeddingVariant], EmbeddingRecord],
    features: Mapping[str, FeatureVector],
    variant: EmbeddingVariant,
    n_pool_layers: int,
) -> tuple[list[str], np.ndarray, np.ndarray]:
    """Stack (pooled embedding | feature) rows for (id, target) items."""
    ids: list[str] = []
    rows: list[np.ndarray] = []
    targets: list[float] = []
    for item_id, target in items:
        record = embeddings.get((item_id, variant))
        if record is None:
            raise DataError(f"missing embedding for {item_id!r} (variant {variant.value})")
        feat = features.get(item_id)
        if feat is None:
            raise DataError(f"missing feature vector for {item_id!r}")
        rows.append(_concat_input(pool_embedding(record, n_pool_layers), feat))
        ids.append(item_id)
        targets.append(target)
    if not rows:
        raise DataError("empty design matrix")
    try:
        x = np.vstack(rows)
    except ValueError:
        dims = sorted({row.shape[0] for row in rows})
        raise DataError(f"inconsistent input dims across examples: {dims}") from None
    return ids, x, np.asarray(targets, dtype=np.float64)


def train(
    train_pairs: Iterable[LabeledPair],
    embeddings: Mapping[tuple[str, EmbeddingVariant], EmbeddingRecord],
    features: Mapping[str, FeatureVector],
    config: TrainConfig,
    *,
    aux: AuxTask | None = None,
    variant: EmbeddingVariant = EmbeddingVariant.WITH_TOPIC,
    n_pool_layers: int = 1,
    feature_config: FeatureConfig | None = None,
) -> ModelArtifact:
    """Two-stage training: optional auxiliary pretraining, then fine-tuning.

    Match pairs train toward 1, NoMatch toward 0; Undecided pairs are
    excluded from the loss. Batch order reshuffles each epoch from the
    seeded generator, so equal (data, config, seed) gives bit-identical
    weights.
    """
    labeled = iter_match_targets(train_pairs)
    if not labeled:
        raise DataError("no Match/NoMatch pairs left to train on after exclusion")
    if aux is not None and config.epochs_pretrain < 1:
        raise ValueError("auxiliary data given but epochs_pretrain < 1")

    # Canonical id order makes training invariant to the caller's ordering.
    labeled.sort(key=lambda item: item[0].pair_id)
    _, x_main, y_main = build_design(
        ((pair.pair_id, target) for pair, target in labeled),
        embeddings,
        features,
        variant,
        n_pool_layers,
    )

    x_aux = y_aux = None
    if aux is not None and config.epochs_pretrain > 0:
        _, x_aux, y_aux = build_design(
            ((ex.id, ex.target) for ex in sorted(aux.examples, key=lambda ex: ex.id)),
            aux.embeddings,
            aux.features,
            EmbeddingVariant.NO_TOPIC,
            n_pool_layers,
        )
        if x_aux.shape[1] != x_main.shape[1]:
            main_feat = features[labeled[0][0].pair_id].dim
            aux_feat = aux.features[aux.examples[0].id].dim if aux.examples else 0
            raise DataError(
                f"auxiliary input dim {x_aux.shape[1]} (embedding "
                f"{x_aux.shape[1] - aux_feat} + features {aux_feat}) != main "
                f"input dim {x_main.shape[1]} (embedding "
                f"{x_main.shape[1] - main_feat} + features {main_feat}); align "
                f"embedding exports and feature dims before pretraining"
            )

    rng = np.random.default_rng(config.seed)
    head = init_head(x_main.shape[1], config.hidden_dims, rng)
    if x_aux is not None:
        _fit(head, x_aux, y_aux, config.epochs_pretrain, config, rng)
    _fit(head, x_main, y_main, config.epochs_finetune, config, rng)

    return ModelArtifact(
        head=head,
        feature_config=feature_config or FeatureConfig(),
        variant=variant,
        n_pool_layers=n_pool_layers,
        seed=config.seed,
    )


def predict(
    model: ModelArtifact,
    pairs: Iterable[LabeledPair],
    embeddings: Mapping[tuple[str, EmbeddingVariant], EmbeddingRecord],
    features: Mapping[str, FeatureVector],
) -> dict[str, float]:
    """Score every pair (Undecided included); pure and order-independent."""
    ids, x, _ = build_design(
        ((pair.pair_id, 0.0) for pair in pairs),
        embeddings,
        features,
        model.variant,
        model.n_pool_layers,
    )
    if x.shape[1] != model.head.input_dim:
        raise DataError(f"input dim {x.shape[1]} != model input dim {model.head.input_dim}")
    probs, _ = _forward_batch(model.head, x)
    return {pair_id: float(p) for pair_id, p in zip(ids, probs)}


def lexical_baseline(
    pairs: Iterable[LabeledPair],
    texts: Mapping[str, str],
    tfidf_model: TfidfModel,
) -> dict[str, float]:
    """No-training baseline: tf-idf cosine of argument text vs keypoint text.

    texts maps argument and keypoint ids to their raw texts. Vectors are
    L2-normalized, so the cosine is a plain dot product; zero vectors
    score 0.
    """
    cache: dict[str, np.ndarray] = {}

    def vec(text_id: str) -> np.ndarray:
        if text_id not in cache:
            if text_id not in texts:
                raise DataError(f"missing text for id {text_id!r}")
            cache[text_id] = tfidf_vector(texts[text_id], tfidf_model).values
        return cache[text_id]

    return {
        pair.pair_id: float(np.dot(vec(pair.argument_id), vec(pair.keypoint_id)))
        for pair in pairs
    }
