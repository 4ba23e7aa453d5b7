"""Sequential boosting over the dense scoring head.

The first head trains on the full labeled set with uniform sample weights;
after each round, weights of erroneous points (|pred - label| above the
error threshold) are multiplied by e^alpha and renormalized, and the next
head trains on the highest-weight points (deterministic top-k, ties by pair
id). Head outputs combine as an alpha-weighted convex mean.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from kpmatch.corpus import (
    EmbeddingRecord,
    EmbeddingVariant,
    LabeledPair,
    iter_match_targets,
)
from kpmatch.errors import DataError
from kpmatch.features import FeatureConfig, FeatureVector
from kpmatch.scorer import ModelArtifact, TrainConfig, predict, train

ALPHA_MIN = 0.01
ALPHA_MAX = 5.0
ERR_ABORT = 1.0 - 1e-12
# Offset between per-round training seeds; round 1 reuses the base seed so a
# 1-model ensemble behaves exactly like plain train().
ROUND_SEED_STRIDE = 9973


@dataclass(frozen=True)
class BoostConfig:
    n_models: int = 5
    sample_k: int = 10_000
    error_threshold: float = 0.5
    base: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self) -> None:
        if self.n_models < 1:
            raise ValueError("n_models must be >= 1")
        if self.sample_k < 1:
            raise ValueError("sample_k must be >= 1")


@dataclass(frozen=True)
class BoostRound:
    """Diagnostics for one boosting round; weights are post-update."""

    index: int
    n_train: int
    err: float
    alpha: float
    weights: Mapping[str, float]

    @property
    def weight_total(self) -> float:
        return float(sum(self.weights.values()))


@dataclass(frozen=True, eq=False)
class BoostedModel:
    heads: tuple[ModelArtifact, ...]
    alphas: np.ndarray  # normalized to sum 1
    rounds: tuple[BoostRound, ...] = ()

    def to_json(self) -> str:
        return json.dumps(
            {
                "alphas": [float(a) for a in self.alphas],
                "models": [json.loads(head.to_json()) for head in self.heads],
            },
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "BoostedModel":
        obj = json.loads(text)
        heads = tuple(ModelArtifact.from_json(json.dumps(m)) for m in obj["models"])
        return cls(heads=heads, alphas=np.asarray(obj["alphas"], dtype=np.float64))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "BoostedModel":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def reweight(
    weights: Mapping[str, float],
    erroneous: Iterable[str],
) -> tuple[float, float, dict[str, float]]:
    """One error-driven update: returns (err, alpha, new normalized weights).

    Raises DataError when the weighted error reaches 1 (nothing learnable).
    err exactly 0 is the caller's early-stop signal and returns the weights
    unchanged with alpha clamped at the top.
    """
    erroneous = set(erroneous)
    err = float(sum(w for pid, w in weights.items() if pid in erroneous))
    if err >= ERR_ABORT:
        raise DataError(f"boosting aborted: weighted error {err} leaves nothing to learn")
    if err == 0.0:
        return 0.0, ALPHA_MAX, dict(weights)
    alpha = 0.5 * math.log((1.0 - err) / err)
    alpha = min(max(alpha, ALPHA_MIN), ALPHA_MAX)
    boosted = {
        pid: w * math.exp(alpha) if pid in erroneous else w for pid, w in weights.items()
    }
    total = sum(boosted.values())
    return err, alpha, {pid: w / total for pid, w in boosted.items()}


def boost_train(
    train_pairs: Iterable[LabeledPair],
    embeddings: Mapping[tuple[str, EmbeddingVariant], EmbeddingRecord],
    features: Mapping[str, FeatureVector],
    config: BoostConfig,
    *,
    variant: EmbeddingVariant = EmbeddingVariant.WITH_TOPIC,
    n_pool_layers: int = 1,
    feature_config: FeatureConfig | None = None,
) -> BoostedModel:
    """Train the boosted ensemble; strictly sequential across rounds."""
    labeled = iter_match_targets(train_pairs)
    if not labeled:
        raise DataError("no Match/NoMatch pairs left to boost on after exclusion")
    by_id = {pair.pair_id: pair for pair, _ in labeled}
    label_of = {pair.pair_id: target for pair, target in labeled}
    all_ids = sorted(by_id)
    n = len(all_ids)

    weights = {pid: 1.0 / n for pid in all_ids}
    subset_ids = list(all_ids)
    heads: list[ModelArtifact] = []
    raw_alphas: list[float] = []
    rounds: list[BoostRound] = []

    for m in range(1, config.n_models + 1):
        round_cfg = replace(config.base, seed=config.base.seed + (m - 1) * ROUND_SEED_STRIDE)
        model = train(
            (by_id[pid] for pid in subset_ids),
            embeddings,
            features,
            round_cfg,
            variant=variant,
            n_pool_layers=n_pool_layers,
            feature_config=feature_config,
        )
        heads.append(model)

        preds = predict(model, (by_id[pid] for pid in all_ids), embeddings, features)
        erroneous = [
            pid for pid in all_ids if abs(preds[pid] - label_of[pid]) > config.error_threshold
        ]
        err, alpha, weights = reweight(weights, erroneous)
        raw_alphas.append(alpha)
        rounds.append(
            BoostRound(index=m, n_train=len(subset_ids), err=err, alpha=alpha, weights=weights)
        )
        if err == 0.0:
            break  # perfect model: keep what we have, stop adding rounds
        if m < config.n_models:
            k = min(config.sample_k, n)
            subset_ids = sorted(all_ids, key=lambda pid: (-weights[pid], pid))[:k]

    alphas = np.asarray(raw_alphas, dtype=np.float64)
    alphas /= alphas.sum()
    return BoostedModel(heads=tuple(heads), alphas=alphas, rounds=tuple(rounds))


def boost_predict(
    model: BoostedModel,
    pairs: Iterable[LabeledPair],
    embeddings: Mapping[tuple[str, EmbeddingVariant], EmbeddingRecord],
    features: Mapping[str, FeatureVector],
) -> dict[str, float]:
    """Convex combination of the heads' scores under the normalized alphas."""
    pairs = list(pairs)
    combined: dict[str, float] = {}
    for head, alpha in zip(model.heads, model.alphas):
        for pair_id, score in predict(head, pairs, embeddings, features).items():
            combined[pair_id] = combined.get(pair_id, 0.0) + float(alpha) * score
    return combined
