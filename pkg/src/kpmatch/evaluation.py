"""Ranking metric: mAP strict/relaxed under two evaluation methods.

Per (topic, stance) group, scored pairs are reduced to each argument's
best-scoring keypoint (optional), ranked by descending score, and scored
with average precision. Undecided gold labels count as irrelevant under
Strict and relevant under Relaxed. The Default method runs AP over the
full ranked list; the TopHalf method truncates the ranking to its top
half (the later shared-task method where a perfect score needs only the
top 50% of predictions to be positive).

These formalizations are reconstructions of the shared task's two
evaluation modes and are not guaranteed to match the official scorer
bit for bit.
"""

from __future__ import annotations

import json
import math
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from kpmatch.corpus import GoldLabel, LabeledPair
from kpmatch.errors import DataError

GroupKey = tuple[str, int]  # (topic, stance serialized as +1/-1)


class EvalMethod(Enum):
    DEFAULT = "default"
    TOPHALF = "tophalf"


class LabelPolicy(Enum):
    STRICT = "strict"
    RELAXED = "relaxed"


@dataclass(frozen=True)
class ScoredPair:
    pair: LabeledPair
    score: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.score):
            raise ValueError(f"non-finite score for pair {self.pair.pair_id!r}")


@dataclass(frozen=True)
class EvalReport:
    """Per-group APs for the requested policy plus both mAP summaries.

    map_strict and map_relaxed are means over groups whose AP is defined
    (None when no group qualifies). n_groups counts all distinct groups.
    """

    method: EvalMethod
    policy: LabelPolicy
    per_group: Mapping[GroupKey, float | None]
    map_strict: float | None
    map_relaxed: float | None
    n_groups: int


@dataclass(frozen=True)
class SeedAggregate:
    mean: float
    std: float  # sample standard deviation (n-1); 0 when n_seeds == 1
    n_seeds: int

    def render(self) -> str:
        return f"{self.mean:.3f} ± {self.std:.3f}"


def group_label(key: GroupKey) -> str:
    topic, stance_value = key
    return f"{topic}/{'pro' if stance_value == 1 else 'con'}"


def best_match_per_argument(scored: Iterable[ScoredPair]) -> list[ScoredPair]:
    """Keep each argument's best-scoring pair; score ties go to the smaller
    keypoint id. Input pairs are expected to share one (topic, stance)."""
    best: dict[str, ScoredPair] = {}
    for sp in scored:
        current = best.get(sp.pair.argument_id)
        if current is None or (-sp.score, sp.pair.keypoint_id) < (
            -current.score,
            current.pair.keypoint_id,
        ):
            best[sp.pair.argument_id] = sp
    return [best[arg_id] for arg_id in sorted(best)]


def average_precision(relevance: Sequence[int], n_relevant_total: int) -> float | None:
    """AP of a descending-confidence 0/1 relevance list.

    Returns None (undefined) when n_relevant_total is 0; such groups are
    excluded from the mean.
    """
    ones = sum(1 for r in relevance if r)
    if n_relevant_total < 0:
        raise ValueError("n_relevant_total must be >= 0")
    if n_relevant_total < ones:
        raise ValueError(
            f"n_relevant_total={n_relevant_total} is less than the {ones} relevant entries"
        )
    if n_relevant_total == 0:
        return None
    hits = 0
    acc = 0.0
    for k, rel in enumerate(relevance, start=1):
        if rel:
            hits += 1
            acc += hits / k
    return acc / n_relevant_total


def _relevance(label: GoldLabel, policy: LabelPolicy) -> int:
    if label is GoldLabel.MATCH:
        return 1
    if label is GoldLabel.NO_MATCH:
        return 0
    return 1 if policy is LabelPolicy.RELAXED else 0


def _ranked_groups(
    scored: Iterable[ScoredPair],
    best_match: bool,
) -> dict[GroupKey, list[ScoredPair]]:
    groups: dict[GroupKey, list[ScoredPair]] = {}
    for sp in scored:
        groups.setdefault((sp.pair.topic, sp.pair.stance.value), []).append(sp)
    ranked = {}
    for key in sorted(groups):
        members = groups[key]
        if best_match:
            members = best_match_per_argument(members)
        # Descending score; ties broken by argument id, then keypoint id.
        members = sorted(
            members, key=lambda sp: (-sp.score, sp.pair.argument_id, sp.pair.keypoint_id)
        )
        ranked[key] = members
    return ranked


def _group_ap(members: Sequence[ScoredPair], policy: LabelPolicy, method: EvalMethod) -> float | None:
    relevance = [_relevance(sp.pair.label, policy) for sp in members]
    n_relevant = sum(relevance)
    if method is EvalMethod.DEFAULT:
        return average_precision(relevance, n_relevant)
    half = math.ceil(len(relevance) / 2)
    return average_precision(relevance[:half], min(n_relevant, half))


def _mean(values: Iterable[float | None]) -> float | None:
    defined = [v for v in values if v is not None]
    if not defined:
        return None
    return sum(defined) / len(defined)


def map_score(
    scored: Iterable[ScoredPair],
    policy: LabelPolicy,
    method: EvalMethod,
    *,
    best_match: bool = True,
) -> EvalReport:
    """Mean average precision over (topic, stance) groups.

    Depends on scores only through the ranking, so any strictly increasing
    transform of the scores leaves the result unchanged. Set
    best_match=False to rank the full scored pair list per group instead
    of reducing to one pair per argument.
    """
    scored = list(scored)
    if not scored:
        raise DataError("cannot evaluate an empty scored pair collection")
    ranked = _ranked_groups(scored, best_match)
    per_policy: dict[LabelPolicy, dict[GroupKey, float | None]] = {}
    for pol in LabelPolicy:
        per_policy[pol] = {key: _group_ap(members, pol, method) for key, members in ranked.items()}
    return EvalReport(
        method=method,
        policy=policy,
        per_group=per_policy[policy],
        map_strict=_mean(per_policy[LabelPolicy.STRICT].values()),
        map_relaxed=_mean(per_policy[LabelPolicy.RELAXED].values()),
        n_groups=len(ranked),
    )


def full_report(
    scored: Iterable[ScoredPair],
    *,
    best_match: bool = True,
) -> dict[str, dict[str, dict]]:
    """Both methods x both policies, JSON-ready (groups keyed by label)."""
    scored = list(scored)
    out: dict[str, dict[str, dict]] = {}
    for method in EvalMethod:
        out[method.value] = {}
        for policy in LabelPolicy:
            report = map_score(scored, policy, method, best_match=best_match)
            out[method.value][policy.value] = {
                "map": report.map_strict if policy is LabelPolicy.STRICT else report.map_relaxed,
                "per_group": {
                    group_label(key): ap for key, ap in sorted(report.per_group.items())
                },
            }
    return out


def aggregate_seeds(values: Sequence[float]) -> SeedAggregate:
    """Mean and sample standard deviation across per-seed metric values."""
    if not values:
        raise ValueError("aggregate_seeds requires at least one value")
    n = len(values)
    mean = sum(values) / n
    if n == 1:
        return SeedAggregate(mean=mean, std=0.0, n_seeds=1)
    var = sum((v - mean) ** 2 for v in values) / (n - 1)
    return SeedAggregate(mean=mean, std=math.sqrt(var), n_seeds=n)


def read_report(path) -> dict:
    """Read a run-level report JSON (per-seed per-group APs under both
    policies and methods, plus seed aggregates) back into plain dicts."""
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    for key in ("per_seed", "aggregate"):
        if key not in obj:
            raise DataError(f"{path}: not a run report (missing {key!r})")
    return obj


def scored_from_predictions(
    pairs: Iterable[LabeledPair],
    predictions: Mapping[str, float],
) -> list[ScoredPair]:
    """Join predicted scores onto expanded pairs; every pair must be scored."""
    out = []
    for pair in pairs:
        if pair.pair_id not in predictions:
            raise DataError(f"missing score for expanded pair {pair.pair_id!r}")
        out.append(ScoredPair(pair=pair, score=float(predictions[pair.pair_id])))
    return out
