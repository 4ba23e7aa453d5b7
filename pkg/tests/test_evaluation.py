import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kpmatch.corpus import GoldLabel, LabeledPair, Stance
from kpmatch.errors import DataError
from kpmatch.evaluation import (
    EvalMethod,
    LabelPolicy,
    ScoredPair,
    aggregate_seeds,
    average_precision,
    best_match_per_argument,
    full_report,
    map_score,
    scored_from_predictions,
)


def pair(arg, kp, label, topic="t", stance=Stance.PRO):
    return LabeledPair(argument_id=arg, keypoint_id=kp, topic=topic, stance=stance, label=label)


def sp(arg, kp, label, score, topic="t", stance=Stance.PRO):
    return ScoredPair(pair=pair(arg, kp, label, topic, stance), score=score)


M, N, U = GoldLabel.MATCH, GoldLabel.NO_MATCH, GoldLabel.UNDECIDED


class TestBestMatch:
    def test_singleton(self):
        scored = [sp("a1", "k1", M, 0.3)]
        assert best_match_per_argument(scored) == scored

    def test_argmax(self):
        scored = [sp("a1", "kpA", M, 0.9), sp("a1", "kpB", N, 0.4)]
        kept = best_match_per_argument(scored)
        assert [x.pair.keypoint_id for x in kept] == ["kpA"]

    def test_tie_goes_to_smaller_keypoint_id(self):
        scored = [sp("a1", "kp_2", N, 0.7), sp("a1", "kp_1", M, 0.7)]
        kept = best_match_per_argument(scored)
        assert kept[0].pair.keypoint_id == "kp_1"

    def test_one_per_argument(self):
        scored = [
            sp("a1", "k1", M, 0.2),
            sp("a1", "k2", N, 0.8),
            sp("a2", "k1", N, 0.5),
            sp("a2", "k2", M, 0.6),
        ]
        kept = best_match_per_argument(scored)
        assert [(x.pair.argument_id, x.pair.keypoint_id) for x in kept] == [
            ("a1", "k2"),
            ("a2", "k2"),
        ]


class TestAveragePrecision:
    def test_perfect_ranking(self):
        assert average_precision([1, 1, 1], 3) == pytest.approx(1.0)

    def test_mixed_ranking(self):
        assert average_precision([1, 0, 1], 2) == pytest.approx(5 / 6)

    def test_undefined_when_no_relevant(self):
        assert average_precision([0, 0], 0) is None

    def test_rejects_undercounted_total(self):
        with pytest.raises(ValueError):
            average_precision([1, 1], 1)

    def test_brute_force_oracle_over_prefixes(self):
        relevance = [1, 0, 0, 1, 1, 0]
        total = sum(relevance)
        acc = 0.0
        for k in range(1, len(relevance) + 1):
            if relevance[k - 1]:
                acc += sum(relevance[:k]) / k
        assert average_precision(relevance, total) == pytest.approx(acc / total)


class TestMapScore:
    def test_perfect_system_scores_one(self):
        scored = [
            sp("a1", "k1", M, 0.9),
            sp("a1", "k2", N, 0.1),
            sp("a2", "k2", M, 0.8),
            sp("a2", "k1", N, 0.2),
        ]
        for method in EvalMethod:
            report = map_score(scored, LabelPolicy.STRICT, method)
            assert report.map_strict == pytest.approx(1.0)
            assert report.map_relaxed == pytest.approx(1.0)

    def test_worked_example_both_methods(self):
        # Ranked relevance [1, 0, 1, 0] after reduction.
        scored = [
            sp("a1", "k1", M, 0.9),
            sp("a2", "k1", N, 0.7),
            sp("a3", "k1", M, 0.5),
            sp("a4", "k1", N, 0.3),
        ]
        default = map_score(scored, LabelPolicy.STRICT, EvalMethod.DEFAULT)
        assert default.map_strict == pytest.approx((1 + 2 / 3) / 2)
        tophalf = map_score(scored, LabelPolicy.STRICT, EvalMethod.TOPHALF)
        assert tophalf.map_strict == pytest.approx(0.5)

    def test_tophalf_all_relevant_top_half_is_one(self):
        scored = [
            sp("a1", "k1", M, 0.9),
            sp("a2", "k1", M, 0.8),
            sp("a3", "k1", N, 0.4),
            sp("a4", "k1", M, 0.2),
        ]
        report = map_score(scored, LabelPolicy.STRICT, EvalMethod.TOPHALF)
        assert report.map_strict == pytest.approx(1.0)

    def test_undecided_policy_flip(self):
        scored = [sp("a1", "k1", U, 0.9), sp("a2", "k1", M, 0.5)]
        report = map_score(scored, LabelPolicy.STRICT, EvalMethod.DEFAULT)
        assert report.map_strict == pytest.approx(0.5)
        assert report.map_relaxed == pytest.approx(1.0)

    def test_groups_evaluated_independently(self):
        scored = [
            sp("a1", "k1", M, 0.9, topic="t1"),
            sp("a2", "k2", N, 0.8, topic="t2"),
            sp("b1", "k3", M, 0.7, topic="t1", stance=Stance.CON),
        ]
        report = map_score(scored, LabelPolicy.STRICT, EvalMethod.DEFAULT)
        assert report.n_groups == 3
        # The all-NoMatch group has no relevant pair and is excluded.
        assert report.map_strict == pytest.approx(1.0)

    def test_empty_input_errors(self):
        with pytest.raises(DataError):
            map_score([], LabelPolicy.STRICT, EvalMethod.DEFAULT)

    def test_ranking_tie_broken_by_argument_id(self):
        scored = [
            sp("a2", "k1", M, 0.5),
            sp("a1", "k1", N, 0.5),
        ]
        report = map_score(scored, LabelPolicy.STRICT, EvalMethod.DEFAULT)
        # a1 (NoMatch) ranks first on the tie, so AP = 1/2.
        assert report.map_strict == pytest.approx(0.5)

    def test_no_best_match_keeps_all_pairs(self):
        scored = [
            sp("a1", "k1", M, 0.9),
            sp("a1", "k2", M, 0.8),
            sp("a2", "k1", N, 0.7),
            sp("a2", "k2", N, 0.6),
        ]
        reduced = map_score(scored, LabelPolicy.STRICT, EvalMethod.DEFAULT)
        unreduced = map_score(scored, LabelPolicy.STRICT, EvalMethod.DEFAULT, best_match=False)
        assert reduced.map_strict == pytest.approx(1.0)
        assert unreduced.map_strict == pytest.approx(1.0)
        # With four retained pairs the top-half list differs from the reduced one.
        assert map_score(
            scored, LabelPolicy.STRICT, EvalMethod.TOPHALF, best_match=False
        ).map_strict == pytest.approx(1.0)

    def test_order_invariance(self):
        scored = [
            sp("a1", "k1", M, 0.9),
            sp("a2", "k1", U, 0.7),
            sp("a3", "k1", N, 0.5),
            sp("a4", "k1", M, 0.3),
        ]
        base = map_score(scored, LabelPolicy.RELAXED, EvalMethod.TOPHALF)
        shuffled = map_score(list(reversed(scored)), LabelPolicy.RELAXED, EvalMethod.TOPHALF)
        assert base == shuffled

    @given(st.permutations(range(6)))
    @settings(max_examples=40, deadline=None)
    def test_order_invariance_property(self, order):
        scored = [
            sp(f"a{i}", f"k{j}", label, score)
            for i, (j, label, score) in enumerate(
                [
                    (1, M, 0.9),
                    (1, N, 0.8),
                    (2, U, 0.7),
                    (2, M, 0.6),
                    (3, N, 0.5),
                    (3, M, 0.4),
                ]
            )
        ]
        shuffled = [scored[i] for i in order]
        for method in EvalMethod:
            assert map_score(scored, LabelPolicy.STRICT, method) == map_score(
                shuffled, LabelPolicy.STRICT, method
            )

    def test_monotone_transform_invariance(self):
        scored = [
            sp("a1", "k1", M, 0.9),
            sp("a2", "k1", N, 0.6),
            sp("a3", "k1", U, 0.4),
            sp("a4", "k1", M, 0.2),
        ]
        transformed = [
            ScoredPair(pair=x.pair, score=math.tanh(3 * x.score) * 0.5 + 0.5) for x in scored
        ]
        for method in EvalMethod:
            for policy in LabelPolicy:
                a = map_score(scored, policy, method)
                b = map_score(transformed, policy, method)
                assert a.map_strict == pytest.approx(b.map_strict)
                assert a.map_relaxed == pytest.approx(b.map_relaxed)


class TestAggregateSeeds:
    def test_constant_values(self):
        agg = aggregate_seeds([0.5, 0.5, 0.5])
        assert (agg.mean, agg.std, agg.n_seeds) == (0.5, 0.0, 3)
        assert agg.render() == "0.500 ± 0.000"

    def test_closed_form(self):
        agg = aggregate_seeds([0.9, 0.92, 0.91])
        assert agg.mean == pytest.approx(0.91)
        assert agg.std == pytest.approx(0.01)
        assert agg.render() == "0.910 ± 0.010"

    def test_single_value(self):
        agg = aggregate_seeds([0.7])
        assert (agg.mean, agg.std, agg.n_seeds) == (0.7, 0.0, 1)
        assert agg.render() == "0.700 ± 0.000"

    def test_empty_errors(self):
        with pytest.raises(ValueError):
            aggregate_seeds([])


class TestScoredFromPredictions:
    def test_joins_scores(self):
        pairs = [pair("a1", "k1", M), pair("a2", "k1", N)]
        scored = scored_from_predictions(pairs, {"a1::k1": 0.9, "a2::k1": 0.1})
        assert [x.score for x in scored] == [0.9, 0.1]

    def test_missing_score_errors(self):
        pairs = [pair("a1", "k1", M)]
        with pytest.raises(DataError, match="missing score"):
            scored_from_predictions(pairs, {})


class TestFullReport:
    def test_structure(self):
        scored = [sp("a1", "k1", M, 0.9), sp("a2", "k1", U, 0.4)]
        report = full_report(scored)
        assert set(report) == {"default", "tophalf"}
        for method in report.values():
            assert set(method) == {"strict", "relaxed"}
            for policy in method.values():
                assert "map" in policy and "per_group" in policy
