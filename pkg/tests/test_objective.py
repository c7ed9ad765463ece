"""Aggregation, normalization, targets, loss, and top-k prediction."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cre import objective
from cre.errors import CreError

positive_vectors = st.lists(
    st.floats(1e-3, 1e3, allow_nan=False, allow_infinity=False), min_size=2, max_size=8
)


class TestAggregate:
    def test_sum(self):
        got = objective.aggregate([[0.3, 0.7], [0.5, 0.1]], "sum")
        np.testing.assert_allclose(got, [0.8, 0.8])

    @pytest.mark.parametrize("mode", objective.AGGREGATION_MODES)
    def test_single_sentence_identity(self, mode):
        np.testing.assert_allclose(objective.aggregate([[0.2, 0.9]], mode), [0.2, 0.9])

    @pytest.mark.parametrize("mode", objective.AGGREGATION_MODES)
    def test_permutation_invariance(self, mode):
        rng = np.random.default_rng(0)
        scores = rng.uniform(0.1, 1.9, (6, 4))
        base = objective.aggregate(scores, mode)
        shuffled = scores[rng.permutation(6)]
        np.testing.assert_allclose(objective.aggregate(shuffled, mode), base)

    def test_empty_error(self):
        with pytest.raises(CreError):
            objective.aggregate([], "sum")

    def test_sum_additive_over_subsets(self):
        rng = np.random.default_rng(1)
        scores = rng.uniform(0.1, 1.9, (5, 3))
        whole = objective.aggregate(scores, "sum")
        parts = objective.aggregate(scores[:2], "sum") + objective.aggregate(scores[2:], "sum")
        np.testing.assert_allclose(whole, parts)


class TestNormalize:
    def test_example(self):
        np.testing.assert_allclose(objective.normalize([1, 1, 2]), [0.25, 0.25, 0.5])

    def test_uniform(self):
        np.testing.assert_allclose(objective.normalize([7.0] * 5, ), [0.2] * 5)

    @given(positive_vectors)
    def test_sums_to_one_and_keeps_argmax(self, vec):
        ns = objective.normalize(vec)
        assert abs(ns.sum() - 1.0) < 1e-9
        assert int(np.argmax(ns)) == int(np.argmax(vec))

    def test_nonpositive_error(self):
        with pytest.raises(CreError):
            objective.normalize([1.0, 0.0])


class TestTargets:
    def test_examples(self):
        np.testing.assert_allclose(objective.targets({0, 2}, 4), [0.5, 0, 0.5, 0])
        np.testing.assert_allclose(objective.targets({3}, 4), [0, 0, 0, 1.0])
        np.testing.assert_allclose(objective.targets({0, 1, 2, 3}, 4), [0.25] * 4)

    def test_sum_and_support(self):
        m = objective.targets({1, 4, 5}, 8)
        assert m.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.count_nonzero(m) == 3

    def test_empty_error(self):
        with pytest.raises(CreError):
            objective.targets(set(), 4)


class TestPairLoss:
    def test_worked_example(self):
        m = objective.targets({0}, 2)
        got = objective.pair_loss([0.8, 0.2], m, gold_size=1)
        expected = -math.log(0.8) + (0 - 1.0) * math.log(1 - 0.2)
        assert got == pytest.approx(expected, abs=1e-9)
        assert got == pytest.approx(0.446287, abs=1e-6)

    def test_perfect_prediction_limit(self):
        m = objective.targets({1}, 3)
        assert objective.pair_loss([1e-9, 1 - 2e-9, 1e-9], m, 1) < 1e-7

    def test_nonnegative_terms(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            n = int(rng.integers(2, 6))
            ns = objective.normalize(rng.uniform(0.1, 2.0, n))
            gold = set(rng.choice(n, size=int(rng.integers(1, n + 1)), replace=False).tolist())
            loss = objective.pair_loss(ns, objective.targets(gold, n), len(gold))
            assert loss >= 0.0

    def test_exact_zero_one_clamped(self):
        m = objective.targets({0}, 2)
        assert math.isfinite(objective.pair_loss([1.0, 0.0], m, 1))


class TestTotalLoss:
    def test_lambda_zero(self):
        assert objective.total_loss([1.0, 2.0], 0.0, [np.ones((2, 2))]) == 3.0

    def test_zero_params(self):
        assert objective.total_loss([1.0], 1.0, [np.zeros(5)]) == 1.0

    def test_lambda_linearity(self):
        tensors = [np.arange(4.0), np.ones((2, 3))]
        data = objective.total_loss([2.0], 0.0, tensors)
        one = objective.total_loss([2.0], 1.0, tensors)
        two = objective.total_loss([2.0], 2.0, tensors)
        assert two - data == pytest.approx(2 * (one - data), abs=1e-12)


class TestTopK:
    def test_example(self):
        assert objective.top_k([0.1, 0.6, 0.3], 2) == [(1, 0.6), (2, 0.3)]

    def test_argmax(self):
        assert objective.top_k([0.2, 0.5, 0.3], 1)[0][0] == 1

    def test_tie_break_lower_index(self):
        assert objective.top_k([0.4, 0.4, 0.2], 1) == [(0, 0.4)]

    def test_k_exceeds_length(self):
        assert len(objective.top_k([0.5, 0.5], 10)) == 2

    @given(positive_vectors, st.integers(1, 8))
    def test_invariant_under_normalization(self, vec, k):
        raw = objective.top_k(vec, k)
        normalized = objective.top_k(objective.normalize(vec), k)
        assert [r for r, _ in raw] == [r for r, _ in normalized]
