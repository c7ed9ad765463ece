"""PR curves, MRR, histograms, and confidence bands against brute-force
oracles."""

import math

import numpy as np
import pytest

from cre import evaluation, objective
from cre.errors import CreError
from cre.evaluation import (
    PredictionRecord,
    PRPoint,
    confidence_bands,
    mrr_at_k,
    pr_curve,
    precision_at_recall,
    top1_histogram,
)


def rec(pair, relation, score, correct):
    return PredictionRecord(pair, relation, score, correct)


class TestPRCurve:
    def test_hand_example(self):
        records = [rec("p1", 1, 0.9, True), rec("p2", 2, 0.8, False), rec("p1", 3, 0.7, True)]
        points = pr_curve(records, total_gold_facts=2)
        assert [(p.precision, p.recall) for p in points] == [
            (1.0, 0.5), (0.5, 0.5), (2 / 3, 1.0)
        ]

    def test_all_correct(self):
        points = pr_curve([rec(f"p{i}", 1, 1.0 - i / 10, True) for i in range(5)], 5)
        assert all(p.precision == 1.0 for p in points)

    def test_all_wrong(self):
        points = pr_curve([rec(f"p{i}", 1, 1.0 - i / 10, False) for i in range(5)], 5)
        assert all(p.recall == 0.0 for p in points)

    def test_empty_records(self):
        assert pr_curve([], 3) == []

    def test_recall_monotone_random(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            records = [
                rec(f"p{i}", int(rng.integers(1, 5)), float(rng.random()), bool(rng.random() < 0.5))
                for i in range(int(rng.integers(1, 30)))
            ]
            points = pr_curve(records, total_gold_facts=10)
            recalls = [p.recall for p in points]
            assert recalls == sorted(recalls)
            assert all(0.0 <= p.precision <= 1.0 for p in points)

    def test_deterministic_tie_break(self):
        records = [rec("b", 2, 0.5, False), rec("a", 1, 0.5, True), rec("a", 3, 0.5, False)]
        points = pr_curve(records, 1)
        assert points[0].precision == 1.0  # ("a", 1) sorts first


class TestMRR:
    def test_rank_two(self):
        assert mrr_at_k({"p": [4, 2, 3]}, {"p": {2}}, 3) == 0.5

    def test_mean_over_pairs(self):
        topk = {"a": [1, 9, 9], "b": [9, 2, 9]}
        gold = {"a": {1}, "b": {2}}
        assert mrr_at_k(topk, gold, 3) == 0.75

    def test_missing_gold_scores_zero(self):
        assert mrr_at_k({"p": [4, 5, 6]}, {"p": {1}}, 3) == 0.0

    def test_negative_pairs_excluded(self):
        topk = {"pos": [1], "neg": [1]}
        gold = {"pos": {1}, "neg": {0}}
        assert mrr_at_k(topk, gold, 3) == 1.0

    def test_no_positive_pairs_error(self):
        with pytest.raises(CreError):
            mrr_at_k({"p": [1]}, {"p": {0}}, 3)

    def test_brute_force_oracle(self):
        """Pipeline MRR equals a direct enumeration over raw score
        rankings for random small instances."""
        rng = np.random.default_rng(42)
        for _ in range(20):
            n_pairs = int(rng.integers(1, 9))
            n_rel = int(rng.integers(2, 7))
            k = int(rng.choice([3, 5]))
            raw = {f"p{i}": rng.uniform(0.1, 2.0, n_rel) for i in range(n_pairs)}
            gold = {
                f"p{i}": set(rng.choice(np.arange(1, n_rel),
                                        size=int(rng.integers(1, n_rel)),
                                        replace=False).tolist())
                for i in range(n_pairs)
            }
            topk = {
                p: [r for r, _ in objective.top_k(objective.normalize(s), n_rel) if r != 0][:k]
                for p, s in raw.items()
            }
            # oracle: re-sort raw scores by definition, find first correct rank
            expect_total, expect_n = 0.0, 0
            for p, s in raw.items():
                positive = {r for r in gold[p] if r != 0}
                if not positive:
                    continue
                expect_n += 1
                order = sorted((r for r in range(n_rel) if r != 0),
                               key=lambda r: (-s[r], r))[:k]
                for rank, r in enumerate(order, start=1):
                    if r in positive:
                        expect_total += 1.0 / rank
                        break
            if expect_n == 0:
                continue
            got = mrr_at_k(topk, gold, k)
            assert got == pytest.approx(expect_total / expect_n, abs=1e-12)


class TestHistogram:
    def test_counts_and_distinct(self):
        out = top1_histogram({"a": 1, "b": 1, "c": 2}, ["N/A", "r1", "r2"])
        assert out["predicted"] == {"r1": 2, "r2": 1}
        assert out["distinct_top1_count"] == 2

    def test_empty(self):
        out = top1_histogram({}, ["N/A", "r1"])
        assert out["predicted"] == {} and out["distinct_top1_count"] == 0

    def test_gold_side_by_side(self):
        out = top1_histogram({"a": 1}, ["N/A", "r1", "r2"],
                             gold={"a": {1}, "b": {2, 1}, "c": {0}})
        assert out["gold"] == {"r1": 2, "r2": 1}


class TestConfidenceBands:
    def curve(self, pairs):
        return [PRPoint(i + 1, p, r) for i, (r, p) in enumerate(pairs)]

    def test_identical_curves_zero_std(self):
        c = self.curve([(0.2, 1.0), (0.6, 0.9), (1.0, 0.8)])
        band = confidence_bands([c, c, c])
        assert np.all(band.std_precision < 1e-12)

    def test_sample_std_of_two(self):
        a = self.curve([(1.0, 0.4)])
        b = self.curve([(1.0, 0.6)])
        band = confidence_bands([a, b])
        assert band.mean_precision[0] == pytest.approx(0.5)
        assert band.std_precision[0] == pytest.approx(math.sqrt(0.02), abs=1e-12)

    def test_single_run_error(self):
        with pytest.raises(CreError):
            confidence_bands([self.curve([(1.0, 0.5)])])

    def test_empty_curve_error(self):
        with pytest.raises(CreError):
            confidence_bands([self.curve([(1.0, 0.5)]), []])


class TestPredict:
    def test_na_excluded_and_saturation(self, tiny_data):
        from cre.model import init_params
        from conftest import TINY_DIMS, tiny_encoder

        ds = tiny_data["dataset"]
        params = init_params(TINY_DIMS, tiny_encoder("cnn"), "transe", "sum",
                             ds.relation_vocab, ds.entity_vocab, seed=0)
        bag = ds.bags[0]
        recs = evaluation.predict(params, bag, tiny_data["words"], k=99)
        assert len(recs) == len(ds.relation_vocab) - 1
        assert all(r.relation != 0 for r in recs)
        scores = [r.score for r in recs]
        assert scores == sorted(scores, reverse=True)

    def test_identical_bags_identical_records(self, tiny_data):
        from cre.model import init_params
        from conftest import TINY_DIMS, tiny_encoder

        ds = tiny_data["dataset"]
        params = init_params(TINY_DIMS, tiny_encoder("cnn"), "transe", "sum",
                             ds.relation_vocab, ds.entity_vocab, seed=0)
        bag = ds.bags[0]
        assert evaluation.predict(params, bag, tiny_data["words"], 3) == \
            evaluation.predict(params, bag, tiny_data["words"], 3)


def test_precision_at_recall():
    points = [PRPoint(1, 1.0, 0.2), PRPoint(2, 0.8, 0.6), PRPoint(3, 0.5, 0.6)]
    assert precision_at_recall(points, 0.5) == 0.8
    assert precision_at_recall(points, 0.9) == 0.0
