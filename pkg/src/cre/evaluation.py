"""Evaluation: pooled precision-recall curves for top-k predictions,
MRR among top-k, top-1 prediction histograms, and multi-run confidence
bands.

The N/A relation (index 0) is excluded both from prediction candidates
and from the gold facts that define recall.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import NA_INDEX, Dataset, EntityPairBag
from .embedding import WordEmbeddingTable
from .errors import CreError
from .model import ModelParams, bag_normalized_scores, check_compatible, prepare_bag


@dataclass(frozen=True)
class PredictionRecord:
    pair_id: str
    relation: int
    score: float
    correct: bool


@dataclass(frozen=True)
class PRPoint:
    rank: int
    precision: float
    recall: float


@dataclass
class RunBand:
    recall_grid: np.ndarray
    mean_precision: np.ndarray
    std_precision: np.ndarray


def predict(params: ModelParams, bag: EntityPairBag, words: WordEmbeddingTable, k: int):
    """Top-k non-N/A relations for one bag, by normalized score."""
    preps = prepare_bag(bag, words, params.dims)
    ns = bag_normalized_scores(preps, bag, params).data
    pair_id = f"{bag.head_id}|{bag.tail_id}"
    order = sorted(
        (r for r in range(len(ns)) if r != NA_INDEX),
        key=lambda r: (-ns[r], r),
    )
    gold = bag.gold_relations
    return [
        PredictionRecord(pair_id, r, float(ns[r]), r in gold and r != NA_INDEX)
        for r in order[:k]
    ]


def pr_curve(records, total_gold_facts: int):
    """Pooled precision-recall walk over records sorted by score."""
    if total_gold_facts < 1:
        raise CreError("total_gold_facts must be >= 1")
    ordered = sorted(records, key=lambda r: (-r.score, r.pair_id, r.relation))
    points = []
    correct = 0
    for rank, rec in enumerate(ordered, start=1):
        if rec.correct:
            correct += 1
        points.append(PRPoint(rank, correct / rank, correct / total_gold_facts))
    return points


def mrr_at_k(per_pair_topk: dict, gold: dict, k: int) -> float:
    """Mean reciprocal rank of the first correct prediction within the
    top k, over pairs with at least one non-N/A gold relation."""
    if k < 1:
        raise CreError("k must be >= 1")
    total = 0.0
    count = 0
    for pair_id, gold_set in gold.items():
        positive = {r for r in gold_set if r != NA_INDEX}
        if not positive:
            continue
        count += 1
        for rank, rel in enumerate(per_pair_topk.get(pair_id, [])[:k], start=1):
            if rel in positive:
                total += 1.0 / rank
                break
    if count == 0:
        raise CreError("no positive pairs to evaluate")
    return total / count


def top1_histogram(per_pair_top1: dict, relation_vocab, gold: dict | None = None):
    """Counts of top-1 predictions per relation, with the gold-fact
    histogram alongside when gold sets are provided."""
    predicted = {}
    for rel in per_pair_top1.values():
        predicted[rel] = predicted.get(rel, 0) + 1
    result = {
        "predicted": {relation_vocab[r]: c for r, c in sorted(predicted.items())},
        "distinct_top1_count": len(predicted),
    }
    if gold is not None:
        gold_counts = {}
        for gold_set in gold.values():
            for r in gold_set:
                if r != NA_INDEX:
                    gold_counts[r] = gold_counts.get(r, 0) + 1
        result["gold"] = {relation_vocab[r]: c for r, c in sorted(gold_counts.items())}
    return result


def confidence_bands(curves, grid_step: float = 0.01) -> RunBand:
    """Per-recall-level mean and sample standard deviation of precision
    across runs, on a fixed recall grid."""
    if len(curves) < 2:
        raise CreError("confidence bands need at least 2 runs")
    grid = np.round(np.arange(0.0, 1.0 + grid_step / 2, grid_step), 10)
    rows = []
    for curve in curves:
        if not curve:
            raise CreError("cannot build bands from an empty curve")
        recalls = np.array([p.recall for p in curve])
        precisions = np.array([p.precision for p in curve])
        row = np.zeros_like(grid)
        for i, g in enumerate(grid):
            # right-continuous step: precision of the first point whose
            # recall reaches g; zero beyond the curve's maximum recall
            hits = np.nonzero(recalls >= g)[0]
            row[i] = precisions[hits[0]] if hits.size else 0.0
        rows.append(row)
    stacked = np.vstack(rows)
    return RunBand(grid, stacked.mean(axis=0), stacked.std(axis=0, ddof=1))


def precision_at_recall(points, recall_level: float) -> float:
    """Precision of the first pooled point whose recall reaches the level."""
    for p in points:
        if p.recall >= recall_level:
            return p.precision
    return 0.0


def evaluate_model(
    params: ModelParams,
    test: Dataset,
    words: WordEmbeddingTable,
    k_values=(1, 3, 5),
) -> dict:
    """Full metrics report for a frozen model on a test split."""
    check_compatible(params, test)
    max_k = max(k_values)
    per_pair_topk = {}
    gold = {}
    records_by_k = {k: [] for k in k_values}
    for bag in test.bags:
        recs = predict(params, bag, words, max_k)
        pair_id = recs[0].pair_id if recs else f"{bag.head_id}|{bag.tail_id}"
        per_pair_topk[pair_id] = [r.relation for r in recs]
        gold[pair_id] = set(bag.gold_relations)
        for k in k_values:
            records_by_k[k].extend(recs[:k])

    total_gold = sum(1 for g in gold.values() for r in g if r != NA_INDEX)
    if total_gold < 1:
        raise CreError("test split has no positive gold facts")

    curves = {k: pr_curve(records_by_k[k], total_gold) for k in k_values}
    top1 = {pid: ranks[0] for pid, ranks in per_pair_topk.items() if ranks}
    histogram = top1_histogram(top1, params.relation_vocab, gold)
    report = {
        "mrr_top3": mrr_at_k(per_pair_topk, gold, 3),
        "mrr_top5": mrr_at_k(per_pair_topk, gold, 5),
        "pr_curves": {
            str(k): [[p.recall, p.precision] for p in curves[k]] for k in k_values
        },
        "top1_histogram": histogram["predicted"],
        "gold_histogram": histogram.get("gold", {}),
        "distinct_top1_count": histogram["distinct_top1_count"],
        "total_gold_facts": total_gold,
        "test_pairs": len(test.bags),
    }
    return report


def write_pr_csv(report: dict, path) -> None:
    """Delimited PR-curve dump: one row per pooled prediction rank."""
    with open(path, "w", encoding="utf-8") as f:
        f.write("k,rank,recall,precision\n")
        for k in sorted(report["pr_curves"], key=int):
            for rank, (recall, precision) in enumerate(report["pr_curves"][k], start=1):
                f.write(f"{k},{rank},{recall:.10g},{precision:.10g}\n")
