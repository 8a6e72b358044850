"""External validity indices comparing a predicted labeling with ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import comb

UNMATCHED = 0


@dataclass(frozen=True)
class ContingencyTable:
    m: np.ndarray
    pred_ids: np.ndarray
    truth_ids: np.ndarray

    @property
    def rows(self) -> np.ndarray:
        return self.m.sum(axis=1)

    @property
    def cols(self) -> np.ndarray:
        return self.m.sum(axis=0)

    @property
    def n(self) -> int:
        return int(self.m.sum())


@dataclass(frozen=True)
class PairCounts:
    a: int
    b: int
    c: int
    d: int

    @property
    def total(self) -> int:
        return self.a + self.b + self.c + self.d


def _pair(pred, truth):
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape or pred.ndim != 1:
        raise ValueError(f"labelings differ in length: {pred.shape} vs {truth.shape}")
    return pred, truth


def contingency(pred, truth) -> ContingencyTable:
    pred, truth = _pair(pred, truth)
    pid, pc = np.unique(pred, return_inverse=True)
    tid, tc = np.unique(truth, return_inverse=True)
    m = np.zeros((len(pid), len(tid)), dtype=np.int64)
    np.add.at(m, (pc, tc), 1)
    return ContingencyTable(m, pid, tid)


def _c2(v):
    return comb(np.asarray(v), 2, exact=False)


def pair_counts(pred, truth) -> PairCounts:
    """a: together in both, b: together only in pred, c: together only in truth, d: apart in both."""
    ct = contingency(pred, truth)
    n = ct.n
    if n < 2:
        raise ValueError("pair counts need at least two samples")
    m = ct.m
    a = int((m * (m - 1) // 2).sum())
    same_pred = int((ct.rows * (ct.rows - 1) // 2).sum())
    same_truth = int((ct.cols * (ct.cols - 1) // 2).sum())
    b = same_pred - a
    c = same_truth - a
    d = n * (n - 1) // 2 - a - b - c
    return PairCounts(a, b, c, d)


def align_labels(pred, truth) -> dict:
    """Injective map pred id -> truth id maximising matched samples.

    Pred ids left without a partner map to ``UNMATCHED``.
    """
    ct = contingency(pred, truth)
    rows, cols = linear_sum_assignment(ct.m, maximize=True)
    mapping = {p.item(): UNMATCHED for p in ct.pred_ids}
    for r, c in zip(rows, cols):
        mapping[ct.pred_ids[r].item()] = ct.truth_ids[c].item()
    return mapping


def accuracy(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    mapping = align_labels(pred, truth)
    aligned = np.array([mapping[p.item()] for p in pred])
    return float(np.mean(aligned == truth))


def f_measure(pred, truth) -> float:
    pc = pair_counts(pred, truth)
    if pc.a + pc.b + pc.c == 0:
        # neither partition puts any pair together: they coincide
        return 1.0
    if pc.a == 0:
        return 0.0
    precision = pc.a / (pc.a + pc.c)
    recall = pc.a / (pc.a + pc.b)
    return 2 * precision * recall / (precision + recall)


def rand_index(pred, truth) -> float:
    pc = pair_counts(pred, truth)
    return (pc.a + pc.d) / pc.total


def _entropy(counts, n):
    c = counts[counts > 0].astype(float)
    # fsum is order-independent, so relabeled identical partitions give MI == H exactly
    return math.fsum(c / n * np.log(n / c))


def mutual_information(p1, p2) -> float:
    ct = contingency(p1, p2)
    n = ct.n
    m = ct.m.astype(float)
    outer = np.outer(ct.rows, ct.cols).astype(float)
    nz = m > 0
    return math.fsum(m[nz] / n * np.log(n * m[nz] / outer[nz]))


def nmi(p1, p2) -> float:
    """Mutual information over the arithmetic mean of the two entropies."""
    ct = contingency(p1, p2)
    h1 = _entropy(ct.rows, ct.n)
    h2 = _entropy(ct.cols, ct.n)
    if h1 == 0 and h2 == 0:
        return 1.0
    mi = mutual_information(p1, p2)
    return float(min(max(mi / ((h1 + h2) / 2), 0.0), 1.0))


def ari(p1, p2) -> float:
    ct = contingency(p1, p2)
    n = ct.n
    if n < 2:
        raise ValueError("ARI needs at least two samples")
    index = float(_c2(ct.m).sum())
    sr = float(_c2(ct.rows).sum())
    sc = float(_c2(ct.cols).sum())
    expected = sr * sc / float(_c2(n))
    denom = 0.5 * (sr + sc) - expected
    if denom == 0:
        # only reachable when both partitions are all-one-cluster or all-singletons
        return 1.0
    return (index - expected) / denom


METRICS = {
    "accuracy": accuracy,
    "nmi": nmi,
    "ari": ari,
    "fmeasure": f_measure,
    "rand": rand_index,
}


def evaluate(pred, truth, metrics=("accuracy", "nmi", "ari", "fmeasure"), percent=False) -> dict:
    scale = 100.0 if percent else 1.0
    return {m: METRICS[m](pred, truth) * scale for m in metrics}
