"""Objectives for candidate labelings.

* attribute-weighted description length ``L' = S_m + S_d`` (minimised)
* agreement fitness ``F(C)`` over a co-association matrix (maximised)
* per-sample displacement probabilities driving the agreement-biased search
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baseclust import _features


@dataclass(frozen=True)
class AwdlValue:
    s_m: float
    s_d: float

    @property
    def l_prime(self) -> float:
        return self.s_m + self.s_d


@dataclass(frozen=True)
class AgreementFitness:
    b: float
    f_total: float
    per_cluster: np.ndarray


@dataclass(frozen=True)
class DisplacementProbability:
    v1: float
    v2: float
    v: float

    @property
    def v_p(self) -> float:
        return 1.0 - self.v


def _codes(c, n=None):
    c = np.asarray(c, dtype=int)
    if n is not None and c.size != n:
        raise ValueError(f"labeling has {c.size} entries, expected {n}")
    if c.min() < 1:
        raise ValueError("cluster ids must start at 1")
    return c - 1, int(c.max())


def cluster_cost(xc: np.ndarray, w: np.ndarray) -> float:
    """Weighted mean plus weighted absolute deviations of one cluster."""
    m = xc.mean(axis=0)
    return float(w @ m + (np.abs(xc - m) @ w).sum())


def awdl(c, x, w) -> AwdlValue:
    feats = _features(x)
    w = np.asarray(w, dtype=float)
    if w.shape != (feats.shape[1],):
        raise ValueError("weight vector does not match the number of attributes")
    codes, k = _codes(c, feats.shape[0])
    s_m = 0.0
    s_d = 0.0
    for p in range(k):
        xc = feats[codes == p]
        if xc.shape[0] == 0:
            raise ValueError(f"cluster {p + 1} is empty")
        m = xc.mean(axis=0)
        s_m += float(w @ m)
        s_d += float((np.abs(xc - m) @ w).sum())
    return AwdlValue(s_m, s_d)


def awdl_move_delta(c, x, w, sample: int, target: int) -> float:
    """Change of L' when ``sample`` moves to cluster ``target`` (1-based).

    Only the source and target clusters are re-evaluated.
    """
    feats = _features(x)
    w = np.asarray(w, dtype=float)
    c = np.asarray(c, dtype=int)
    src = c[sample]
    if target == src:
        raise ValueError("target cluster equals the current cluster")
    src_mask = c == src
    if src_mask.sum() < 2:
        raise ValueError(f"moving sample {sample} would empty cluster {src}")
    tgt_mask = c == target
    before = cluster_cost(feats[src_mask], w)
    after = 0.0
    if tgt_mask.any():
        before += cluster_cost(feats[tgt_mask], w)
    src_mask[sample] = False
    tgt_mask[sample] = True
    after = cluster_cost(feats[src_mask], w) + cluster_cost(feats[tgt_mask], w)
    return after - before


def consensus_threshold(a) -> float:
    """B = 0.6 (max - min) + min over the off-diagonal agreement values."""
    arr = np.asarray(getattr(a, "a", a), dtype=float)
    n = arr.shape[0]
    if n < 2:
        raise ValueError("agreement matrix needs n >= 2")
    off = arr[~np.eye(n, dtype=bool)]
    lo, hi = off.min(), off.max()
    return float((hi - lo) * 0.6 + lo)


def shifted_agreement(a, b=None) -> np.ndarray:
    """A - B with the main diagonal kept at zero."""
    arr = np.asarray(getattr(a, "a", a), dtype=float)
    if b is None:
        b = consensus_threshold(arr)
    out = arr - b
    np.fill_diagonal(out, 0.0)
    return out


def agreement_fitness(c, a) -> AgreementFitness:
    arr = np.asarray(getattr(a, "a", a), dtype=float)
    b = consensus_threshold(arr)
    ap = shifted_agreement(arr, b)
    codes, k = _codes(c, arr.shape[0])
    per = np.zeros(k)
    for p in range(k):
        idx = np.flatnonzero(codes == p)
        if idx.size > 1:
            # diagonal is zero, so half the block sum is the unordered-pair sum
            per[p] = ap[np.ix_(idx, idx)].sum() / 2.0
    return AgreementFitness(b, float(per.sum()), per)


def displacement_probability(i: int, c, a, r: int | None = None) -> DisplacementProbability:
    arr = np.asarray(getattr(a, "a", a))
    if r is None:
        r = getattr(a, "r", None)
    if r is None or r < 1:
        raise ValueError("ensemble size r must be >= 1")
    c = np.asarray(c)
    mates = c == c[i]
    mates[i] = False
    if not mates.any():
        # singletons are always displacement candidates
        return DisplacementProbability(0.0, 0.0, 0.0)
    others = np.ones(arr.shape[0], dtype=bool)
    others[i] = False
    a_iq = arr[i, mates]
    a_i = arr[i, others]
    top_q, top_i = a_iq.max(), a_i.max()
    if top_q < top_i:
        return DisplacementProbability(_v1(a_iq, a_i), float(top_q) / r, 0.0)
    assert top_q == top_i, "within-cluster agreement cannot exceed the global maximum"
    v1 = _v1(a_iq, a_i)
    v2 = float(top_q) / r
    return DisplacementProbability(v1, v2, min(v1, v2))


def _v1(a_iq, a_i) -> float:
    top_q, top_i = a_iq.max(), a_i.max()
    if top_i == 0:
        return 0.0
    n_q = int((a_iq == top_q).sum())
    n_i = int((a_i == top_i).sum())
    return float(n_q * top_q) / float(n_i * top_i)


def displacement_probabilities(c, a, r: int | None = None) -> np.ndarray:
    """Vectorised V_p for every sample."""
    arr = np.asarray(getattr(a, "a", a), dtype=float)
    if r is None:
        r = getattr(a, "r")
    c = np.asarray(c)
    n = arr.shape[0]
    off = ~np.eye(n, dtype=bool)
    same = (c[:, None] == c[None, :]) & off
    masked_all = np.where(off, arr, -np.inf)
    masked_in = np.where(same, arr, -np.inf)
    top_i = masked_all.max(axis=1)
    top_q = masked_in.max(axis=1)
    n_i = (masked_all == top_i[:, None]).sum(axis=1)
    n_q = (masked_in == top_q[:, None]).sum(axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        v1 = np.where(top_i > 0, n_q * top_q / (n_i * top_i), 0.0)
    v2 = top_q / r
    v = np.where(top_q == top_i, np.minimum(v1, v2), 0.0)
    singleton = ~same.any(axis=1)
    v[singleton] = 0.0
    return 1.0 - v
