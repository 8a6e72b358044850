"""Clustering ensemble, indicator/agreement matrices and the subsample
k-means initial solution."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .baseclust import LINKAGES, _features, agglomerative, assign_nearest_centroid, kmeans


@dataclass(frozen=True)
class IndicatorMatrix:
    h: np.ndarray
    r: int
    ks: tuple

    @property
    def k(self):
        return self.ks[0] if len(set(self.ks)) == 1 else self.ks


@dataclass(frozen=True)
class AgreementMatrix:
    a: np.ndarray
    r: int

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def off_diagonal(self) -> np.ndarray:
        return self.a[~np.eye(self.n, dtype=bool)]

    def to_csv(self, path) -> None:
        np.savetxt(path, self.a, fmt="%d", delimiter=",")


def member_seeds(seed: int, r: int) -> list[int]:
    ss = np.random.SeedSequence(seed)
    return [int(s.generate_state(1)[0]) for s in ss.spawn(r)]


def run_ensemble(x, k: int, r: int = 9, seed: int = 0, members=("kmeans",)) -> list[np.ndarray]:
    """Produce ``r`` base labelings.

    ``members`` lists the algorithms used, cycled in order until ``r``
    labelings exist: ``"kmeans"`` or any linkage name. With the default all
    members are k-means runs with distinct derived seeds.
    """
    if r < 1 or r % 2 == 0:
        raise ValueError(f"ensemble size must be a positive odd number, got {r}")
    if k < 2:
        raise ValueError("k must be >= 2")
    for m in members:
        if m != "kmeans" and m not in LINKAGES:
            raise ValueError(f"unknown ensemble member {m!r}")
    out = []
    for i, s in enumerate(member_seeds(seed, r)):
        m = members[i % len(members)]
        if m == "kmeans":
            out.append(kmeans(x, k, seed=s)[0])
        else:
            out.append(agglomerative(x, k, m))
    return out


def build_indicator(members, ks=None) -> IndicatorMatrix:
    """Concatenate one-hot blocks, one per member, clusters 1..k within each."""
    members = [np.asarray(m, dtype=int) for m in members]
    if not members:
        raise ValueError("empty ensemble")
    n = members[0].size
    if any(m.size != n for m in members):
        raise ValueError("ensemble members disagree on the number of samples")
    if ks is None:
        ks = [int(m.max()) for m in members]
    blocks = []
    for m, k in zip(members, ks):
        if m.min() < 1 or m.max() > k:
            raise ValueError(f"member labels must lie in 1..{k}")
        blocks.append((m[:, None] == np.arange(1, k + 1)[None, :]).astype(np.int64))
    return IndicatorMatrix(np.hstack(blocks), len(members), tuple(int(k) for k in ks))


def agreement_matrix(h: IndicatorMatrix) -> AgreementMatrix:
    a = h.h @ h.h.T
    np.fill_diagonal(a, 0)
    a.setflags(write=False)
    return AgreementMatrix(a, h.r)


def agreement_from_members(members) -> AgreementMatrix:
    return agreement_matrix(build_indicator(members))


def initial_solution(x, k: int, fraction: float = 0.8, seed: int = 0, sample=None) -> np.ndarray:
    """k-means on a random subsample; the held-out rows join the nearest centroid.

    ``sample`` overrides the random draw with explicit row indices.
    """
    feats = _features(x)
    n = feats.shape[0]
    if not 0 < fraction <= 1:
        raise ValueError("fraction must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    if sample is None:
        m = math.ceil(fraction * n - 1e-9)
        if m < k:
            raise ValueError(f"subsample of {m} rows is smaller than k={k}")
        sample = np.sort(rng.choice(n, size=m, replace=False)) if m < n else np.arange(n)
    sample = np.asarray(sample, dtype=int)
    if sample.size < k:
        raise ValueError(f"subsample of {sample.size} rows is smaller than k={k}")
    sub_labels, centers = kmeans(feats[sample], k, seed=int(rng.integers(2**32)))
    labels = assign_nearest_centroid(feats, centers)
    labels[sample] = sub_labels
    return labels
