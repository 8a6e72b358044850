"""Base clusterers: k-means (k-means++ seeding), agglomerative linkages and
fuzzy c-means. All return labelings with ids 1..k."""

from __future__ import annotations

import numpy as np

LINKAGES = ("single", "complete", "average", "ward")


def _features(x) -> np.ndarray:
    return np.asarray(getattr(x, "features", x), dtype=float)


def _check_k(n, k, lo=2):
    if k < lo:
        raise ValueError(f"k must be >= {lo}, got {k}")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of samples n={n}")


def as_codes(labels):
    """Map arbitrary labels to 0-based codes; returns (codes, number of ids)."""
    uniq, codes = np.unique(np.asarray(labels), return_inverse=True)
    return codes.astype(np.intp), len(uniq)


def relabel_by_first_appearance(labels) -> np.ndarray:
    labels = np.asarray(labels)
    _, first = np.unique(labels, return_index=True)
    order = labels[np.sort(first)]
    lookup = {v: i + 1 for i, v in enumerate(order)}
    return np.array([lookup[v] for v in labels], dtype=int)


def sq_dists(points, centers) -> np.ndarray:
    p = np.asarray(points, dtype=float)
    c = np.asarray(centers, dtype=float)
    return ((p[:, None, :] - c[None, :, :]) ** 2).sum(axis=2)


def assign_nearest_centroid(points, centers) -> np.ndarray:
    """Label each point with the 1-based index of its closest center (lowest index wins ties)."""
    c = np.asarray(centers, dtype=float)
    if c.ndim != 2 or c.shape[0] == 0:
        raise ValueError("empty centroid set")
    p = np.atleast_2d(np.asarray(points, dtype=float))
    if p.shape[1] != c.shape[1]:
        raise ValueError(f"points have {p.shape[1]} attributes, centers have {c.shape[1]}")
    return np.argmin(sq_dists(p, c), axis=1) + 1


def _kmeanspp(x, k, rng):
    n = x.shape[0]
    centers = np.empty((k, x.shape[1]))
    chosen = [int(rng.integers(n))]
    centers[0] = x[chosen[0]]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = d2.sum()
        if total > 0:
            idx = int(rng.choice(n, p=d2 / total))
        else:
            # all remaining points coincide with a chosen center
            rest = np.setdiff1d(np.arange(n), chosen)
            idx = int(rng.choice(rest))
        chosen.append(idx)
        centers[i] = x[idx]
        d2 = np.minimum(d2, ((x - centers[i]) ** 2).sum(axis=1))
    return centers


def _repair_empty(x, codes, centers, k):
    """Give every empty cluster the point farthest from its own center."""
    counts = np.bincount(codes, minlength=k)
    for empty in np.flatnonzero(counts == 0):
        d = ((x - centers[codes]) ** 2).sum(axis=1)
        d[counts[codes] < 2] = -1.0
        far = int(np.argmax(d))
        counts[codes[far]] -= 1
        codes[far] = empty
        counts[empty] = 1
        centers[empty] = x[far]
    return codes


def _means(x, codes, k):
    sums = np.zeros((k, x.shape[1]))
    np.add.at(sums, codes, x)
    return sums / np.bincount(codes, minlength=k)[:, None]


def within_ss(x, labels) -> float:
    x = _features(x)
    codes, k = as_codes(labels)
    m = _means(x, codes, k)
    return float(((x - m[codes]) ** 2).sum())


def kmeans(x, k: int, max_iter: int = 100, tol: float = 1e-4, seed: int = 0, trace: list | None = None):
    """Lloyd's algorithm from k-means++ seeds.

    Returns ``(labels, centers)``. If ``trace`` is a list, the within-cluster
    sum of squares after every iteration is appended to it.
    """
    x = _features(x)
    n = x.shape[0]
    _check_k(n, k, lo=1)
    rng = np.random.default_rng(seed)
    centers = _kmeanspp(x, k, rng)
    codes = np.argmin(sq_dists(x, centers), axis=1)
    for _ in range(max_iter):
        codes = _repair_empty(x, codes, centers, k)
        new = _means(x, codes, k)
        shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
        centers = new
        if trace is not None:
            trace.append(float(((x - centers[codes]) ** 2).sum()))
        if shift < tol:
            break
        codes = np.argmin(sq_dists(x, centers), axis=1)
    else:
        codes = _repair_empty(x, codes, centers, k)
    return codes + 1, centers


def agglomerative(x, k: int, linkage: str = "average") -> np.ndarray:
    """Agglomerative clustering cut at ``k`` clusters.

    Lance-Williams updates on Euclidean distances (squared Euclidean for
    ward). At each merge the closest pair (i, j), i < j, is taken; ties go
    to the lexicographically smallest pair and the merged cluster keeps
    slot i.
    """
    if linkage not in LINKAGES:
        raise ValueError(f"unknown linkage {linkage!r}; expected one of {LINKAGES}")
    x = _features(x)
    n = x.shape[0]
    _check_k(n, k, lo=1)
    d = sq_dists(x, x)
    if linkage != "ward":
        d = np.sqrt(d)
    np.fill_diagonal(d, np.inf)
    size = np.ones(n)
    owner = np.arange(n)
    active = np.ones(n, dtype=bool)

    for _ in range(n - k):
        flat = int(np.argmin(d))
        i, j = divmod(flat, n)
        if i > j:
            i, j = j, i
        dij = d[i, j]
        ni, nj = size[i], size[j]
        di, dj = d[i], d[j]
        if linkage == "single":
            row = np.minimum(di, dj)
        elif linkage == "complete":
            row = np.maximum(di, dj)
        elif linkage == "average":
            row = (ni * di + nj * dj) / (ni + nj)
        else:
            row = ((ni + size) * di + (nj + size) * dj - size * dij) / (ni + nj + size)
        row[~active] = np.inf
        row[i] = np.inf
        row[j] = np.inf
        d[i, :] = row
        d[:, i] = row
        d[j, :] = np.inf
        d[:, j] = np.inf
        size[i] = ni + nj
        active[j] = False
        owner[owner == j] = i
    return relabel_by_first_appearance(owner)


def fcm(x, k: int, fuzzifier: float = 2.0, max_iter: int = 150, tol: float = 1e-5, seed: int = 0,
        trace: list | None = None) -> np.ndarray:
    """Fuzzy c-means, hardened by maximum membership.

    Memberships start from a seeded random row-stochastic matrix. If
    ``trace`` is a list the membership matrix of every iteration is appended.
    """
    if fuzzifier <= 1:
        raise ValueError("fuzzifier must be > 1")
    x = _features(x)
    n = x.shape[0]
    _check_k(n, k, lo=1)
    rng = np.random.default_rng(seed)
    u = rng.random((n, k))
    u /= u.sum(axis=1, keepdims=True)
    power = 2.0 / (fuzzifier - 1.0)
    for _ in range(max_iter):
        um = u ** fuzzifier
        centers = (um.T @ x) / um.sum(axis=0)[:, None]
        dist = np.sqrt(sq_dists(x, centers))
        new = np.empty_like(u)
        zero = dist <= 1e-12
        hit = zero.any(axis=1)
        if hit.any():
            # points sitting on one or more centers share membership among them
            new[hit] = zero[hit] / zero[hit].sum(axis=1, keepdims=True)
        free = ~hit
        if free.any():
            ratio = (dist[free][:, :, None] / dist[free][:, None, :]) ** power
            new[free] = 1.0 / ratio.sum(axis=2)
        delta = np.abs(new - u).max()
        u = new
        if trace is not None:
            trace.append(u.copy())
        if delta < tol:
            break

    codes = np.argmax(u, axis=1)
    counts = np.bincount(codes, minlength=k)
    for empty in np.flatnonzero(counts == 0):
        score = u[:, empty].copy()
        score[counts[codes] < 2] = -np.inf
        pick = int(np.argmax(score))
        counts[codes[pick]] -= 1
        codes[pick] = empty
        counts[empty] = 1
    return codes + 1
