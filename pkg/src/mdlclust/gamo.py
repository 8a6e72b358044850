"""Refinement stages for an initial labeling.

Each stage is a probability-guided local search over single-sample
relocations:

* ``ABMDLGAO`` picks samples with their agreement-based displacement
  probability and moves them to the cluster minimising L'.
* ``EPMDLGAO`` does the same with every sample equally likely (a full sweep
  in random order).
* ``EPAFGAO`` sweeps uniformly and maximises the agreement fitness F(C).

:func:`gamo_pipeline` chains the stages, :func:`gamo_cluster` runs the whole
method from raw normalized features.
"""

from __future__ import annotations

import zlib
from dataclasses import asdict, dataclass, field

import numpy as np

from .baseclust import _features
from .consensus import agreement_from_members, initial_solution, run_ensemble
from .dataio import attribute_weights
from .objectives import awdl, agreement_fitness, displacement_probabilities, shifted_agreement

ABMDLGAO = "ABMDLGAO"
EPMDLGAO = "EPMDLGAO"
EPAFGAO = "EPAFGAO"
STAGES = (ABMDLGAO, EPMDLGAO, EPAFGAO)

# relative slack below which a move does not count as an improvement
_REL_TOL = 1e-12


@dataclass(frozen=True)
class GamoParams:
    max_outer_iters: int = 100
    patience: int = 10
    stage_order: tuple = (ABMDLGAO, EPMDLGAO, EPAFGAO)
    seed: int = 0
    min_cluster_size: int = 1

    def __post_init__(self):
        order = tuple(self.stage_order)
        object.__setattr__(self, "stage_order", order)
        if self.max_outer_iters < 1:
            raise ValueError("max_outer_iters must be >= 1")
        if not 1 <= self.patience <= self.max_outer_iters:
            raise ValueError("patience must lie in 1..max_outer_iters")
        if not order or len(set(order)) != len(order):
            raise ValueError("stage_order must be non-empty without duplicates")
        unknown = set(order) - set(STAGES)
        if unknown:
            raise ValueError(f"unknown stages: {sorted(unknown)}")
        if self.min_cluster_size < 1:
            raise ValueError("min_cluster_size must be >= 1")


@dataclass
class StageTrace:
    stage: str
    objective: list = field(default_factory=list)
    moves: list = field(default_factory=list)
    labels: np.ndarray | None = None

    @property
    def initial(self) -> float:
        return self.objective[0]

    @property
    def final(self) -> float:
        return self.objective[-1]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["labels"] = None if self.labels is None else [int(v) for v in self.labels]
        return d


class _AwdlState:
    """Labeling plus cached per-cluster sums and L' contributions."""

    def __init__(self, x, w, codes, k):
        self.x = x
        self.w = w
        self.codes = codes
        self.k = k
        self.counts = np.bincount(codes, minlength=k)
        self.sums = np.zeros((k, x.shape[1]))
        self.cost = np.zeros(k)
        for p in range(k):
            self._refresh(p)

    def _refresh(self, p):
        xc = self.x[self.codes == p]
        self.sums[p] = xc.sum(axis=0)
        m = self.sums[p] / len(xc)
        self.cost[p] = self.w @ m + (np.abs(xc - m) @ self.w).sum()

    def objective(self) -> float:
        return float(self.cost.sum())

    def deltas(self, i):
        """Change of L' for moving sample i to each cluster (inf for the source)."""
        s = self.codes[i]
        xi = self.x[i]
        means = (self.sums + xi) / (self.counts + 1)[:, None]
        means[s] = (self.sums[s] - xi) / (self.counts[s] - 1)
        dev = np.abs(self.x - means[self.codes]) @ self.w
        dev[i] = 0.0
        per = np.bincount(self.codes, weights=dev, minlength=self.k)
        new_cost = means @ self.w + per + np.abs(xi - means) @ self.w
        src_after = means[s] @ self.w + per[s]
        delta = new_cost + src_after - self.cost - self.cost[s]
        delta[s] = np.inf
        return delta

    def move(self, i, t):
        s = self.codes[i]
        self.codes[i] = t
        self.counts[s] -= 1
        self.counts[t] += 1
        self._refresh(s)
        self._refresh(t)


class _AgreementState:
    """Labeling plus per-sample agreement sums with every cluster; costs are -F."""

    def __init__(self, shifted, codes, k):
        self.ap = shifted
        self.codes = codes
        self.k = k
        self.counts = np.bincount(codes, minlength=k)
        onehot = np.zeros((len(codes), k))
        onehot[np.arange(len(codes)), codes] = 1.0
        self.rowsum = shifted @ onehot

    def fitness(self) -> float:
        return float(self.rowsum[np.arange(len(self.codes)), self.codes].sum() / 2.0)

    def objective(self) -> float:
        return -self.fitness()

    def deltas(self, i):
        s = self.codes[i]
        delta = self.rowsum[i, s] - self.rowsum[i]
        delta[s] = np.inf
        return delta

    def move(self, i, t):
        s = self.codes[i]
        self.codes[i] = t
        self.counts[s] -= 1
        self.counts[t] += 1
        col = self.ap[:, i]
        self.rowsum[:, s] -= col
        self.rowsum[:, t] += col


def _stage_rng(seed, stage):
    return np.random.default_rng([seed, zlib.crc32(stage.encode())])


def _codes(c0):
    c0 = np.asarray(c0, dtype=int)
    if c0.min() < 1:
        raise ValueError("cluster ids must start at 1")
    k = int(c0.max())
    return c0 - 1, k


def _search(state, stage, params, select=None, sign=1.0):
    """Sweep loop shared by all stages.

    ``select`` maps the current codes to per-sample selection probabilities;
    ``None`` means a full sweep in random order. A full sweep without an
    accepted move is a fixed point, so uniform stages stop there.
    """
    rng = _stage_rng(params.seed, stage)
    n = len(state.codes)
    trace = StageTrace(stage)
    trace.objective.append(sign * state.objective())
    trace.moves.append(0)
    idle = 0
    for _ in range(params.max_outer_iters):
        order = rng.permutation(n)
        if select is not None:
            chosen = rng.random(n) < select(state.codes)[order]
            order = order[chosen]
        moved = 0
        for i in order:
            if state.counts[state.codes[i]] <= params.min_cluster_size:
                continue
            delta = state.deltas(i)
            t = int(np.argmin(delta))
            slack = _REL_TOL * max(1.0, abs(state.objective()))
            if delta[t] < -slack:
                state.move(i, t)
                moved += 1
        trace.objective.append(sign * state.objective())
        trace.moves.append(moved)
        if moved:
            idle = 0
            continue
        idle += 1
        if select is None or idle >= params.patience:
            break
    trace.labels = state.codes + 1
    return trace.labels.copy(), trace


def abmdlgao(c0, x, w, a, p: GamoParams = GamoParams()):
    """Minimise L', choosing samples with their displacement probability."""
    codes, k = _codes(c0)
    state = _AwdlState(_features(x), np.asarray(w, dtype=float), codes.copy(), k)
    r = a.r
    arr = a.a

    def select(cur):
        return displacement_probabilities(cur, arr, r)

    return _search(state, ABMDLGAO, p, select=select)


def epmdlgao(c0, x, w, p: GamoParams = GamoParams()):
    codes, k = _codes(c0)
    state = _AwdlState(_features(x), np.asarray(w, dtype=float), codes.copy(), k)
    return _search(state, EPMDLGAO, p)


def epafgao(c0, a, p: GamoParams = GamoParams()):
    """Maximise the agreement fitness; the trace records F(C) itself."""
    codes, k = _codes(c0)
    state = _AgreementState(shifted_agreement(a), codes.copy(), k)
    return _search(state, EPAFGAO, p, sign=-1.0)


def gamo_pipeline(c0, x, w, a, p: GamoParams = GamoParams()):
    labels = np.asarray(c0, dtype=int)
    traces = []
    for stage in p.stage_order:
        if stage == ABMDLGAO:
            labels, tr = abmdlgao(labels, x, w, a, p)
        elif stage == EPMDLGAO:
            labels, tr = epmdlgao(labels, x, w, p)
        else:
            labels, tr = epafgao(labels, a, p)
        traces.append(tr)
    return labels, traces


def gamo_cluster(x, k: int, seed: int = 0, ensemble_size: int = 9, fraction: float = 0.8,
                 params: GamoParams | None = None, members=("kmeans",)):
    """Full method: ensemble, agreement matrix, subsample initial solution, stages.

    ``params.stage_order`` selects the stages; its seed is replaced by ``seed``.
    """
    params = params or GamoParams()
    params = GamoParams(params.max_outer_iters, params.patience, params.stage_order, seed,
                        params.min_cluster_size)
    ss = np.random.SeedSequence(seed)
    ens_seed, init_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    w = attribute_weights(x)
    a = agreement_from_members(run_ensemble(x, k, ensemble_size, ens_seed, members))
    c0 = initial_solution(x, k, fraction, init_seed)
    return gamo_pipeline(c0, x, w, a, params)


def stage_objective(stage, labels, x=None, w=None, a=None) -> float:
    """Objective a stage optimises, in the sign its trace reports."""
    if stage == EPAFGAO:
        return agreement_fitness(labels, a).f_total
    return awdl(labels, x, w).l_prime
