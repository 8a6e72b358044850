"""Repeated-run experiment grid, paired t-tests and wins-minus-losses ranking."""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import baseclust
from .dataio import DataError, Dataset, generate_halfring, load_builtin, load_dataset, normalize
from .gamo import STAGES, GamoParams, gamo_cluster
from .validation import METRICS

log = logging.getLogger(__name__)

OUTPUT_ENV = "MDLCLUST_OUTPUT_DIR"
RANKING_NOTE = "reconstructed scoring: wins minus losses over pairwise paired t-tests at alpha=0.05"
DEFAULT_METRICS = ("accuracy", "nmi", "ari", "fmeasure")
BASELINES = ("kmeans", "single", "average", "complete", "ward", "fcm")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TTestResult:
    t: float
    dof: int
    significant: bool
    mean_diff: float
    p_value: float


def paired_t(scores_a, scores_b, alpha: float = 0.05) -> TTestResult:
    """Two-sided paired t-test on per-run differences a - b.

    Zero-variance differences are decided directly: a non-zero constant gap
    is significant with t = +/-inf, an all-zero gap is not (t = 0).
    """
    a = np.asarray(scores_a, dtype=float)
    b = np.asarray(scores_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be equal-length vectors")
    k = a.size
    if k < 2:
        raise ValueError("paired t-test needs at least two pairs")
    d = a - b
    mean = float(d.mean())
    dof = k - 1
    if np.all(d == d[0]):
        if d[0] == 0:
            return TTestResult(0.0, dof, False, 0.0, 1.0)
        return TTestResult(float(np.copysign(np.inf, d[0])), dof, True, float(d[0]), 0.0)
    sd = float(np.sqrt(((d - mean) ** 2).sum() / dof))
    t = mean * np.sqrt(k) / sd
    p = float(2.0 * stats.t.sf(abs(t), dof))
    crit = float(stats.t.ppf(1.0 - alpha / 2.0, dof))
    return TTestResult(float(t), dof, bool(abs(t) > crit), mean, p)


def rank_methods(scores, names=None, alpha: float = 0.05) -> dict:
    """Score each method by significant wins minus significant losses.

    ``scores`` is a runs x methods matrix (higher is better).
    """
    s = np.asarray(scores, dtype=float)
    if s.ndim != 2 or s.shape[1] < 2:
        raise ValueError("ranking needs a runs x methods matrix with >= 2 methods")
    m = s.shape[1]
    names = list(names) if names is not None else list(range(m))
    total = dict.fromkeys(names, 0)
    for i in range(m):
        for j in range(i + 1, m):
            res = paired_t(s[:, i], s[:, j], alpha)
            if not res.significant:
                continue
            win, lose = (i, j) if res.mean_diff > 0 else (j, i)
            total[names[win]] += 1
            total[names[lose]] -= 1
    return total


# -- configuration ---------------------------------------------------------

_CONFIG_KEYS = {"datasets", "methods", "runs", "metrics", "base_seed", "output_dir", "jobs"}
_DATASET_KEYS = {"name", "path", "builtin", "generator", "label_column", "header", "k", "n", "noise", "seed"}
_METHOD_KEYS = {"name", "label", "stage_order", "ensemble_size", "fraction", "max_outer_iters", "patience",
                "members", "max_iter", "tol", "fuzzifier"}


@dataclass
class ExperimentConfig:
    datasets: list
    methods: list
    runs: int = 100
    metrics: tuple = DEFAULT_METRICS
    base_seed: int = 0
    output_dir: str = "results"
    jobs: int = 1

    def __post_init__(self):
        if self.runs < 2:
            raise ConfigError("runs must be >= 2")
        if len(self.methods) < 2:
            raise ConfigError("at least two methods are needed for ranking")
        if not self.datasets:
            raise ConfigError("no datasets configured")
        self.metrics = tuple(self.metrics)
        bad = set(self.metrics) - set(DEFAULT_METRICS)
        if bad:
            raise ConfigError(f"unknown metrics: {sorted(bad)}")
        for d in self.datasets:
            _check_keys(d, _DATASET_KEYS, "dataset")
            if "name" not in d:
                raise ConfigError("every dataset needs a name")
            if sum(key in d for key in ("path", "builtin", "generator")) != 1:
                raise ConfigError(f"dataset {d['name']!r}: give exactly one of path, builtin, generator")
        labels = []
        for m in self.methods:
            _check_keys(m, _METHOD_KEYS, "method")
            name = m.get("name")
            if name not in BASELINES + STAGES + ("GAMO",):
                raise ConfigError(f"unknown method {name!r}")
            labels.append(method_label(m))
        if len(set(labels)) != len(labels):
            raise ConfigError("method labels must be unique")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        _check_keys(raw, _CONFIG_KEYS, "config")
        for key in ("datasets", "methods"):
            if key not in raw:
                raise ConfigError(f"config is missing {key!r}")
        try:
            return cls(**raw)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return {"datasets": self.datasets, "methods": self.methods, "runs": self.runs,
                "metrics": list(self.metrics), "base_seed": self.base_seed, "output_dir": self.output_dir,
                "jobs": self.jobs}


def _check_keys(d, allowed, what):
    if not isinstance(d, dict):
        raise ConfigError(f"{what} entries must be objects")
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"unknown {what} keys: {sorted(extra)}")


def method_label(spec: dict) -> str:
    return spec.get("label") or spec["name"]


def load_config_dataset(spec: dict, base_dir=None) -> Dataset:
    name = spec["name"]
    try:
        if "builtin" in spec:
            d = load_builtin(spec["builtin"])
        elif "generator" in spec:
            if spec["generator"] != "halfring":
                raise DataError(f"unknown generator {spec['generator']!r}")
            d = generate_halfring(spec.get("n", 400), spec.get("noise", 0.1), spec.get("seed", 0))
        else:
            path = Path(spec["path"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            d = load_dataset(path, spec.get("label_column"), spec.get("header"))
    except DataError as exc:
        raise DataError(f"dataset {name!r}: {exc}") from None
    if d.truth is None:
        raise DataError(f"dataset {name!r} has no ground-truth labels")
    return Dataset(d.features, d.truth, name)


def run_seed(base_seed: int, dataset: str, run: int) -> int:
    ss = np.random.SeedSequence([base_seed, zlib.crc32(dataset.encode()), run])
    return int(ss.generate_state(1)[0])


def cluster_with(method: dict, x, k: int, seed: int):
    """Run one configured method; returns (labels, stage traces or None)."""
    name = method["name"]
    if name == "kmeans":
        return baseclust.kmeans(x, k, method.get("max_iter", 100), method.get("tol", 1e-4), seed)[0], None
    if name in baseclust.LINKAGES:
        return baseclust.agglomerative(x, k, name), None
    if name == "fcm":
        return baseclust.fcm(x, k, method.get("fuzzifier", 2.0), method.get("max_iter", 150),
                             method.get("tol", 1e-5), seed), None
    order = tuple(method.get("stage_order", STAGES)) if name == "GAMO" else (name,)
    params = GamoParams(method.get("max_outer_iters", 100), method.get("patience", 10), order, seed)
    return gamo_cluster(x, k, seed, method.get("ensemble_size", 9), method.get("fraction", 0.8), params,
                        tuple(method.get("members", ("kmeans",))))


def _run_cell(args):
    method, x, truth, k, seed, metrics = args
    labels, traces = cluster_with(method, x, k, seed)
    scores = {m: METRICS[m](labels, truth) * 100.0 for m in metrics}
    trace_dicts = None if traces is None else [
        {"stage": t.stage, "objective": t.objective, "moves": t.moves} for t in traces]
    return scores, trace_dicts


@dataclass
class ReportBundle:
    config: ExperimentConfig
    raw: list = field(default_factory=list)
    traces: dict = field(default_factory=dict)
    datasets: list = field(default_factory=list)

    @property
    def method_labels(self):
        return [method_label(m) for m in self.config.methods]

    def score_table(self, dataset: str, metric: str) -> np.ndarray:
        """runs x methods matrix for one dataset and metric."""
        labels = self.method_labels
        out = np.full((self.config.runs, len(labels)), np.nan)
        for row in self.raw:
            if row["dataset"] == dataset:
                out[row["run"], labels.index(row["method"])] = row[metric]
        return out

    def summary_rows(self):
        for ds in self.datasets:
            for metric in self.config.metrics:
                table = self.score_table(ds["name"], metric)
                for j, label in enumerate(self.method_labels):
                    col = table[:, j]
                    yield {"dataset": ds["name"], "metric": metric, "method": label,
                           "mean": float(col.mean()), "std": float(col.std(ddof=1))}

    def ranking_rows(self):
        for ds in self.datasets:
            for metric in self.config.metrics:
                ranks = rank_methods(self.score_table(ds["name"], metric), self.method_labels)
                for label, score in ranks.items():
                    yield {"dataset": ds["name"], "metric": metric, "method": label, "score": score}

    def raw_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dataset", "method", "run", "seed", *self.config.metrics])
        for row in self.raw:
            w.writerow([row["dataset"], row["method"], row["run"], row["seed"],
                        *(repr(row[m]) for m in self.config.metrics)])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dataset", "metric", "method", "mean", "std", "mean_pm_std"])
        for r in self.summary_rows():
            w.writerow([r["dataset"], r["metric"], r["method"], f"{r['mean']:.6f}", f"{r['std']:.6f}",
                        f"{r['mean']:.2f}±{r['std']:.2f}"])
        return buf.getvalue()

    def ranking_csv(self) -> str:
        buf = io.StringIO()
        buf.write(f"# {RANKING_NOTE}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dataset", "metric", "method", "score"])
        for r in self.ranking_rows():
            w.writerow([r["dataset"], r["metric"], r["method"], r["score"]])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "config": self.config.to_dict(),
            "ranking_note": RANKING_NOTE,
            "datasets": self.datasets,
            "summary": list(self.summary_rows()),
            "ranking": list(self.ranking_rows()),
            "raw": self.raw,
            "traces": self.traces,
        }

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "raw_scores.csv").write_text(self.raw_csv(), encoding="utf-8")
        (out / "summary.csv").write_text(self.summary_csv(), encoding="utf-8")
        (out / "ranking.csv").write_text(self.ranking_csv(), encoding="utf-8")
        (out / "report.json").write_text(json.dumps(self.to_json(), indent=1), encoding="utf-8")
        return out


def run_experiment(cfg: ExperimentConfig, base_dir=None, output_dir=None, write=True) -> ReportBundle:
    """Evaluate every method ``cfg.runs`` times on every dataset.

    Run r of every method on a dataset shares one seed, so scores pair up
    across methods. Any failing cell aborts the experiment.
    """
    bundle = ReportBundle(cfg)
    jobs = []
    for spec in cfg.datasets:
        d = load_config_dataset(spec, base_dir)
        x = normalize(d)
        k = int(spec.get("k", d.c))
        bundle.datasets.append({**d.summary(), "k": k})
        for run in range(cfg.runs):
            seed = run_seed(cfg.base_seed, d.name, run)
            for method in cfg.methods:
                jobs.append(((d.name, method_label(method), run, seed),
                             (method, x.features, d.truth, k, seed, cfg.metrics)))

    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(_run_cell, [j[1] for j in jobs], chunksize=8))
    else:
        results = [_run_cell(j[1]) for j in jobs]

    for (key, _), (scores, traces) in zip(jobs, results):
        ds, label, run, seed = key
        bundle.raw.append({"dataset": ds, "method": label, "run": run, "seed": seed, **scores})
        if traces is not None:
            bundle.traces.setdefault(ds, {}).setdefault(label, []).append(traces)
    log.info("finished %d cells", len(jobs))

    if write:
        target = output_dir or os.environ.get(OUTPUT_ENV) or cfg.output_dir
        if base_dir is not None and not Path(target).is_absolute() and output_dir is None \
                and OUTPUT_ENV not in os.environ:
            target = Path(base_dir) / target
        bundle.write(target)
    return bundle


def read_raw_scores(path) -> tuple[list, list]:
    """Parse a raw score CSV back into rows and the metric names it holds."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        fields = reader.fieldnames or []
        metrics = [f for f in fields if f not in ("dataset", "method", "run", "seed")]
        rows = []
        for r in reader:
            row = {"dataset": r["dataset"], "method": r["method"], "run": int(r["run"])}
            row.update({m: float(r[m]) for m in metrics})
            rows.append(row)
    return rows, metrics


def rank_raw_scores(rows, metrics) -> list:
    out = []
    datasets = list(dict.fromkeys(r["dataset"] for r in rows))
    for ds in datasets:
        sub = [r for r in rows if r["dataset"] == ds]
        methods = list(dict.fromkeys(r["method"] for r in sub))
        runs = sorted({r["run"] for r in sub})
        for metric in metrics:
            table = np.full((len(runs), len(methods)), np.nan)
            for r in sub:
                table[runs.index(r["run"]), methods.index(r["method"])] = r[metric]
            if np.isnan(table).any():
                raise ValueError(f"incomplete score table for {ds}/{metric}")
            for label, score in rank_methods(table, methods).items():
                out.append({"dataset": ds, "metric": metric, "method": label, "score": score})
    return out
