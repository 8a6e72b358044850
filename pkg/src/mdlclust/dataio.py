"""Dataset loading, the synthetic half-ring generator, min-max scaling and
variance-based attribute weights."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np


class DataError(ValueError):
    """Raised for unreadable or malformed datasets."""


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    truth: np.ndarray | None = None
    name: str = "dataset"

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        if x.ndim != 2:
            raise DataError(f"{self.name}: features must be a 2-D matrix")
        n, a = x.shape
        if n < 2 or a < 1:
            raise DataError(f"{self.name}: need n >= 2 samples and a >= 1 attributes, got {x.shape}")
        if not np.all(np.isfinite(x)):
            raise DataError(f"{self.name}: features contain missing or non-finite values")
        x.setflags(write=False)
        object.__setattr__(self, "features", x)
        if self.truth is not None:
            t = np.asarray(self.truth, dtype=int)
            if t.shape != (n,):
                raise DataError(f"{self.name}: truth has length {t.size}, expected {n}")
            c = int(t.max())
            if t.min() < 1 or len(np.unique(t)) != c:
                raise DataError(f"{self.name}: class ids must cover 1..c")
            t.setflags(write=False)
            object.__setattr__(self, "truth", t)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def a(self) -> int:
        return self.features.shape[1]

    @property
    def c(self) -> int | None:
        return None if self.truth is None else int(self.truth.max())

    def summary(self) -> dict:
        return {"name": self.name, "n": self.n, "a": self.a, "c": self.c}

    def summary_json(self) -> str:
        return json.dumps(self.summary())


@dataclass(frozen=True)
class NormalizedDataset:
    features: np.ndarray
    provenance: str = "dataset"
    truth: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        x = np.asarray(self.features, dtype=float)
        x.setflags(write=False)
        object.__setattr__(self, "features", x)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def a(self) -> int:
        return self.features.shape[1]


def _remap_first_appearance(values):
    ids = {}
    out = []
    for v in values:
        if v not in ids:
            ids[v] = len(ids) + 1
        out.append(ids[v])
    return np.array(out, dtype=int)


def _resolve_label_column(label_column, header, arity):
    if label_column is None:
        return None
    if isinstance(label_column, int):
        # 1-based column index, negative counts from the end
        idx = label_column - 1 if label_column > 0 else arity + label_column
    elif header is not None and label_column in header:
        idx = header.index(label_column)
    elif str(label_column).lstrip("-").isdigit():
        return _resolve_label_column(int(label_column), header, arity)
    else:
        raise DataError(f"label column {label_column!r} not found")
    if not 0 <= idx < arity:
        raise DataError(f"label column {label_column!r} out of range for {arity} columns")
    return idx


def load_dataset(path, label_column=None, header: bool | None = False, name: str | None = None) -> Dataset:
    """Read a comma-separated file into a :class:`Dataset`.

    ``label_column`` is either a header name or a 1-based column index
    (negative indices count from the right). Class labels are remapped to
    1..c in order of first appearance. ``header=None`` sniffs the first row:
    it is a header when some column is numeric in row two but not in row one.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"{path}: no such file")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh) if r and any(cell.strip() for cell in r)]
    if not rows:
        raise DataError(f"{path}: empty file")

    arity = len(rows[0])
    names = None
    if header is None:
        header = _looks_like_header(rows[0], rows[1:])
    if header:
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
        if not rows:
            raise DataError(f"{path}: header but no data rows")
    label_idx = _resolve_label_column(label_column, names, arity)

    first_row = 2 if header else 1
    feats, labels = [], []
    for lineno, row in enumerate(rows, start=first_row):
        if len(row) != arity:
            raise DataError(f"{path}: row {lineno} has {len(row)} fields, expected {arity}")
        vals = []
        for j, cell in enumerate(row):
            if j == label_idx:
                labels.append(cell.strip())
                continue
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"{path}: row {lineno}, column {j + 1}: non-numeric value {cell!r}") from None
            if not np.isfinite(v):
                raise DataError(f"{path}: row {lineno}, column {j + 1}: missing value")
            vals.append(v)
        feats.append(vals)

    truth = _remap_first_appearance(labels) if label_idx is not None else None
    return Dataset(np.array(feats, dtype=float), truth, name or path.stem)


def _looks_like_header(first, rest) -> bool:
    def numeric(cell):
        try:
            float(cell)
            return True
        except ValueError:
            return False

    if not rest:
        return False
    # a column that is numeric in the data but not in the first row marks a header
    return any(not numeric(cell) and numeric(nxt) for cell, nxt in zip(first, rest[0]))


def load_builtin(name: str) -> Dataset:
    """Bundled UCI tables: ``iris`` and ``wine`` (label column ``class``)."""
    ref = resources.files("mdlclust") / "data" / f"{name.lower()}.csv"
    if not ref.is_file():
        raise DataError(f"no bundled dataset named {name!r}")
    with resources.as_file(ref) as p:
        return load_dataset(p, label_column="class", header=True, name=name)


def generate_halfring(n: int = 400, noise: float = 0.1, seed: int = 0) -> Dataset:
    """Two interleaving unit half-circles, n/2 points each."""
    if n < 4 or n % 2:
        raise DataError(f"halfring needs an even n >= 4, got {n}")
    if noise < 0:
        raise DataError("noise must be non-negative")
    rng = np.random.default_rng(seed)
    half = n // 2
    t = np.linspace(0.0, np.pi, half)
    upper = np.column_stack([np.cos(t), np.sin(t)])
    lower = np.column_stack([1.0 - np.cos(t), 1.0 - np.sin(t) - 0.4])
    x = np.vstack([upper, lower])
    if noise > 0:
        x = x + rng.normal(scale=noise, size=x.shape)
    truth = np.repeat([1, 2], half)
    return Dataset(x, truth, "halfring")


def normalize(d) -> NormalizedDataset:
    x = np.asarray(d.features, dtype=float)
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    out = np.zeros_like(x)
    live = span > 0
    out[:, live] = (x[:, live] - lo[live]) / span[live]
    # guard against rounding just outside [0, 1]
    np.clip(out, 0.0, 1.0, out=out)
    name = getattr(d, "name", None) or getattr(d, "provenance", "dataset")
    return NormalizedDataset(out, name, getattr(d, "truth", None))


def column_variances(x) -> np.ndarray:
    x = np.asarray(getattr(x, "features", x), dtype=float)
    if x.shape[0] < 2:
        raise DataError("variance needs at least two samples")
    return x.var(axis=0, ddof=1)


def attribute_weights(x) -> np.ndarray:
    """Column variance scaled by the largest column variance; all zeros if
    every column is constant."""
    d = column_variances(x)
    top = d.max()
    if top <= 0:
        return np.zeros_like(d)
    return d / top
