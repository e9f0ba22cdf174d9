"""Shared data model: datasets, standardization, fitted linear models."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .errors import ConstantColumn, DimensionMismatch, VWLassoError

MODEL_KINDS = ("ols", "ridge", "lasso", "adaptive_lasso", "vw_lasso")
WEIGHTED_KINDS = ("adaptive_lasso", "vw_lasso")


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeIndex:
    """Ordered period labels.

    ``ordinals`` carries a sortable integer per label (quarter number, or
    the step counter for simulated data) and is what ordering is checked on.
    """

    labels: tuple
    ordinals: tuple

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        object.__setattr__(self, "ordinals", tuple(int(o) for o in self.ordinals))
        if len(self.labels) < 1:
            raise VWLassoError("TimeIndex needs at least one period")
        if len(self.labels) != len(self.ordinals):
            raise DimensionMismatch("labels and ordinals differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise VWLassoError("duplicate period labels")
        if any(b <= a for a, b in zip(self.ordinals, self.ordinals[1:])):
            raise VWLassoError("TimeIndex must be strictly increasing")

    @classmethod
    def range(cls, n: int, start: int = 1) -> "TimeIndex":
        return cls(tuple(str(i) for i in range(start, start + n)), tuple(range(start, start + n)))

    @classmethod
    def quarters(cls, first_year: int, first_quarter: int, n: int) -> "TimeIndex":
        start = first_year * 4 + first_quarter - 1
        ords = tuple(range(start, start + n))
        return cls(tuple(f"{o // 4}Q{o % 4 + 1}" for o in ords), ords)

    @property
    def length(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __getitem__(self, key) -> "TimeIndex":
        idx = np.arange(len(self.labels))[key]
        return TimeIndex(tuple(self.labels[i] for i in idx), tuple(self.ordinals[i] for i in idx))


@dataclass(frozen=True)
class Dataset:
    index: TimeIndex
    target_name: str
    y: np.ndarray
    x: np.ndarray
    column_names: tuple

    def __post_init__(self):
        y = _frozen(self.y)
        x = _frozen(self.x)
        if x.ndim == 1:
            x = _frozen(x[:, None])
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "column_names", tuple(str(c) for c in self.column_names))
        n = len(self.index)
        if y.ndim != 1 or y.shape[0] != n or x.shape[0] != n:
            raise DimensionMismatch(f"rows(x)={x.shape[0]}, len(y)={y.shape[0]}, len(index)={n}")
        if x.shape[1] < 1 or len(self.column_names) != x.shape[1]:
            raise DimensionMismatch("column_names must name every predictor column")
        if len(set(self.column_names)) != len(self.column_names):
            raise VWLassoError("column names must be unique")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
            raise VWLassoError("dataset contains non-finite entries")

    @classmethod
    def from_arrays(cls, x, y, column_names: Optional[Sequence[str]] = None,
                    target_name: str = "y", index: Optional[TimeIndex] = None) -> "Dataset":
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if column_names is None:
            column_names = [f"x{j + 1}" for j in range(x.shape[1])]
        if index is None:
            index = TimeIndex.range(x.shape[0])
        return cls(index, target_name, np.asarray(y, dtype=float), x, tuple(column_names))

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def rows(self, key) -> "Dataset":
        idx = np.arange(self.n)[key]
        return Dataset(self.index[idx], self.target_name, self.y[idx], self.x[idx], self.column_names)

    def with_target(self, y) -> "Dataset":
        return replace(self, y=np.asarray(y, dtype=float))

    def select(self, columns: Sequence[int]) -> "Dataset":
        cols = list(columns)
        return Dataset(self.index, self.target_name, self.y, self.x[:, cols],
                       tuple(self.column_names[j] for j in cols))


@dataclass(frozen=True)
class Standardization:
    """Affine map from raw to standardized coordinates (training statistics)."""

    means: np.ndarray
    scales: np.ndarray
    target_mean: float

    def __post_init__(self):
        object.__setattr__(self, "means", _frozen(self.means))
        object.__setattr__(self, "scales", _frozen(self.scales))
        object.__setattr__(self, "target_mean", float(self.target_mean))
        if self.means.shape != self.scales.shape:
            raise DimensionMismatch("means and scales differ in shape")
        if not np.all(self.scales > 0):
            raise VWLassoError("scales must be strictly positive")

    @classmethod
    def identity(cls, p: int) -> "Standardization":
        return cls(np.zeros(p), np.ones(p), 0.0)

    def transform_x(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.means.shape[0]:
            raise DimensionMismatch(f"expected {self.means.shape[0]} columns, got {x.shape[-1]}")
        return (x - self.means) / self.scales

    def inverse_x(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        return z * self.scales + self.means

    def apply(self, d: Dataset) -> Dataset:
        """Standardize ``d`` with these (typically training) statistics."""
        return Dataset(d.index, d.target_name, d.y - self.target_mean, self.transform_x(d.x), d.column_names)


@dataclass(frozen=True)
class FitResult:
    """A fitted linear model ``y = intercept + x @ coefficients``.

    ``weights_used`` may contain ``inf`` for variables excluded from the
    penalized stage (adaptive lasso with a zero initial estimate).
    ``objective_trace`` is the penalized objective after each coordinate
    descent sweep; empty for closed-form fits. ``notes`` carries flags such
    as ``"all_weights_infinite"``.
    """

    intercept: float
    coefficients: np.ndarray
    model_kind: str
    lam: float = 0.0
    weights_used: Optional[np.ndarray] = None
    iterations: int = 0
    converged: bool = True
    objective_trace: tuple = ()
    notes: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "coefficients", _frozen(self.coefficients))
        object.__setattr__(self, "lam", float(self.lam))
        if self.weights_used is not None:
            object.__setattr__(self, "weights_used", _frozen(self.weights_used))
        if self.model_kind not in MODEL_KINDS:
            raise VWLassoError(f"unknown model kind {self.model_kind!r}")
        if not np.all(np.isfinite(self.coefficients)) or not np.isfinite(self.intercept):
            raise VWLassoError("fit produced non-finite coefficients")
        if self.lam < 0 or self.iterations < 0:
            raise VWLassoError("lambda and iterations must be nonnegative")
        if (self.weights_used is not None) != (self.model_kind in WEIGHTED_KINDS):
            raise VWLassoError("weights_used must be present exactly for adaptive_lasso and vw_lasso")
        if self.weights_used is not None and self.weights_used.shape != self.coefficients.shape:
            raise DimensionMismatch("weights_used and coefficients differ in length")

    @property
    def p(self) -> int:
        return self.coefficients.shape[0]

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.coefficients != 0.0)


def standardize(d: Dataset) -> tuple[Dataset, Standardization]:
    """Center and scale every predictor; demean the target.

    Uses the sample (n-1) standard deviation.
    """
    if d.n < 2:
        raise VWLassoError("standardize needs at least two rows")
    means = d.x.mean(axis=0)
    scales = d.x.std(axis=0, ddof=1)
    magnitude = np.maximum(1.0, np.abs(d.x).max(axis=0))
    for j in range(d.p):
        if not scales[j] > 1e-12 * magnitude[j]:
            raise ConstantColumn(d.column_names[j])
    s = Standardization(means, scales, float(d.y.mean()))
    return s.apply(d), s


def destandardize_fit(f: FitResult, s: Standardization) -> FitResult:
    """Map a fit on standardized data back to raw units."""
    if f.p != s.means.shape[0]:
        raise DimensionMismatch(f"fit has {f.p} coefficients, standardization has {s.means.shape[0]}")
    beta = f.coefficients / s.scales
    intercept = s.target_mean + f.intercept - float(beta @ s.means)
    return replace(f, intercept=intercept, coefficients=beta)


def predict(f: FitResult, x_rows) -> np.ndarray:
    x_rows = np.asarray(x_rows, dtype=float)
    if x_rows.ndim == 1:
        x_rows = x_rows[None, :]
    if x_rows.shape[1] != f.p:
        raise DimensionMismatch(f"expected {f.p} columns, got {x_rows.shape[1]}")
    return f.intercept + x_rows @ f.coefficients
