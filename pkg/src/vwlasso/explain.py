"""Exact SHAP values for linear models.

For ``f(x) = b0 + sum_j b_j x_j`` with independent features the Shapley
value of feature j at row t is ``b_j * (x_tj - mean_j)``, where the means
come from the background (training) data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Dataset, FitResult
from .errors import DimensionMismatch


@dataclass(frozen=True)
class ShapMatrix:
    values: np.ndarray
    base_value: float
    column_names: tuple

    @property
    def mean_abs(self) -> np.ndarray:
        return np.mean(np.abs(self.values), axis=0)


def linear_shap(f: FitResult, d: Dataset, background_means) -> ShapMatrix:
    mu = np.asarray(background_means, dtype=float)
    if f.p != d.p or mu.shape != (d.p,):
        raise DimensionMismatch(f"fit has {f.p} coefficients, dataset {d.p} columns, background {mu.shape}")
    values = (d.x - mu) * f.coefficients
    base = f.intercept + float(f.coefficients @ mu)
    return ShapMatrix(values, base, d.column_names)


def importance_ranking(s: ShapMatrix) -> list[tuple[str, float]]:
    """Columns by decreasing mean |SHAP|; ties keep column order."""
    imp = s.mean_abs
    order = sorted(range(len(imp)), key=lambda j: (-imp[j], j))
    return [(s.column_names[j], float(imp[j])) for j in order]


def plot_data(s: ShapMatrix, d: Dataset) -> list[dict]:
    """Long-format records (period, column, feature value, SHAP value) for external plotting."""
    out = []
    for t, label in enumerate(d.index.labels):
        for j, name in enumerate(s.column_names):
            out.append({"period": label, "column": name,
                        "feature_value": float(d.x[t, j]), "shap_value": float(s.values[t, j])})
    return out
