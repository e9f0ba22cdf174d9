"""Chronological train/test backtest of the five models with MAE/RMSE scoring."""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core import Dataset, FitResult, predict
from .errors import LengthMismatch, SplitTooSmall, VWLassoError
from .garch import GarchOptions, PenaltyWeights, volatility_weights
from .penalized import SolverConfig, fit_model

# Row order of the report, matching the accuracy table layout.
BACKTEST_MODELS = ("ols", "lasso", "ridge", "adaptive_lasso", "vw_lasso")
MODEL_LABELS = {
    "ols": "Multiple Linear Regression",
    "lasso": "Lasso",
    "ridge": "Ridge",
    "adaptive_lasso": "Adaptive Lasso",
    "vw_lasso": "Volatility Weighted Lasso",
}
DEFAULT_FRACTIONS = (0.7, 0.8, 0.9)


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise SplitTooSmall(f"train fraction must lie in (0, 1), got {self.train_fraction}")

    def sizes(self, n: int) -> tuple[int, int]:
        # the small epsilon keeps e.g. 148 * 0.9 from flooring to 132 on rounding noise
        n_train = int(math.floor(n * self.train_fraction + 1e-9))
        return n_train, n - n_train


def chronological_split(d: Dataset, s: SplitSpec) -> tuple[Dataset, Dataset]:
    n_train, n_test = s.sizes(d.n)
    if n_train < d.p + 2 or n_test < 1:
        raise SplitTooSmall(f"split of n={d.n} at {s.train_fraction} gives train={n_train}, test={n_test} "
                            f"(need train >= p+2={d.p + 2}, test >= 1)")
    return d.rows(slice(0, n_train)), d.rows(slice(n_train, d.n))


def _check(y, yhat):
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.ndim != 1:
        raise LengthMismatch(f"shapes {y.shape} and {yhat.shape} differ")
    if y.shape[0] < 1:
        raise LengthMismatch("metrics need at least one observation")
    return y, yhat


def mae(y, yhat) -> float:
    y, yhat = _check(y, yhat)
    return float(np.mean(np.abs(y - yhat)))


def rmse(y, yhat) -> float:
    y, yhat = _check(y, yhat)
    return float(np.sqrt(np.mean((y - yhat) ** 2)))


@dataclass(frozen=True)
class BacktestRow:
    model: str
    train_fraction: float
    mae: float
    rmse: float
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class BacktestReport:
    rows: list
    metadata: dict = field(default_factory=dict)
    fits: dict = field(default_factory=dict)

    def get(self, model: str, fraction: float) -> BacktestRow:
        for r in self.rows:
            if r.model == model and abs(r.train_fraction - fraction) < 1e-12:
                return r
        raise KeyError((model, fraction))

    def mean_rmse(self, model: str) -> float:
        vals = [r.rmse for r in self.rows if r.model == model and r.ok]
        return float(np.mean(vals)) if vals else float("nan")

    @property
    def errors(self) -> list:
        return [r for r in self.rows if not r.ok]


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _cell(args):
    kind, fraction, train, test, solver_cfg, weights, weight_error = args
    try:
        if kind == "vw_lasso" and weights is None:
            raise weight_error
        mf = fit_model(kind, train, solver_cfg, vol_weights=weights if kind == "vw_lasso" else None)
        yhat = predict(mf.fit, test.x)
        return BacktestRow(kind, fraction, mae(test.y, yhat), rmse(test.y, yhat)), mf.fit
    except VWLassoError as exc:
        return BacktestRow(kind, fraction, float("nan"), float("nan"), f"{type(exc).__name__}: {exc}"), None


def run_backtest(d: Dataset, fractions: Sequence[float] = DEFAULT_FRACTIONS,
                 solver_cfg: Optional[SolverConfig] = None, garch_opts: Optional[GarchOptions] = None,
                 gamma: float = 1.0, garch_transform: str = "diff",
                 weights: Optional[PenaltyWeights] = None, models: Sequence[str] = BACKTEST_MODELS,
                 workers: int = 1, name: str = "dataset") -> BacktestReport:
    """Score every model on every chronological split.

    Standardization, lambda selection and volatility weights use only the
    training rows. Supplying ``weights`` fixes the VW-Lasso penalty instead
    of re-estimating it per split. A model that fails contributes a row
    with NaN metrics and the error message.
    """
    solver_cfg = solver_cfg or SolverConfig()
    garch_opts = garch_opts or GarchOptions()
    jobs = []
    for fraction in fractions:
        train, test = chronological_split(d, SplitSpec(fraction))
        w, w_err = weights, None
        if w is None and "vw_lasso" in models:
            try:
                w = volatility_weights(train, gamma, garch_transform, garch_opts)
            except VWLassoError as exc:
                w_err = exc
        for kind in models:
            jobs.append((kind, fraction, train, test, solver_cfg, w, w_err))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_cell, jobs))
    else:
        results = [_cell(j) for j in jobs]

    # report ordered by model, then fraction
    order = {k: i for i, k in enumerate(models)}
    paired = sorted(zip(jobs, results), key=lambda jr: (order[jr[0][0]], list(fractions).index(jr[0][1])))
    rows = [r for _, (r, _) in paired]
    fits = {(r.model, r.train_fraction): f for _, (r, f) in paired if f is not None}
    config = {
        "fractions": list(fractions),
        "solver": asdict(solver_cfg),
        "garch": asdict(garch_opts),
        "gamma": gamma,
        "garch_transform": garch_transform,
        "fixed_weights": None if weights is None else [float(v) for v in weights.weights],
        "models": list(models),
    }
    meta = {"dataset": name, "config": config, "config_hash": config_hash(config), "seed": garch_opts.seed,
            "n": d.n, "p": d.p, "columns": list(d.column_names)}
    return BacktestReport(rows, meta, fits)
