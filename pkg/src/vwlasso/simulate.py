"""Simulation study: AR(1) predictors, AR(1) errors with sinusoidal volatility.

Two scenarios are available:

``paper``
    every predictor is a Gaussian AR(1) with its own coefficient.
``signal_on_high_vol``
    predictors carrying signal (nonzero true coefficient) are weakly
    persistent AR(1) processes driven by GARCH(1,1) innovations, so they
    move a lot from one period to the next; the remaining predictors are
    smooth, highly persistent AR(1) noise.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .core import Dataset, TimeIndex
from .errors import VWLassoError
from .garch import GarchOptions, GarchParams
from .penalized import SolverConfig, fit_model

SCENARIOS = ("paper", "signal_on_high_vol")
METHODS = (("LASSO", "lasso"), ("AD LASSO", "adaptive_lasso"), ("VW LASSO", "vw_lasso"))

# signal_on_high_vol construction
HIGH_VOL_AR = 0.3
HIGH_VOL_GARCH = GarchParams(0.2, 0.15, 0.75)
LOW_VOL_AR = 0.95
LOW_VOL_SD = 0.3


@dataclass(frozen=True)
class SimConfig:
    n: int = 100
    p: int = 5
    ar_coeffs_x: Optional[tuple] = None
    true_beta: Optional[tuple] = None
    error_ar: float = 0.5
    vol_low: float = 1.0
    vol_high: float = 2.0 * math.pi
    vol_cycles: float = 1.0
    seed: int = 0
    scenario: str = "paper"

    def __post_init__(self):
        if self.ar_coeffs_x is None:
            object.__setattr__(self, "ar_coeffs_x", (0.5,) * self.p)
        if self.true_beta is None:
            beta = [3.0, -2.0] + [0.0] * max(0, self.p - 2)
            object.__setattr__(self, "true_beta", tuple(beta[: self.p]))
        object.__setattr__(self, "ar_coeffs_x", tuple(float(a) for a in self.ar_coeffs_x))
        object.__setattr__(self, "true_beta", tuple(float(b) for b in self.true_beta))
        self.validate()

    def validate(self) -> None:
        if self.n < 10:
            raise VWLassoError(f"n must be >= 10, got {self.n}")
        if self.p < 1:
            raise VWLassoError(f"p must be >= 1, got {self.p}")
        if len(self.ar_coeffs_x) != self.p or len(self.true_beta) != self.p:
            raise VWLassoError("ar_coeffs_x and true_beta need p entries")
        if any(abs(a) >= 1 for a in self.ar_coeffs_x) or abs(self.error_ar) >= 1:
            raise VWLassoError("AR coefficients must lie in (-1, 1)")
        if not (self.vol_high >= self.vol_low > 0):
            raise VWLassoError("need vol_high >= vol_low > 0")
        if self.scenario not in SCENARIOS:
            raise VWLassoError(f"scenario must be one of {SCENARIOS}")
        if self.seed < 0:
            raise VWLassoError("seed must be nonnegative")


@dataclass(frozen=True)
class SimInstance:
    dataset: Dataset
    true_beta: np.ndarray
    sigma_path: np.ndarray


def sigma_path(cfg: SimConfig) -> np.ndarray:
    t = np.arange(1, cfg.n + 1)
    return cfg.vol_low + (cfg.vol_high - cfg.vol_low) * (1.0 + np.sin(2.0 * np.pi * cfg.vol_cycles * t / cfg.n)) / 2.0


def _ar1(rng, phi: float, innov: np.ndarray, x0_sd: float) -> np.ndarray:
    x = np.empty(innov.shape[0])
    prev = x0_sd * rng.standard_normal()
    for t in range(innov.shape[0]):
        prev = phi * prev + innov[t]
        x[t] = prev
    return x


def _garch_innovations(rng, params: GarchParams, n: int) -> np.ndarray:
    z = rng.standard_normal(n)
    eps = np.empty(n)
    s2 = params.unconditional_variance
    for t in range(n):
        if t > 0:
            s2 = params.omega + params.alpha * eps[t - 1] ** 2 + params.beta * s2
        eps[t] = math.sqrt(s2) * z[t]
    return eps


def simulate_dgp(cfg: SimConfig) -> SimInstance:
    rng = np.random.default_rng(cfg.seed)
    n, p = cfg.n, cfg.p
    beta = np.array(cfg.true_beta)
    x = np.empty((n, p))
    for j in range(p):
        if cfg.scenario == "signal_on_high_vol" and beta[j] != 0.0:
            phi = HIGH_VOL_AR
            innov = _garch_innovations(rng, HIGH_VOL_GARCH, n)
            x0_sd = math.sqrt(HIGH_VOL_GARCH.unconditional_variance / (1 - phi * phi))
        elif cfg.scenario == "signal_on_high_vol":
            phi = LOW_VOL_AR
            innov = LOW_VOL_SD * rng.standard_normal(n)
            x0_sd = LOW_VOL_SD / math.sqrt(1 - phi * phi)
        else:
            phi = cfg.ar_coeffs_x[j]
            innov = rng.standard_normal(n)
            x0_sd = 1.0 / math.sqrt(1 - phi * phi)
        x[:, j] = _ar1(rng, phi, innov, x0_sd)

    sig = sigma_path(cfg)
    rho = cfg.error_ar
    z = rng.standard_normal(n + 1)
    eps = np.empty(n)
    prev = sig[0] * z[0] / math.sqrt(1 - rho * rho)
    for t in range(n):
        prev = rho * prev + sig[t] * z[t + 1]
        eps[t] = prev
    y = x @ beta + eps
    names = tuple(f"x{j + 1}" for j in range(p))
    ds = Dataset(TimeIndex.range(n), "y", y, x, names)
    return SimInstance(ds, beta, sig)


@dataclass(frozen=True)
class CoefTable:
    """Coefficient estimates per method, one row per method."""

    methods: tuple
    column_names: tuple
    coefficients: np.ndarray
    lambdas: tuple
    seed: int
    errors: tuple = ()

    def zero_counts(self) -> dict:
        return {m: int(np.sum(self.coefficients[i] == 0.0)) for i, m in enumerate(self.methods)}

    def row(self, method: str) -> np.ndarray:
        return self.coefficients[self.methods.index(method)]


def run_table1(cfg: SimConfig, solver_cfg: Optional[SolverConfig] = None, gamma: float = 1.0,
               garch_transform: str = "diff", garch_opts: Optional[GarchOptions] = None) -> CoefTable:
    """Fit Lasso, Adaptive Lasso and VW-Lasso at their selected lambda on one simulated sample."""
    solver_cfg = solver_cfg or SolverConfig()
    inst = simulate_dgp(cfg)
    rows, lams = [], []
    for _, kind in METHODS:
        mf = fit_model(kind, inst.dataset, solver_cfg, gamma=gamma,
                       garch_transform=garch_transform, garch_opts=garch_opts)
        rows.append(mf.fit.coefficients)
        lams.append(mf.fit.lam)
    return CoefTable(tuple(m for m, _ in METHODS), inst.dataset.column_names,
                     np.vstack(rows), tuple(lams), cfg.seed)


def child_seed(master: int, rep: int) -> int:
    return int(np.random.SeedSequence([master, rep]).generate_state(1)[0])


def selection_scores(est, truth) -> tuple[float, float]:
    """(precision, recall) of the estimated support; an empty selection has precision 1."""
    sel = np.asarray(est) != 0.0
    true = np.asarray(truth) != 0.0
    tp = int(np.sum(sel & true))
    precision = tp / int(sel.sum()) if sel.any() else 1.0
    recall = tp / int(true.sum()) if true.any() else 1.0
    return precision, recall


@dataclass
class MonteCarloReport:
    config: dict
    records: list = field(default_factory=list)
    seeds: tuple = ()

    def l2_errors(self, method: str) -> np.ndarray:
        return np.array([r["l2_error"] for r in self.records if r["method"] == method])

    def summary(self) -> list:
        out = []
        for method, _ in METHODS:
            rs = [r for r in self.records if r["method"] == method]
            if not rs:
                continue
            l2 = np.array([r["l2_error"] for r in rs])
            q1, med, q3 = np.percentile(l2, [25, 50, 75])
            out.append({
                "method": method,
                "median_l2_error": float(med),
                "iqr_l2_error": float(q3 - q1),
                "mean_precision": float(np.mean([r["precision"] for r in rs])),
                "mean_recall": float(np.mean([r["recall"] for r in rs])),
                "reps": len(rs),
            })
        return out


def _one_rep(args):
    cfg, solver_cfg, gamma, garch_transform, garch_opts, rep = args
    seed = child_seed(cfg.seed, rep)
    table = run_table1(replace(cfg, seed=seed), solver_cfg, gamma, garch_transform, garch_opts)
    truth = np.array(cfg.true_beta)
    recs = []
    for i, method in enumerate(table.methods):
        coef = table.coefficients[i]
        prec, rec = selection_scores(coef, truth)
        recs.append({
            "rep": rep, "seed": seed, "method": method,
            "l2_error": float(np.linalg.norm(coef - truth)),
            "precision": prec, "recall": rec,
            "nonzeros": int(np.count_nonzero(coef)),
            "lambda": table.lambdas[i],
            "coefficients": [float(c) for c in coef],
        })
    return recs


def run_monte_carlo(cfg: SimConfig, solver_cfg: Optional[SolverConfig] = None, reps: int = 100,
                    gamma: float = 1.0, garch_transform: str = "diff",
                    garch_opts: Optional[GarchOptions] = None, workers: int = 1) -> MonteCarloReport:
    """Replicate :func:`run_table1` over ``reps`` child seeds of ``cfg.seed``.

    Each replication's seed depends only on (master seed, index), so the
    report does not depend on ``workers``.
    """
    if reps < 1:
        raise VWLassoError("reps must be >= 1")
    solver_cfg = solver_cfg or SolverConfig()
    jobs = [(cfg, solver_cfg, gamma, garch_transform, garch_opts, i) for i in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_one_rep, jobs))
    else:
        chunks = [_one_rep(j) for j in jobs]
    records = [r for chunk in chunks for r in chunk]
    return MonteCarloReport(asdict(cfg), records, tuple(child_seed(cfg.seed, i) for i in range(reps)))
