"""GARCH(1,1) estimation and volatility-derived penalty weights.

The conditional variance follows

    sigma2[t] = omega + alpha * eps[t-1]**2 + beta * sigma2[t-1]

seeded at ``sigma2[0] = init_var``. Parameters are estimated by Gaussian
maximum likelihood with a Nelder-Mead search over an unconstrained
reparameterization, restarted from jittered variance-targeting starts.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import minimize
from scipy.signal import lfilter

from .core import Dataset
from .errors import DegenerateSeries, NonPositiveVariance, SeriesTooShort, VWLassoError

LOG_2PI = math.log(2.0 * math.pi)
PERSISTENCE_CAP = 1.0 - 1e-6
TRANSFORMS = ("levels", "diff", "log_diff")


@dataclass(frozen=True)
class GarchParams:
    omega: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not (self.omega > 0 and self.alpha >= 0 and self.beta >= 0):
            raise VWLassoError(f"invalid GARCH parameters {self}")
        if not self.alpha + self.beta < 1:
            raise VWLassoError(f"alpha + beta must be < 1, got {self.alpha + self.beta}")

    @property
    def persistence(self) -> float:
        return self.alpha + self.beta

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.alpha - self.beta)


@dataclass(frozen=True)
class GarchFit:
    params: GarchParams
    cond_var: np.ndarray
    loglik: float
    converged: bool
    start_loglik: float = float("-inf")

    @property
    def cond_vol(self) -> np.ndarray:
        return np.sqrt(self.cond_var)

    @property
    def mean_vol(self) -> float:
        return float(np.mean(np.sqrt(self.cond_var)))


@dataclass(frozen=True)
class GarchOptions:
    restarts: int = 5
    seed: int = 0
    max_iter: int = 4000
    tol: float = 1e-8
    min_length: int = 30
    demean: bool = True


@dataclass(frozen=True)
class PenaltyWeights:
    """Per-variable multipliers of the l1 penalty.

    ``inf`` marks a variable excluded from the penalized fit (its
    coefficient is forced to zero); only the adaptive rule produces those.
    """

    weights: np.ndarray
    gamma: float = 1.0
    source: str = "unit"
    volatilities: Optional[np.ndarray] = None

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.source not in ("volatility", "adaptive", "unit"):
            raise VWLassoError(f"unknown weight source {self.source!r}")
        if w.ndim != 1 or np.any(np.isnan(w)) or np.any(w < 0):
            raise VWLassoError("weights must be a vector of nonnegative numbers")
        if self.source != "adaptive" and not np.all(np.isfinite(w)):
            raise VWLassoError("only adaptive weights may be infinite")

    @classmethod
    def unit(cls, p: int) -> "PenaltyWeights":
        return cls(np.ones(p), 0.0, "unit")

    def __len__(self) -> int:
        return self.weights.shape[0]


def _variance_path(eps2: np.ndarray, omega: float, alpha: float, beta: float, init_var: float) -> np.ndarray:
    # sigma2[t] - beta*sigma2[t-1] = omega + alpha*eps2[t-1] is a first-order IIR filter
    drive = omega + alpha * eps2[:-1]
    tail = lfilter([1.0], [1.0, -beta], drive, zi=[beta * init_var])[0]
    return np.concatenate(([init_var], tail))


def garch_loglik(series, params: GarchParams, init_var: float) -> tuple[float, np.ndarray]:
    """Gaussian log-likelihood and conditional-variance path."""
    eps = np.asarray(series, dtype=float)
    if eps.shape[0] < 2:
        raise SeriesTooShort("need at least two observations")
    if not init_var > 0:
        raise VWLassoError("init_var must be positive")
    sig2 = _variance_path(eps * eps, params.omega, params.alpha, params.beta, init_var)
    if not np.all(sig2 > 0):
        raise NonPositiveVariance("GARCH recursion produced a non-positive variance")
    ll = -0.5 * float(np.sum(LOG_2PI + np.log(sig2) + eps * eps / sig2))
    return ll, sig2


def _sigmoid(u):
    return 1.0 / (1.0 + math.exp(-u)) if u >= 0 else math.exp(u) / (1.0 + math.exp(u))


def _logit(p):
    return math.log(p / (1.0 - p))


def _unpack(theta) -> tuple[float, float, float]:
    # theta = (log omega, logit persistence/cap, logit alpha share of persistence)
    omega = math.exp(min(theta[0], 700.0))
    pers = PERSISTENCE_CAP * _sigmoid(theta[1])
    alpha = pers * _sigmoid(theta[2])
    return omega, alpha, pers - alpha


def _pack(omega: float, alpha: float, beta: float) -> np.ndarray:
    pers = alpha + beta
    return np.array([math.log(omega), _logit(pers / PERSISTENCE_CAP), _logit(alpha / pers)])


def _negloglik(theta, eps2, init_var):
    omega, alpha, beta = _unpack(theta)
    if omega <= 0.0:
        return 1e300
    sig2 = _variance_path(eps2, omega, alpha, beta, init_var)
    if not np.all(sig2 > 0):
        return 1e300
    return 0.5 * float(np.sum(LOG_2PI + np.log(sig2) + eps2 / sig2))


_BASE_STARTS = ((0.05, 0.90), (0.10, 0.80), (0.05, 0.50), (0.15, 0.60), (0.03, 0.15))


def garch_fit(series, opts: Optional[GarchOptions] = None, column: Optional[str] = None) -> GarchFit:
    """Maximum-likelihood GARCH(1,1) fit of a single series.

    Among restarts the highest likelihood wins; candidates within 1e-9
    (relative) of the best are resolved toward lower persistence, which
    keeps the estimate stable on the flat ridge that appears when
    ``alpha`` is near zero.
    """
    opts = opts or GarchOptions()
    eps = np.asarray(series, dtype=float)
    if eps.ndim != 1 or eps.shape[0] < opts.min_length:
        raise SeriesTooShort(f"GARCH fit needs at least {opts.min_length} observations, got {eps.shape[0]}", column)
    if not np.all(np.isfinite(eps)):
        raise DegenerateSeries("series contains non-finite values", column)
    if opts.demean:
        eps = eps - eps.mean()
    var = float(np.mean(eps * eps))
    if not var > 1e-24 * max(1.0, float(np.max(np.abs(series)))) ** 2:
        raise DegenerateSeries("series has zero sample variance", column)

    eps2 = eps * eps
    rng = np.random.default_rng(opts.seed)
    candidates = []
    start_ll = None
    for k in range(max(1, opts.restarts)):
        a0, b0 = _BASE_STARTS[k % len(_BASE_STARTS)]
        if k > 0 or opts.restarts > len(_BASE_STARTS):
            jit = rng.uniform(0.8, 1.2, size=2)
            a0, b0 = a0 * jit[0], min(b0 * jit[1], 0.97 - a0 * jit[0])
        theta0 = _pack(var * (1.0 - a0 - b0), a0, b0)
        f0 = _negloglik(theta0, eps2, var)
        if start_ll is None:
            start_ll = -f0
        res = minimize(_negloglik, theta0, args=(eps2, var), method="Nelder-Mead",
                       options={"maxiter": opts.max_iter, "xatol": 1e-7, "fatol": opts.tol})
        theta, fval = (res.x, res.fun) if res.fun <= f0 else (theta0, f0)
        candidates.append((fval, _unpack(theta), bool(res.success)))

    best = min(c[0] for c in candidates)
    near = [c for c in candidates if c[0] <= best + 1e-9 * max(1.0, abs(best))]
    fval, (omega, alpha, beta), ok = min(near, key=lambda c: (c[1][1] + c[1][2], c[0]))
    params = GarchParams(omega, alpha, beta)
    ll, sig2 = garch_loglik(eps, params, var)
    return GarchFit(params, sig2, ll, ok, start_ll)


def simulate_garch(params: GarchParams, n: int, seed: int) -> np.ndarray:
    """Draw ``eps[t] = sigma[t] * z[t]`` with the recursion seeded at the unconditional variance."""
    if n < 1:
        raise VWLassoError("n must be >= 1")
    z = np.random.default_rng(seed).standard_normal(n)
    if params.alpha == 0.0 and params.beta == 0.0:
        return math.sqrt(params.omega) * z
    eps = np.empty(n)
    s2 = params.unconditional_variance
    for t in range(n):
        if t > 0:
            s2 = params.omega + params.alpha * eps[t - 1] ** 2 + params.beta * s2
        eps[t] = math.sqrt(s2) * z[t]
    return eps


def transform_series(col: np.ndarray, transform: str) -> np.ndarray:
    """Prepare one predictor for GARCH fitting.

    ``levels`` and ``diff`` work on the z-scored column, so a column's
    volatility is measured relative to its own spread; ``log_diff`` works on
    the raw (strictly positive) column and is already scale free.
    """
    col = np.asarray(col, dtype=float)
    if transform == "log_diff":
        if np.any(col <= 0):
            raise DegenerateSeries("log_diff requires strictly positive values")
        return np.diff(np.log(col))
    sd = col.std(ddof=1) if col.shape[0] > 1 else 0.0
    if not sd > 1e-12 * max(1.0, float(np.max(np.abs(col)))):
        raise DegenerateSeries("column is constant")
    z = (col - col.mean()) / sd
    if transform == "levels":
        return z
    if transform == "diff":
        return np.diff(z)
    raise VWLassoError(f"unknown transform {transform!r}; expected one of {TRANSFORMS}")


def fit_columns(d: Dataset, transform: str = "diff", opts: Optional[GarchOptions] = None,
                workers: int = 1, errors: str = "raise") -> list:
    """Fit GARCH(1,1) to every predictor of ``d``; results in column order.

    With ``errors="return"`` a failing column yields its exception object
    instead of aborting the whole batch.
    """
    opts = opts or GarchOptions()

    def one(j):
        name = d.column_names[j]
        try:
            try:
                series = transform_series(d.x[:, j], transform)
            except DegenerateSeries as exc:
                raise DegenerateSeries(str(exc), name) from None
            return garch_fit(series, opts, column=name)
        except VWLassoError as exc:
            if errors == "return":
                return exc
            raise

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, range(d.p)))
    return [one(j) for j in range(d.p)]


def weights_from_volatilities(vols, gamma: float = 1.0) -> PenaltyWeights:
    """``w_j = (1/v_j)**gamma`` normalized to mean one."""
    v = np.asarray(vols, dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        raise VWLassoError("volatilities must be positive and finite")
    if gamma == 0:
        w = np.ones_like(v)
    else:
        raw = (1.0 / v) ** gamma
        w = raw / raw.mean()
    return PenaltyWeights(w, float(gamma), "volatility", v)


def volatility_weights(d: Dataset, gamma: float = 1.0, transform: str = "diff",
                       opts: Optional[GarchOptions] = None, workers: int = 1) -> PenaltyWeights:
    """Penalty weights from each predictor's mean fitted conditional volatility.

    Low-volatility predictors get the larger penalties.
    """
    fits = fit_columns(d, transform, opts, workers)
    return weights_from_volatilities([f.mean_vol for f in fits], gamma)
