"""Penalized least squares by cyclic coordinate descent.

Every sparse model here minimizes

    (1/2n) * ||y - X b||^2 + lam * sum_j w_j * |b_j|

on centered data; plain Lasso is ``w = 1``, Adaptive Lasso uses inverse
initial-coefficient weights and VW-Lasso uses volatility weights. The
intercept is never penalized; it is recovered from the column means.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import Dataset, FitResult, Standardization, destandardize_fit, predict, standardize
from .errors import NotConverged, RankDeficient, VWLassoError
from .garch import GarchOptions, PenaltyWeights, volatility_weights

SELECTIONS = ("bic", "aic", "rolling_cv")
# adaptive stage 1 uses OLS only below this condition number
WELL_CONDITIONED = 1e8
ZERO_INITIAL = 1e-10


@dataclass(frozen=True)
class SolverConfig:
    max_iterations: int = 10_000
    tolerance: float = 1e-8
    lambda_grid_size: int = 100
    lambda_min_ratio: float = 1e-4
    selection: str = "bic"
    cv_folds: int = 5
    gamma_adaptive: float = 1.0

    def __post_init__(self):
        if not self.tolerance > 0:
            raise VWLassoError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise VWLassoError("max_iterations must be >= 1")
        if not 0 < self.lambda_min_ratio < 1:
            raise VWLassoError("lambda_min_ratio must lie in (0, 1)")
        if self.lambda_grid_size < 1:
            raise VWLassoError("lambda_grid_size must be >= 1")
        if self.selection not in SELECTIONS:
            raise VWLassoError(f"selection must be one of {SELECTIONS}")
        if self.cv_folds < 1:
            raise VWLassoError("cv_folds must be >= 1")


@dataclass(frozen=True)
class LambdaPath:
    lambdas: np.ndarray
    scores: np.ndarray
    chosen_index: int
    criterion: str = "bic"
    nonzeros: Optional[np.ndarray] = None

    def __post_init__(self):
        lam = np.asarray(self.lambdas, dtype=float)
        if lam.ndim != 1 or lam.shape[0] < 1 or np.any(lam <= 0) or np.any(np.diff(lam) >= 0):
            raise VWLassoError("lambdas must be strictly decreasing positive values")
        if not 0 <= self.chosen_index < lam.shape[0]:
            raise VWLassoError("chosen_index out of range")

    @property
    def chosen_lambda(self) -> float:
        return float(self.lambdas[self.chosen_index])


def soft_threshold(z: float, t: float) -> float:
    if t < 0:
        raise VWLassoError("threshold must be nonnegative")
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def _centered(d: Dataset):
    xm = d.x.mean(axis=0)
    ym = float(d.y.mean())
    return d.x - xm, d.y - ym, xm, ym


def _intercept(xm, ym, beta) -> float:
    return ym - float(xm @ beta)


def fit_ols(d: Dataset) -> FitResult:
    if d.n <= d.p:
        raise RankDeficient(f"OLS needs n > p, got n={d.n}, p={d.p}")
    xc, yc, xm, ym = _centered(d)
    cond = np.linalg.cond(xc)
    if not cond < 1e12:
        raise RankDeficient(f"design condition number {cond:.3g} exceeds 1e12")
    beta = np.linalg.lstsq(xc, yc, rcond=None)[0]
    return FitResult(_intercept(xm, ym, beta), beta, "ols")


def fit_ridge(d: Dataset, lam: float) -> FitResult:
    """Minimize ``||y - Xb||^2 / (2n) + lam * ||b||^2``."""
    if lam < 0:
        raise VWLassoError("lambda must be >= 0")
    xc, yc, xm, ym = _centered(d)
    n = d.n
    gram = xc.T @ xc / n + 2.0 * lam * np.eye(d.p)
    beta = np.linalg.solve(gram, xc.T @ yc / n)
    return FitResult(_intercept(xm, ym, beta), beta, "ridge", lam)


def _weight_array(w, p: int) -> np.ndarray:
    arr = np.asarray(w.weights if isinstance(w, PenaltyWeights) else w, dtype=float)
    if arr.shape != (p,):
        raise VWLassoError(f"expected {p} weights, got shape {arr.shape}")
    if np.any(np.isnan(arr)) or np.any(arr < 0):
        raise VWLassoError("weights must be nonnegative")
    return arr


class _Problem:
    """Gram-form sufficient statistics of a centered least-squares problem."""

    def __init__(self, d: Dataset):
        xc, yc, self.xm, self.ym = _centered(d)
        n = d.n
        self.n = n
        self.xc, self.yc = xc, yc
        self.gram = xc.T @ xc / n
        self.corr = xc.T @ yc / n
        self.yy = float(yc @ yc) / n


def lasso_objective(d: Dataset, beta, lam: float, w=None) -> float:
    """``(1/2n)||y - Xb||^2 + lam * sum w_j |b_j|`` on centered data."""
    prob = _Problem(d)
    w = np.ones(d.p) if w is None else _weight_array(w, d.p)
    r = prob.yc - prob.xc @ np.asarray(beta, dtype=float)
    pen = sum(lam * wj * abs(bj) for wj, bj in zip(w, beta) if bj != 0.0)
    return 0.5 * float(r @ r) / prob.n + pen


def _coordinate_descent(prob: _Problem, lam: float, w: np.ndarray, cfg: SolverConfig, beta0=None):
    p = prob.gram.shape[0]
    gram = prob.gram.tolist()
    diag = [gram[j][j] for j in range(p)]
    corr = prob.corr.tolist()
    active = [j for j in range(p) if math.isfinite(w[j]) and diag[j] > 0.0]
    thresh = [lam * float(w[j]) if math.isfinite(w[j]) else math.inf for j in range(p)]
    beta = [0.0] * p
    if beta0 is not None:
        for j in active:
            beta[j] = float(beta0[j])
    # grad[k] = x_k'(y - X b)/n
    grad = list(corr)
    for j in range(p):
        if beta[j] != 0.0:
            bj, gj = beta[j], gram[j]
            for k in range(p):
                grad[k] -= gj[k] * bj

    def objective():
        quad = prob.yy
        for j in range(p):
            if beta[j] != 0.0:
                quad -= beta[j] * (corr[j] + grad[j])
        return 0.5 * quad + sum(thresh[j] * abs(beta[j]) for j in active if beta[j] != 0.0)

    trace = []
    converged = False
    sweeps = 0
    while sweeps < cfg.max_iterations:
        sweeps += 1
        max_change = 0.0
        for j in active:
            bj = beta[j]
            z = grad[j] + diag[j] * bj
            t = thresh[j]
            if z > t:
                new = (z - t) / diag[j]
            elif z < -t:
                new = (z + t) / diag[j]
            else:
                new = 0.0
            delta = new - bj
            if delta != 0.0:
                gj = gram[j]
                for k in range(p):
                    grad[k] -= gj[k] * delta
                beta[j] = new
                if abs(delta) > max_change:
                    max_change = abs(delta)
        trace.append(objective())
        if max_change < cfg.tolerance:
            converged = True
            break
    return np.array(beta), sweeps, converged, tuple(trace)


def fit_weighted_lasso(d: Dataset, lam: float, w, cfg: Optional[SolverConfig] = None,
                       kind: str = "vw_lasso", warm_start=None,
                       raise_on_nonconvergence: bool = False) -> FitResult:
    """Weighted Lasso by cyclic coordinate descent in column order.

    ``w`` is a :class:`PenaltyWeights` or an array; a zero weight leaves a
    coordinate unpenalized and an infinite weight pins it at zero.
    """
    cfg = cfg or SolverConfig()
    if lam < 0:
        raise VWLassoError("lambda must be >= 0")
    warr = _weight_array(w, d.p)
    prob = _Problem(d)
    beta, sweeps, ok, trace = _coordinate_descent(prob, lam, warr, cfg, warm_start)
    fit = FitResult(_intercept(prob.xm, prob.ym, beta), beta, kind, lam,
                    warr if kind in ("adaptive_lasso", "vw_lasso") else None,
                    sweeps, ok, trace)
    if not ok and raise_on_nonconvergence:
        raise NotConverged(f"coordinate descent did not converge in {cfg.max_iterations} sweeps", fit)
    return fit


def fit_lasso(d: Dataset, lam: float, cfg: Optional[SolverConfig] = None, **kw) -> FitResult:
    return fit_weighted_lasso(d, lam, PenaltyWeights.unit(d.p), cfg, kind="lasso", **kw)


def fit_vw_lasso(d: Dataset, lam: float, w: PenaltyWeights, cfg: Optional[SolverConfig] = None, **kw) -> FitResult:
    if not isinstance(w, PenaltyWeights) or w.source != "volatility":
        raise VWLassoError("fit_vw_lasso needs volatility-derived PenaltyWeights")
    return fit_weighted_lasso(d, lam, w, cfg, kind="vw_lasso", **kw)


def adaptive_weights(initial, gamma: float = 1.0) -> PenaltyWeights:
    """``w_j = 1/|b_j|**gamma``; near-zero initial coefficients get ``inf`` (excluded)."""
    b = np.abs(np.asarray(initial, dtype=float))
    w = np.full(b.shape, np.inf)
    keep = b >= ZERO_INITIAL
    w[keep] = 1.0 / b[keep] ** gamma
    return PenaltyWeights(w, float(gamma), "adaptive")


def adaptive_initial(d: Dataset, cfg: Optional[SolverConfig] = None) -> np.ndarray:
    """Stage-1 estimate: OLS if n > 2p and well conditioned, else Lasso at its BIC lambda."""
    cfg = cfg or SolverConfig()
    if d.n > 2 * d.p:
        xc = d.x - d.x.mean(axis=0)
        if np.linalg.cond(xc) < WELL_CONDITIONED:
            return fit_ols(d).coefficients.copy()
    bic_cfg = replace(cfg, selection="bic")
    path = select_lambda(d, PenaltyWeights.unit(d.p), bic_cfg)
    return fit_lasso(d, path.chosen_lambda, bic_cfg).coefficients.copy()


def fit_adaptive_lasso(d: Dataset, lam: float, cfg: Optional[SolverConfig] = None,
                       initial=None, **kw) -> FitResult:
    cfg = cfg or SolverConfig()
    if initial is None:
        initial = adaptive_initial(d, cfg)
    w = adaptive_weights(initial, cfg.gamma_adaptive)
    if not np.any(np.isfinite(w.weights)):
        xm, ym = d.x.mean(axis=0), float(d.y.mean())
        zeros = np.zeros(d.p)
        return FitResult(_intercept(xm, ym, zeros), zeros, "adaptive_lasso", lam, w.weights,
                         0, True, (), ("all_weights_infinite",))
    return fit_weighted_lasso(d, lam, w, cfg, kind="adaptive_lasso", **kw)


def lambda_max(d: Dataset, w=None) -> float:
    """Smallest lambda at which every penalized coefficient is exactly zero.

    Unpenalized (zero-weight) coordinates are first fitted by least
    squares; excluded (infinite-weight) coordinates are ignored.
    """
    warr = np.ones(d.p) if w is None else _weight_array(w, d.p)
    xc, yc, _, _ = _centered(d)
    free = np.flatnonzero(warr == 0.0)
    pen = np.flatnonzero((warr > 0) & np.isfinite(warr))
    if pen.size == 0:
        raise VWLassoError("no penalized coordinates; lambda_max is undefined")
    r = yc
    if free.size:
        coef = np.linalg.lstsq(xc[:, free], yc, rcond=None)[0]
        r = yc - xc[:, free] @ coef
    # same expression as the solver's gradient so the boundary is bit-consistent
    g = np.abs(xc.T @ r / d.n)[pen]
    lmax = float(np.max(g / warr[pen]))
    # guard the boundary against rounding in lam * w_j
    while any(lmax * warr[j] < gj for j, gj in zip(pen, g)):
        lmax = float(np.nextafter(lmax, np.inf))
    return lmax if lmax > 0 else 1e-12


def lambda_grid(lmax: float, cfg: SolverConfig) -> np.ndarray:
    if cfg.lambda_grid_size == 1:
        return np.array([lmax])
    return lmax * np.logspace(0.0, math.log10(cfg.lambda_min_ratio), cfg.lambda_grid_size)


def _information_score(rss: float, n: int, k: int, criterion: str) -> float:
    rss = max(rss, np.finfo(float).tiny)
    pen = math.log(n) if criterion == "bic" else 2.0
    return n * math.log(rss / n) + k * pen


def rolling_folds(n: int, folds: int) -> list:
    """Contiguous expanding-window folds: train on blocks before k, validate on block k."""
    edges = np.linspace(0, n, folds + 2).astype(int)
    out = []
    for k in range(1, folds + 1):
        tr_end, va_end = int(edges[k]), int(edges[k + 1])
        if tr_end >= 2 and va_end > tr_end:
            out.append((tr_end, va_end))
    if not out:
        raise VWLassoError(f"too few rows ({n}) for rolling-origin CV")
    return out


def _path(d: Dataset, lambdas, warr, cfg, kind):
    fits = []
    beta = None
    for lam in lambdas:
        f = fit_weighted_lasso(d, float(lam), warr, cfg, kind=kind, warm_start=beta)
        beta = f.coefficients
        fits.append(f)
    return fits


def select_lambda(d: Dataset, w=None, cfg: Optional[SolverConfig] = None) -> LambdaPath:
    """Choose lambda on a log grid by BIC, AIC or rolling-origin CV.

    Ties go to the larger lambda.
    """
    cfg = cfg or SolverConfig()
    warr = np.ones(d.p) if w is None else _weight_array(w, d.p)
    lambdas = lambda_grid(lambda_max(d, warr), cfg)
    if cfg.selection in ("bic", "aic"):
        fits = _path(d, lambdas, warr, cfg, "vw_lasso")
        scores, nnz = [], []
        for f in fits:
            r = d.y - predict(f, d.x)
            k = int(np.count_nonzero(f.coefficients))
            nnz.append(k)
            scores.append(_information_score(float(r @ r), d.n, k, cfg.selection))
        scores = np.array(scores)
    else:
        sse = np.zeros(len(lambdas))
        for tr_end, va_end in rolling_folds(d.n, cfg.cv_folds):
            train, valid = d.rows(slice(0, tr_end)), d.rows(slice(tr_end, va_end))
            for i, f in enumerate(_path(train, lambdas, warr, cfg, "vw_lasso")):
                r = valid.y - predict(f, valid.x)
                sse[i] += float(r @ r) / valid.n
        scores = sse / len(rolling_folds(d.n, cfg.cv_folds))
        full = _path(d, lambdas, warr, cfg, "vw_lasso")
        nnz = [int(np.count_nonzero(f.coefficients)) for f in full]
    return LambdaPath(lambdas, scores, int(np.argmin(scores)), cfg.selection, np.array(nnz))


def select_ridge_lambda(d: Dataset, cfg: Optional[SolverConfig] = None) -> LambdaPath:
    """Ridge lambda by rolling-origin CV on the (unit-weight) Lasso grid."""
    cfg = cfg or SolverConfig()
    lambdas = lambda_grid(lambda_max(d), cfg)
    folds = rolling_folds(d.n, cfg.cv_folds)
    scores = np.zeros(len(lambdas))
    for tr_end, va_end in folds:
        train, valid = d.rows(slice(0, tr_end)), d.rows(slice(tr_end, va_end))
        for i, lam in enumerate(lambdas):
            r = valid.y - predict(fit_ridge(train, float(lam)), valid.x)
            scores[i] += float(r @ r) / valid.n / len(folds)
    return LambdaPath(lambdas, scores, int(np.argmin(scores)), "rolling_cv", np.full(len(lambdas), d.p))


@dataclass(frozen=True)
class ModelFit:
    """A fit in raw units together with what produced it."""

    fit: FitResult
    standardized_fit: FitResult
    standardization: Standardization
    path: Optional[LambdaPath] = None
    weights: Optional[PenaltyWeights] = None


def fit_model(kind: str, d: Dataset, cfg: Optional[SolverConfig] = None,
              vol_weights: Optional[PenaltyWeights] = None, gamma: float = 1.0,
              garch_transform: str = "diff", garch_opts: Optional[GarchOptions] = None,
              lam: Optional[float] = None) -> ModelFit:
    """Standardize ``d``, pick lambda (unless given), fit ``kind`` and map back to raw units.

    Everything is estimated from ``d`` alone; pass training rows only.
    """
    cfg = cfg or SolverConfig()
    ds, s = standardize(d)
    path = None
    weights = None
    if kind == "ols":
        sf = fit_ols(ds)
    elif kind == "ridge":
        if lam is None:
            path = select_ridge_lambda(ds, cfg)
            lam = path.chosen_lambda
        sf = fit_ridge(ds, lam)
    elif kind == "lasso":
        if lam is None:
            path = select_lambda(ds, None, cfg)
            lam = path.chosen_lambda
        sf = fit_lasso(ds, lam, cfg)
    elif kind == "adaptive_lasso":
        initial = adaptive_initial(ds, cfg)
        weights = adaptive_weights(initial, cfg.gamma_adaptive)
        if lam is None and np.any(np.isfinite(weights.weights)):
            path = select_lambda(ds, weights, cfg)
            lam = path.chosen_lambda
        sf = fit_adaptive_lasso(ds, lam or 0.0, cfg, initial=initial)
    elif kind == "vw_lasso":
        weights = vol_weights
        if weights is None:
            weights = volatility_weights(d, gamma, garch_transform, garch_opts)
        if lam is None:
            path = select_lambda(ds, weights, cfg)
            lam = path.chosen_lambda
        sf = fit_vw_lasso(ds, lam, weights, cfg)
    else:
        raise VWLassoError(f"unknown model kind {kind!r}")
    return ModelFit(destandardize_fit(sf, s), sf, s, path, weights)
