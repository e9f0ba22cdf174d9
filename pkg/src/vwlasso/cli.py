"""Batch command line: simulate, backtest, garch, fit, explain.

Every command accepts ``--config file.json`` (keys are the long flag names
with underscores); explicit flags override the file. The fully resolved
configuration is written to ``run.json`` in the output directory and can be
fed back through ``--config`` to repeat the run.

Exit codes: 0 success (possibly with warnings), 1 runtime failure,
2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import io as vio
from .core import predict
from .errors import ConfigError, VWLassoError
from .evaluate import BACKTEST_MODELS, DEFAULT_FRACTIONS, run_backtest
from .explain import importance_ranking, linear_shap, plot_data
from .garch import GarchOptions, fit_columns, weights_from_volatilities
from .penalized import SolverConfig, fit_model
from .simulate import SCENARIOS, SimConfig, run_monte_carlo, run_table1, simulate_dgp

# flags that never change results and are left out of run.json
_NOT_ECHOED = {"command", "config", "out", "threads", "func"}

DEFAULTS = {
    "seed": 0,
    # solver
    "max_iterations": 10_000, "tolerance": 1e-8, "grid_size": 100, "lambda_min_ratio": 1e-4,
    "selection": "bic", "cv_folds": 5, "gamma_adaptive": 1.0,
    # garch / weights
    "gamma": 1.0, "garch_transform": "diff", "restarts": 5,
    # ingestion
    "date_column": "period", "target": "GDP", "predictors": None, "transform": [],
    # simulate
    "n": 100, "p": 5, "ar_x": None, "beta": None, "error_ar": 0.5, "vol_low": 1.0,
    "vol_high": 2 * np.pi, "vol_cycles": 1.0, "scenario": "paper", "reps": 1,
    # backtest / fit / explain
    "input": None, "fractions": list(DEFAULT_FRACTIONS), "weights": None, "models": list(BACKTEST_MODELS),
    "model": "vw_lasso", "train_fraction": 1.0, "lam": None, "fit": None,
}


class UsageError(Exception):
    pass


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON file with default values for any flag")
    p.add_argument("--seed", type=int, help="master seed (GARCH restarts, simulation)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--threads", type=int, default=None, help="worker count (results do not depend on it)")


def _solver_flags(p) -> None:
    p.add_argument("--selection", choices=("bic", "aic", "rolling_cv"))
    p.add_argument("--grid-size", type=int)
    p.add_argument("--lambda-min-ratio", type=float)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--cv-folds", type=int)
    p.add_argument("--gamma-adaptive", type=float)
    p.add_argument("--gamma", type=float, help="exponent of the inverse-volatility weights (0 gives plain Lasso)")
    p.add_argument("--garch-transform", choices=("levels", "diff", "log_diff"))
    p.add_argument("--restarts", type=int, help="GARCH optimizer restarts")


def _ingest_flags(p, required=True) -> None:
    p.add_argument("--input", type=Path, required=False, help="input CSV" + (" (required)" if required else ""))
    p.add_argument("--date-column")
    p.add_argument("--target")
    p.add_argument("--predictors", help="comma-separated predictor columns (default: all numeric)")
    p.add_argument("--transform", action="append", metavar="COLUMN=KIND",
                   help="per-column transform: none, diff, pct_change, log_diff (repeatable)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="vwlasso", description="Volatility-weighted Lasso toolkit")
    ap.add_argument("--version", action="version", version=f"vwlasso {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="simulation study and coefficient table")
    _common(s)
    _solver_flags(s)
    s.add_argument("--n", type=int)
    s.add_argument("--p", type=int)
    s.add_argument("--ar-x", type=float, nargs="+", help="AR(1) coefficient per predictor")
    s.add_argument("--beta", type=float, nargs="+", help="true coefficients")
    s.add_argument("--error-ar", type=float)
    s.add_argument("--vol-low", type=float)
    s.add_argument("--vol-high", type=float)
    s.add_argument("--vol-cycles", type=float)
    s.add_argument("--scenario", choices=SCENARIOS)
    s.add_argument("--reps", type=int, help="Monte Carlo replications (1 = single table)")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("backtest", help="chronological-split accuracy table for all models")
    _common(b)
    _solver_flags(b)
    _ingest_flags(b)
    b.add_argument("--fractions", type=float, nargs="+")
    b.add_argument("--weights", type=Path, help="weights.csv from the garch command (fixed VW penalties)")
    b.set_defaults(func=cmd_backtest)

    g = sub.add_parser("garch", help="per-column GARCH(1,1) fits and penalty weights")
    _common(g)
    _solver_flags(g)
    _ingest_flags(g)
    g.set_defaults(func=cmd_garch)

    f = sub.add_parser("fit", help="fit one model and save it for explain")
    _common(f)
    _solver_flags(f)
    _ingest_flags(f)
    f.add_argument("--model", choices=BACKTEST_MODELS)
    f.add_argument("--train-fraction", type=float, help="leading share of rows used for fitting (default 1)")
    f.add_argument("--lambda", dest="lam", type=float, help="fixed penalty (skips selection)")
    f.set_defaults(func=cmd_fit)

    e = sub.add_parser("explain", help="exact linear SHAP values and importance ranking")
    _common(e)
    _ingest_flags(e)
    e.add_argument("--fit", type=Path, help="fit.json written by the fit command (required)")
    e.set_defaults(func=cmd_explain)
    return ap


def resolve(args: argparse.Namespace) -> dict:
    """defaults <- config file <- explicit flags."""
    cfg = {k: v for k, v in DEFAULTS.items()}
    if args.config is not None:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise UsageError(f"--config: cannot read {args.config}: {exc}")
        if isinstance(doc, dict) and "config" in doc and isinstance(doc["config"], dict):
            doc = doc["config"]
        if not isinstance(doc, dict):
            raise UsageError("--config: expected a JSON object")
        cfg.update(doc)
    for k, v in vars(args).items():
        if k in ("func", "config"):
            continue
        if v is not None:
            cfg[k] = v
    if cfg.get("threads") is None:
        cfg["threads"] = os.cpu_count() or 1
    return cfg


def _echo(cfg: dict) -> dict:
    out = {}
    for k, v in sorted(cfg.items()):
        if k in _NOT_ECHOED:
            continue
        out[k] = str(v) if isinstance(v, Path) else v
    return out


def _solver(cfg) -> SolverConfig:
    try:
        return SolverConfig(max_iterations=int(cfg["max_iterations"]), tolerance=float(cfg["tolerance"]),
                            lambda_grid_size=int(cfg["grid_size"]), lambda_min_ratio=float(cfg["lambda_min_ratio"]),
                            selection=cfg["selection"], cv_folds=int(cfg["cv_folds"]),
                            gamma_adaptive=float(cfg["gamma_adaptive"]))
    except VWLassoError as exc:
        raise UsageError(f"solver flags (--tolerance/--max-iterations/--grid-size/--lambda-min-ratio/"
                         f"--selection/--cv-folds): {exc}")


def _garch_opts(cfg) -> GarchOptions:
    if int(cfg["restarts"]) < 1:
        raise UsageError("--restarts must be >= 1")
    return GarchOptions(restarts=int(cfg["restarts"]), seed=int(cfg["seed"]))


def _ingest(cfg):
    if cfg.get("input") is None:
        raise UsageError("--input is required")
    transforms = {}
    for item in cfg.get("transform") or []:
        if "=" not in item:
            raise UsageError(f"--transform expects COLUMN=KIND, got {item!r}")
        col, kind = item.split("=", 1)
        transforms[col.strip()] = kind.strip()
    preds = cfg.get("predictors")
    if isinstance(preds, str):
        preds = tuple(p.strip() for p in preds.split(",") if p.strip())
    try:
        spec = vio.IngestSpec(Path(cfg["input"]), cfg["date_column"], cfg["target"], preds, transforms)
    except VWLassoError as exc:
        raise UsageError(f"--transform/--date-column/--target: {exc}")
    if not spec.path.exists():
        raise VWLassoError(f"input file not found: {spec.path}")
    return vio.load_csv(spec)


def _write_run(out: Path, command: str, cfg: dict, extra=None) -> None:
    doc = {"command": command, "version": __version__, "config": _echo(cfg)}
    if extra:
        doc.update(extra)
    out.mkdir(parents=True, exist_ok=True)
    (out / "run.json").write_text(json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n")


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def cmd_simulate(cfg: dict) -> int:
    if int(cfg["n"]) < 10:
        raise UsageError(f"--n must be >= 10 (got {cfg['n']})")
    if int(cfg["p"]) < 1:
        raise UsageError(f"--p must be >= 1 (got {cfg['p']})")
    if int(cfg["reps"]) < 1:
        raise UsageError(f"--reps must be >= 1 (got {cfg['reps']})")
    if int(cfg["seed"]) < 0:
        raise UsageError("--seed must be nonnegative")
    try:
        sim = SimConfig(n=int(cfg["n"]), p=int(cfg["p"]),
                        ar_coeffs_x=None if cfg["ar_x"] is None else tuple(cfg["ar_x"]),
                        true_beta=None if cfg["beta"] is None else tuple(cfg["beta"]),
                        error_ar=float(cfg["error_ar"]), vol_low=float(cfg["vol_low"]),
                        vol_high=float(cfg["vol_high"]), vol_cycles=float(cfg["vol_cycles"]),
                        seed=int(cfg["seed"]), scenario=cfg["scenario"])
    except VWLassoError as exc:
        raise UsageError(f"simulation flags (--ar-x/--beta/--error-ar/--vol-low/--vol-high): {exc}")
    solver = _solver(cfg)
    gopts = _garch_opts(cfg)
    out = Path(cfg["out"])
    echo = _echo(cfg)

    inst = simulate_dgp(sim)
    vio.write_dataset(inst.dataset, out / "sim_instance.csv", {"sigma": inst.sigma_path})
    table = run_table1(sim, solver, float(cfg["gamma"]), cfg["garch_transform"], gopts)
    vio.write_coef_table(table, out / "table1.csv", echo)

    reps = int(cfg["reps"])
    if reps > 1:
        report = run_monte_carlo(sim, solver, reps, float(cfg["gamma"]), cfg["garch_transform"], gopts,
                                 workers=int(cfg["threads"]))
        header = ["rep", "seed", "method", "l2_error", "precision", "recall", "nonzeros", "lambda"] + \
                 [f"coef_{j + 1}" for j in range(sim.p)]
        rows = [[r["rep"], r["seed"], r["method"], r["l2_error"], float(r["precision"]), float(r["recall"]),
                 r["nonzeros"], float(r["lambda"]), *r["coefficients"]] for r in report.records]
        vio.write_csv(out / "mc_records.csv", header, rows)
        summary = report.summary()
        vio.write_csv(out / "mc_summary.csv",
                      ["method", "median_l2_error", "iqr_l2_error", "mean_precision", "mean_recall", "reps"],
                      [[s["method"], s["median_l2_error"], s["iqr_l2_error"], s["mean_precision"],
                        s["mean_recall"], s["reps"]] for s in summary])
        vio.write_sidecar(out / "mc_summary.json", echo, sim.seed, {"child_seeds": list(report.seeds)})
    _write_run(out, "simulate", cfg)
    print(f"simulate: wrote {out}")
    return 0


def cmd_backtest(cfg: dict) -> int:
    d = _ingest(cfg)
    solver = _solver(cfg)
    gopts = _garch_opts(cfg)
    out = Path(cfg["out"])
    fractions = [float(f) for f in cfg["fractions"]]
    if any(not 0 < f < 1 for f in fractions):
        raise UsageError("--fractions must lie in (0, 1)")
    weights = None
    if cfg.get("weights"):
        weights = vio.read_weights(cfg["weights"], d.column_names)
    report = run_backtest(d, fractions, solver, gopts, float(cfg["gamma"]), cfg["garch_transform"],
                          weights, tuple(cfg["models"]), workers=int(cfg["threads"]),
                          name=Path(cfg["input"]).name)
    vio.write_backtest_report(report, out / "backtest_report.csv")
    rows = []
    for (model, frac), f in report.fits.items():
        rows.append([model, float(frac), float(f.intercept), float(f.lam), *(float(c) for c in f.coefficients)])
    vio.write_csv(out / "coefficients.csv", ["model", "train_fraction", "intercept", "lambda", *d.column_names], rows)
    _write_run(out, "backtest", cfg)
    for r in report.errors:
        _warn(f"{r.model} @ {r.train_fraction}: {r.error}")
    print(f"backtest: {len(report.rows)} rows, {len(report.errors)} warnings, wrote {out}")
    return 0


def cmd_garch(cfg: dict) -> int:
    d = _ingest(cfg)
    gopts = _garch_opts(cfg)
    out = Path(cfg["out"])
    transform = cfg["garch_transform"]
    fits = fit_columns(d, transform, gopts, workers=int(cfg["threads"]), errors="return")
    rows, warnings = [], 0
    offset = 1 if transform in ("diff", "log_diff") else 0
    labels = d.index.labels[offset:]
    vol_cols = {}
    for name, f in zip(d.column_names, fits):
        if isinstance(f, Exception):
            warnings += 1
            _warn(f"{type(f).__name__}: {f}")
            rows.append([name, float("nan"), float("nan"), float("nan"), float("nan"), "", float("nan"),
                         f"{type(f).__name__}: {f}"])
            vol_cols[name] = np.full(len(labels), np.nan)
        else:
            p = f.params
            rows.append([name, p.omega, p.alpha, p.beta, f.loglik, str(f.converged).lower(), f.mean_vol, "ok"])
            vol_cols[name] = f.cond_vol
    vio.write_csv(out / "garch_params.csv",
                  ["column", "omega", "alpha", "beta", "loglik", "converged", "mean_volatility", "status"], rows)
    vio.write_csv(out / "cond_vol.csv", ["period", *d.column_names],
                  [[lab, *(float(vol_cols[c][t]) for c in d.column_names)] for t, lab in enumerate(labels)])
    echo = _echo(cfg)
    if warnings == 0:
        w = weights_from_volatilities([f.mean_vol for f in fits], float(cfg["gamma"]))
        vio.write_weights(w, d.column_names, out / "weights.csv", echo, gopts.seed)
    else:
        _warn("weights.csv not written: some columns could not be fitted")
    _write_run(out, "garch", cfg, {"warnings": warnings})
    print(f"garch: {d.p} columns, {warnings} warnings, wrote {out}")
    return 0


def cmd_fit(cfg: dict) -> int:
    d = _ingest(cfg)
    solver = _solver(cfg)
    gopts = _garch_opts(cfg)
    out = Path(cfg["out"])
    frac = float(cfg["train_fraction"])
    if not 0 < frac <= 1:
        raise UsageError("--train-fraction must lie in (0, 1]")
    n_train = d.n if frac == 1 else int(np.floor(d.n * frac + 1e-9))
    train = d.rows(slice(0, n_train))
    mf = fit_model(cfg["model"], train, solver, gamma=float(cfg["gamma"]), garch_transform=cfg["garch_transform"],
                   garch_opts=gopts, lam=None if cfg["lam"] is None else float(cfg["lam"]))
    vio.write_fit(mf.fit, d.column_names, out / "fit.json",
                  background_means=[float(v) for v in train.x.mean(axis=0)],
                  train_rows=n_train, target=d.target_name, config=_echo(cfg))
    if mf.path is not None:
        vio.write_lambda_path(mf.path, out / "lambda_path.csv", _echo(cfg))
    if mf.weights is not None:
        vio.write_weights(mf.weights, d.column_names, out / "weights.csv", _echo(cfg), gopts.seed)
    _write_run(out, "fit", cfg)
    print(f"fit: {cfg['model']} on {n_train} rows, wrote {out}")
    return 0


def cmd_explain(cfg: dict) -> int:
    if cfg.get("fit") is None:
        raise UsageError("--fit is required")
    fit_path = Path(cfg["fit"])
    if not fit_path.exists():
        raise VWLassoError(f"fit file not found: {fit_path} (run `vwlasso fit --out DIR` first and pass DIR/fit.json)")
    fit, names, doc = vio.read_fit(fit_path)
    d = _ingest(cfg)
    if list(d.column_names) != names:
        raise VWLassoError(f"fit columns {names} do not match dataset columns {list(d.column_names)}")
    means = doc.get("background_means")
    if means is None or len(means) != d.p:
        n_train = int(doc.get("train_rows", d.n))
        means = d.x[:n_train].mean(axis=0)
    shap = linear_shap(fit, d, means)
    out = Path(cfg["out"])
    echo = _echo(cfg)
    vio.write_shap(shap, d.index.labels, out / "shap_values.csv", echo)
    ranking = importance_ranking(shap)
    vio.write_csv(out / "importance.csv", ["rank", "column", "mean_abs_shap"],
                  [[i + 1, name, float(v)] for i, (name, v) in enumerate(ranking)])
    recs = plot_data(shap, d)
    vio.write_csv(out / "shap_plot_data.csv", ["period", "column", "feature_value", "shap_value"],
                  [[r["period"], r["column"], r["feature_value"], r["shap_value"]] for r in recs])
    # local accuracy check travels with the output
    resid = float(np.max(np.abs(shap.base_value + shap.values.sum(axis=1) - predict(fit, d.x))))
    _write_run(out, "explain", cfg, {"max_local_accuracy_error": resid})
    print(f"explain: top variable {ranking[0][0]}, wrote {out}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args)
        return args.func(cfg)
    except (UsageError, ConfigError) as exc:
        print(f"vwlasso {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (VWLassoError, OSError) as exc:
        print(f"vwlasso {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
