"""CSV ingestion of quarterly datasets and serialization of every report.

Output CSVs use a fixed column order and six-decimal fixed formatting.
Each report gets a JSON sidecar (same stem, ``.json``) holding the
configuration, its hash, the seed and the tool version.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .core import Dataset, FitResult, TimeIndex
from .errors import (EmptyAfterTransform, IoFailure, MissingColumn, NonMonotonicDates,
                     NonNumericCell, VWLassoError)
from .evaluate import BacktestReport, BacktestRow, config_hash
from .explain import ShapMatrix
from .garch import PenaltyWeights
from .penalized import LambdaPath
from .simulate import CoefTable

COLUMN_TRANSFORMS = ("none", "diff", "pct_change", "log_diff")
_QUARTER = re.compile(r"^\s*(\d{4})\s*[-_ ]?[Qq]([1-4])\s*$")


@dataclass(frozen=True)
class IngestSpec:
    path: Path
    date_column: str
    target_column: str
    predictor_columns: Optional[tuple] = None
    transform_per_column: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "path", Path(self.path))
        if self.date_column == self.target_column:
            raise VWLassoError("date and target columns must differ")
        if self.predictor_columns is not None:
            object.__setattr__(self, "predictor_columns", tuple(self.predictor_columns))
        for col, tr in self.transform_per_column.items():
            if tr not in COLUMN_TRANSFORMS:
                raise VWLassoError(f"unknown transform {tr!r} for column {col!r}")


def parse_period(text: str) -> tuple[str, int]:
    """Return (label, ordinal) for ``1986Q1``, a quarter-start ISO date, or a plain integer step."""
    s = text.strip()
    m = _QUARTER.match(s)
    if m:
        year, q = int(m.group(1)), int(m.group(2))
        return f"{year}Q{q}", year * 4 + q - 1
    if re.fullmatch(r"-?\d+", s):
        return s, int(s)
    try:
        d = dt.date.fromisoformat(s[:10])
    except ValueError:
        raise ValueError(f"unrecognized period {text!r}") from None
    if d.month not in (1, 4, 7, 10) or d.day != 1:
        raise ValueError(f"{text!r} is not a quarter start date")
    q = (d.month - 1) // 3 + 1
    return f"{d.year}Q{q}", d.year * 4 + q - 1


def _to_float(cell: str) -> Optional[float]:
    try:
        v = float(cell)
    except ValueError:
        return None
    return v if math.isfinite(v) else None


def _apply_transform(col: np.ndarray, tr: str, name: str) -> np.ndarray:
    if tr == "none":
        return col[1:]
    if tr == "diff":
        return np.diff(col)
    if tr == "pct_change":
        if np.any(col[:-1] == 0):
            raise VWLassoError(f"pct_change on column {name!r} divides by zero")
        return col[1:] / col[:-1] - 1.0
    if np.any(col <= 0):
        raise VWLassoError(f"log_diff on column {name!r} needs strictly positive values")
    return np.diff(np.log(col))


def load_csv(spec: IngestSpec) -> Dataset:
    """Read a dataset; row/column numbers in errors are 1-based (data rows, file columns)."""
    try:
        with open(spec.path, newline="", encoding="utf-8") as fh:
            table = list(csv.reader(fh))
    except OSError as exc:
        raise IoFailure(f"cannot read {spec.path}: {exc}") from exc
    if not table:
        raise VWLassoError(f"{spec.path} is empty")
    header = [h.strip() for h in table[0]]
    body = [r for r in table[1:] if any(c.strip() for c in r)]
    for name in (spec.date_column, spec.target_column, *(spec.predictor_columns or ())):
        if name not in header:
            raise MissingColumn(name)
    for name in spec.transform_per_column:
        if name not in header:
            raise MissingColumn(name)

    pos = {h: i for i, h in enumerate(header)}
    if spec.predictor_columns is None:
        # every remaining column with at least one numeric cell
        predictors = [h for h in header if h not in (spec.date_column, spec.target_column)
                      and any(_to_float(r[pos[h]]) is not None for r in body if pos[h] < len(r))]
    else:
        predictors = list(spec.predictor_columns)
    if not predictors:
        raise VWLassoError("no predictor columns")

    labels, ords = [], []
    for i, r in enumerate(body, start=1):
        cell = r[pos[spec.date_column]] if pos[spec.date_column] < len(r) else ""
        try:
            label, o = parse_period(cell)
        except ValueError as exc:
            raise NonMonotonicDates(i, str(exc)) from None
        if ords and o <= ords[-1]:
            raise NonMonotonicDates(i, f"{label} does not follow {labels[-1]}")
        labels.append(label)
        ords.append(o)

    cols = [spec.target_column] + predictors
    values = np.empty((len(body), len(cols)))
    for i, r in enumerate(body, start=1):
        for k, name in enumerate(cols):
            c = pos[name]
            cell = r[c] if c < len(r) else ""
            v = _to_float(cell)
            if v is None:
                raise NonNumericCell(i, c + 1, cell, name)
            values[i - 1, k] = v

    transforms = [spec.transform_per_column.get(name, "none") for name in cols]
    if any(t != "none" for t in transforms):
        values = np.column_stack([_apply_transform(values[:, k], t, cols[k]) for k, t in enumerate(transforms)])
        labels, ords = labels[1:], ords[1:]
    if values.shape[0] == 0:
        raise EmptyAfterTransform(f"no rows left in {spec.path}")
    return Dataset(TimeIndex(tuple(labels), tuple(ords)), spec.target_column,
                   values[:, 0], values[:, 1:], tuple(predictors))


# ---------------------------------------------------------------- writing

def fmt(v) -> str:
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    s = f"{v:.6f}"
    return "0.000000" if s == "-0.000000" else s


def write_csv(path, header: Sequence[str], rows: Sequence[Sequence]) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_sidecar(path, config: dict, seed=None, extra: Optional[dict] = None) -> Path:
    meta = {"tool": "vwlasso", "version": __version__, "config": config,
            "config_hash": config_hash(config), "seed": seed}
    if extra:
        meta.update(extra)
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(meta, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, Path):
        return str(o)
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_backtest_report(report: BacktestReport, path) -> Path:
    rows = [(r.model, float(r.train_fraction), float(r.mae), float(r.rmse)) for r in report.rows]
    write_csv(path, ("model", "train_fraction", "mae", "rmse"), rows)
    meta = dict(report.metadata)
    config = meta.pop("config", {})
    seed = meta.pop("seed", None)
    meta.pop("config_hash", None)
    meta["errors"] = [{"model": r.model, "train_fraction": r.train_fraction, "error": r.error}
                      for r in report.errors]
    write_sidecar(sidecar_path(path), config, seed, meta)
    return Path(path)


def read_backtest_report(path) -> BacktestReport:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = [BacktestRow(r["model"], float(r["train_fraction"]), float(r["mae"]), float(r["rmse"]))
                for r in reader]
    side = sidecar_path(path)
    meta = json.loads(side.read_text()) if side.exists() else {}
    errs = {(e["model"], e["train_fraction"]): e["error"] for e in meta.get("errors", [])}
    rows = [BacktestRow(r.model, r.train_fraction, r.mae, r.rmse, errs.get((r.model, r.train_fraction)))
            for r in rows]
    return BacktestReport(rows, meta)


def write_coef_table(table: CoefTable, path, config: Optional[dict] = None) -> Path:
    header = ["method"] + [f"coef_{j + 1}" for j in range(len(table.column_names))]
    rows = [[m] + [float(v) for v in table.coefficients[i]] for i, m in enumerate(table.methods)]
    write_csv(path, header, rows)
    write_sidecar(sidecar_path(path), config or {}, table.seed,
                  {"columns": list(table.column_names), "lambdas": list(table.lambdas)})
    return Path(path)


def read_csv_rows(path) -> tuple[list, list]:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def write_shap(shap: ShapMatrix, labels: Sequence[str], path, config: Optional[dict] = None) -> Path:
    rows = [[lab] + [float(v) for v in shap.values[t]] for t, lab in enumerate(labels)]
    write_csv(path, ["period"] + list(shap.column_names), rows)
    write_sidecar(sidecar_path(path), config or {}, None, {"base_value": shap.base_value})
    return Path(path)


def write_lambda_path(lp: LambdaPath, path, config: Optional[dict] = None) -> Path:
    nnz = lp.nonzeros if lp.nonzeros is not None else [""] * len(lp.lambdas)
    rows = [(i, float(l), float(s), int(k) if k != "" else "", int(i == lp.chosen_index))
            for i, (l, s, k) in enumerate(zip(lp.lambdas, lp.scores, nnz))]
    write_csv(path, ("index", "lambda", "score", "nonzeros", "chosen"), rows)
    write_sidecar(sidecar_path(path), config or {}, None, {"criterion": lp.criterion, "chosen_index": lp.chosen_index})
    return Path(path)


def write_weights(w: PenaltyWeights, names: Sequence[str], path, config: Optional[dict] = None,
                  seed=None) -> Path:
    vols = w.volatilities if w.volatilities is not None else [float("nan")] * len(names)
    rows = [(name, float(wj), float(v)) for name, wj, v in zip(names, w.weights, vols)]
    write_csv(path, ("column", "weight", "mean_volatility"), rows)
    write_sidecar(sidecar_path(path), config or {}, seed, {"gamma": w.gamma, "source": w.source})
    return Path(path)


def read_weights(path, names: Optional[Sequence[str]] = None) -> PenaltyWeights:
    """Read a weights file written by :func:`write_weights`, reordered to ``names`` if given."""
    try:
        header, rows = read_csv_rows(path)
    except OSError as exc:
        raise IoFailure(f"cannot read {path}: {exc}") from exc
    table = {r[0]: (float(r[1]), float(r[2])) for r in rows}
    order = list(names) if names is not None else [r[0] for r in rows]
    missing = [n for n in order if n not in table]
    if missing:
        raise MissingColumn(missing[0])
    side = sidecar_path(path)
    meta = json.loads(side.read_text()) if side.exists() else {}
    vols = np.array([table[n][1] for n in order])
    return PenaltyWeights(np.array([table[n][0] for n in order]), float(meta.get("gamma", 1.0)),
                          meta.get("source", "volatility"), None if np.any(np.isnan(vols)) else vols)


def fit_to_dict(f: FitResult, column_names: Sequence[str], **extra) -> dict:
    out = {
        "model_kind": f.model_kind,
        "intercept": f.intercept,
        "columns": list(column_names),
        "coefficients": dict(zip(column_names, (float(c) for c in f.coefficients))),
        "lambda": f.lam,
        "weights_used": None if f.weights_used is None else [float(v) for v in f.weights_used],
        "iterations": f.iterations,
        "converged": f.converged,
        "notes": list(f.notes),
    }
    out.update(extra)
    return out


def write_fit(f: FitResult, column_names: Sequence[str], path, **extra) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(fit_to_dict(f, column_names, **extra), indent=2, sort_keys=True,
                                   default=_json_default) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def read_fit(path) -> tuple[FitResult, list, dict]:
    """Return (fit, column names, the full JSON document)."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read fit file {path}: {exc}") from exc
    # key order is not preserved by sorted JSON, so the column list is authoritative
    names = list(doc.get("columns") or doc["coefficients"].keys())
    w = doc.get("weights_used")
    fit = FitResult(doc["intercept"], [doc["coefficients"][n] for n in names], doc["model_kind"],
                    doc.get("lambda", 0.0), None if w is None else np.array(w, dtype=float),
                    doc.get("iterations", 0), doc.get("converged", True), (), tuple(doc.get("notes", ())))
    return fit, names, doc


def write_dataset(d: Dataset, path, extra_columns: Optional[dict] = None) -> Path:
    extra_columns = extra_columns or {}
    header = ["period", d.target_name, *d.column_names, *extra_columns]
    rows = []
    for t, label in enumerate(d.index.labels):
        rows.append([label, float(d.y[t]), *(float(v) for v in d.x[t]),
                     *(float(np.asarray(c)[t]) for c in extra_columns.values())])
    return write_csv(path, header, rows)


def write_report(obj, path, config: Optional[dict] = None, **kw) -> Path:
    """Dispatch on report type."""
    if isinstance(obj, BacktestReport):
        return write_backtest_report(obj, path)
    if isinstance(obj, CoefTable):
        return write_coef_table(obj, path, config)
    if isinstance(obj, ShapMatrix):
        return write_shap(obj, kw["labels"], path, config)
    if isinstance(obj, LambdaPath):
        return write_lambda_path(obj, path, config)
    raise VWLassoError(f"don't know how to write {type(obj).__name__}")
