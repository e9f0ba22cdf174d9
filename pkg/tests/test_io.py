import json

import numpy as np
import pytest

from vwlasso.core import FitResult
from vwlasso.errors import IoFailure, MissingColumn, NonMonotonicDates, NonNumericCell, VWLassoError
from vwlasso.evaluate import BacktestReport, BacktestRow
from vwlasso.garch import PenaltyWeights, weights_from_volatilities
from vwlasso.io import (IngestSpec, fmt, load_csv, parse_period, read_backtest_report, read_csv_rows, read_fit,
                        read_weights, sidecar_path, write_backtest_report, write_fit, write_weights)

SMALL = "period,GDP,A,B\n1986Q1,1.5,2,3\n1986Q2,2.5,4,9\n1986Q3,3.5,8,27\n1986Q4,5,16,81\n"


def _write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_reads_values_exactly(tmp_path):
    d = load_csv(IngestSpec(_write(tmp_path, SMALL), "period", "GDP"))
    assert d.index.labels == ("1986Q1", "1986Q2", "1986Q3", "1986Q4")
    assert d.column_names == ("A", "B")
    assert d.y.tolist() == [1.5, 2.5, 3.5, 5.0]
    assert d.x.tolist() == [[2, 3], [4, 9], [8, 27], [16, 81]]


def test_diff_transform_drops_first_row(tmp_path):
    d = load_csv(IngestSpec(_write(tmp_path, SMALL), "period", "GDP", transform_per_column={"A": "diff"}))
    assert d.n == 3 and d.index.labels[0] == "1986Q2"
    assert d.x[:, 0].tolist() == [2, 4, 8]
    assert d.x[:, 1].tolist() == [9, 27, 81]
    assert d.y.tolist() == [2.5, 3.5, 5.0]


def test_other_transforms(tmp_path):
    d = load_csv(IngestSpec(_write(tmp_path, SMALL), "period", "GDP",
                            transform_per_column={"A": "pct_change", "B": "log_diff"}))
    np.testing.assert_allclose(d.x[:, 0], [1.0, 1.0, 1.0])
    np.testing.assert_allclose(d.x[:, 1], np.log(3.0))


def test_predictor_subset(tmp_path):
    d = load_csv(IngestSpec(_write(tmp_path, SMALL), "period", "GDP", predictor_columns=("B",)))
    assert d.column_names == ("B",)


def test_blank_cell_reports_position(tmp_path):
    text = SMALL.replace("1986Q3,3.5,8,27", "1986Q3,3.5,,27")
    with pytest.raises(NonNumericCell) as err:
        load_csv(IngestSpec(_write(tmp_path, text), "period", "GDP"))
    assert err.value.row == 3 and err.value.col == 3 and err.value.column == "A"


def test_missing_column(tmp_path):
    with pytest.raises(MissingColumn):
        load_csv(IngestSpec(_write(tmp_path, SMALL), "period", "CPI"))


def test_dates_must_increase(tmp_path):
    text = SMALL.replace("1986Q3", "1986Q1")
    with pytest.raises(NonMonotonicDates) as err:
        load_csv(IngestSpec(_write(tmp_path, text), "period", "GDP"))
    assert err.value.row == 3


def test_iso_dates(tmp_path):
    text = "date,GDP,A\n1986-01-01,1,2\n1986-04-01,2,3\n1986-07-01,3,5\n"
    d = load_csv(IngestSpec(_write(tmp_path, text), "date", "GDP"))
    assert d.index.labels == ("1986Q1", "1986Q2", "1986Q3")


def test_parse_period_forms():
    assert parse_period("2001Q4") == ("2001Q4", 2001 * 4 + 3)
    assert parse_period("2001-q2")[0] == "2001Q2"
    assert parse_period("17") == ("17", 17)
    with pytest.raises(ValueError):
        parse_period("March")


def test_unreadable_file(tmp_path):
    with pytest.raises(IoFailure):
        load_csv(IngestSpec(tmp_path / "absent.csv", "period", "GDP"))


def test_fixture_shape(macro_csv):
    d = load_csv(IngestSpec(macro_csv, "period", "GDP"))
    assert d.n == 148 and d.p == 10
    assert d.index.labels[0] == "1986Q1" and d.index.labels[-1] == "2022Q4"


def test_fmt():
    assert fmt(1.0) == "1.000000"
    assert fmt(-1e-9) == "0.000000"
    assert fmt(float("nan")) == "nan"
    assert fmt(2.0 / 3.0) == "0.666667"


def _report(errors=False):
    rows = []
    for m in ("ols", "lasso", "ridge", "adaptive_lasso", "vw_lasso"):
        for f in (0.7, 0.8, 0.9):
            if errors and m == "vw_lasso":
                rows.append(BacktestRow(m, f, float("nan"), float("nan"), "DegenerateSeries: column 'X'"))
            else:
                rows.append(BacktestRow(m, f, 1.0 + f, 2.0 + f))
    return BacktestReport(rows, {"config": {"a": 1}, "seed": 0})


def test_backtest_report_round_trip(tmp_path):
    path = write_backtest_report(_report(errors=True), tmp_path / "r.csv")
    lines = path.read_text().splitlines()
    assert len(lines) == 16
    assert lines[0] == "model,train_fraction,mae,rmse"
    assert all(len(line.split(",")) == 4 for line in lines)
    back = read_backtest_report(path)
    assert len(back.rows) == 15
    assert back.get("lasso", 0.8).mae == pytest.approx(1.8)
    assert back.get("vw_lasso", 0.9).error.startswith("DegenerateSeries")
    meta = json.loads(sidecar_path(path).read_text())
    assert meta["config"] == {"a": 1} and len(meta["config_hash"]) == 16 and "version" in meta


def test_empty_report_round_trip(tmp_path):
    path = write_backtest_report(BacktestReport([], {}), tmp_path / "empty.csv")
    assert path.read_text() == "model,train_fraction,mae,rmse\n"
    assert read_backtest_report(path).rows == []


def test_fit_round_trip(tmp_path):
    f = FitResult(1.25, np.array([0.5, 0.0, -2.0]), "vw_lasso", 0.1, np.array([1.0, 0.5, 1.5]), 12)
    path = write_fit(f, ["a", "b", "c"], tmp_path / "fit.json", background_means=[0.0, 1.0, 2.0])
    g, names, doc = read_fit(path)
    assert names == ["a", "b", "c"]
    assert g.coefficients.tolist() == f.coefficients.tolist() and g.intercept == f.intercept
    assert g.weights_used.tolist() == [1.0, 0.5, 1.5] and doc["background_means"] == [0.0, 1.0, 2.0]


def test_weights_round_trip(tmp_path):
    w = weights_from_volatilities(np.array([1.0, 2.0, 4.0]), 1.0)
    path = write_weights(w, ["a", "b", "c"], tmp_path / "w.csv")
    back = read_weights(path, ["c", "a", "b"])
    np.testing.assert_allclose(back.weights, np.round(w.weights[[2, 0, 1]], 6))
    with pytest.raises(MissingColumn):
        read_weights(path, ["a", "z"])
    header, rows = read_csv_rows(path)
    assert header == ["column", "weight", "mean_volatility"] and len(rows) == 3


def test_unit_weights_write(tmp_path):
    path = write_weights(PenaltyWeights.unit(2), ["a", "b"], tmp_path / "u.csv")
    assert read_csv_rows(path)[1] == [["a", "1.000000", "nan"], ["b", "1.000000", "nan"]]


def test_bad_transform_name():
    with pytest.raises(VWLassoError):
        IngestSpec("x.csv", "period", "GDP", transform_per_column={"A": "square"})
