"""Regenerate the bundled synthetic quarterly fixtures in data/.

macro_fixture.csv       1986Q1-2022Q4, GDP plus ten predictors. Four predictors
                        (PCE, GCE, NASDAQ, WTI) move a lot quarter to quarter
                        and carry the signal; the other six are smooth noise.
noiseless_fixture.csv   same predictors, GDP an exact linear function of them.
degenerate_fixture.csv  macro fixture with HOUSING replaced by a straight
                        line (constant first differences).

Values are synthetic; they make no claim about real US data.

    python scripts/make_fixtures.py [--out data]
"""

from __future__ import annotations

import argparse
import math
from pathlib import Path

import numpy as np

from vwlasso.core import Dataset, TimeIndex
from vwlasso.io import write_dataset

SEED = 1986
N = 148  # 1986Q1 .. 2022Q4
SIGNAL = {"PCE": 40.0, "GCE": -25.0, "NASDAQ": 15.0, "WTI": -10.0}
NOISE = ("INFLATION", "HOUSING", "PC", "NET", "UNEMPLOY", "M1")
ORDER = ("INFLATION", "HOUSING", "PC", "PCE", "GCE", "NET", "UNEMPLOY", "M1", "NASDAQ", "WTI")
# (location, scale) giving each column plausible-looking magnitudes
UNITS = {
    "INFLATION": (2.5, 1.0), "HOUSING": (1400.0, 250.0), "PC": (4.0, 2.0), "PCE": (9000.0, 300.0),
    "GCE": (2500.0, 120.0), "NET": (-400.0, 150.0), "UNEMPLOY": (8000.0, 1500.0), "M1": (3000.0, 800.0),
    "NASDAQ": (4000.0, 900.0), "WTI": (55.0, 20.0),
}


def latent_predictors(rng) -> dict:
    out = {}
    for name in ORDER:
        x = np.empty(N)
        if name in SIGNAL:
            omega, alpha, beta = 0.2, 0.15, 0.75
            s2 = omega / (1 - alpha - beta)
            prev, e_prev = 0.0, 0.0
            for t in range(N):
                if t > 0:
                    s2 = omega + alpha * e_prev ** 2 + beta * s2
                e_prev = math.sqrt(s2) * rng.standard_normal()
                prev = 0.3 * prev + e_prev
                x[t] = prev
        else:
            prev = rng.standard_normal()
            for t in range(N):
                prev = 0.95 * prev + 0.3 * rng.standard_normal()
                x[t] = prev
        out[name] = (x - x.mean()) / x.std()
    return out


def build(out_dir: Path) -> None:
    rng = np.random.default_rng(SEED)
    z = latent_predictors(rng)
    raw = {k: np.round(UNITS[k][0] + UNITS[k][1] * z[k], 3) for k in ORDER}
    x = np.column_stack([raw[k] for k in ORDER])
    # GDP responds to the raw columns with these per-unit effects
    beta = np.array([SIGNAL.get(k, 0.0) / UNITS[k][1] for k in ORDER])
    beta = np.round(beta, 3)
    signal = (x - np.array([UNITS[k][0] for k in ORDER])) @ beta
    t = np.arange(1, N + 1)
    vol = 1.0 + (2 * math.pi - 1.0) * (1 + np.sin(2 * math.pi * t / N)) / 2
    eps = np.empty(N)
    prev = 0.0
    for i in range(N):
        prev = 0.5 * prev + 4.0 * vol[i] * rng.standard_normal()
        eps[i] = prev
    index = TimeIndex.quarters(1986, 1, N)
    gdp = np.round(20000.0 + signal + eps, 3)
    write_dataset(Dataset(index, "GDP", gdp, x, ORDER), out_dir / "macro_fixture.csv")

    exact = 20000.0 + x @ beta - float(np.array([UNITS[k][0] for k in ORDER]) @ beta)
    write_dataset(Dataset(index, "GDP", np.round(exact, 6), x, ORDER), out_dir / "noiseless_fixture.csv")

    x_deg = x.copy()
    x_deg[:, ORDER.index("HOUSING")] = 1000.0 + 5.0 * np.arange(N)
    write_dataset(Dataset(index, "GDP", gdp, x_deg, ORDER), out_dir / "degenerate_fixture.csv")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[1] / "data")
    args = ap.parse_args()
    build(args.out)
    print(f"wrote fixtures to {args.out}")


if __name__ == "__main__":
    main()
