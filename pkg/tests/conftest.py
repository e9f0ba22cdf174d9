from pathlib import Path

import hypothesis
import numpy as np
import pytest

from vwlasso.core import Dataset, standardize

hypothesis.settings.register_profile("ci", max_examples=60, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=10, deadline=None)
hypothesis.settings.load_profile("ci")

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data"
GOLDEN = Path(__file__).resolve().parent / "golden"

_acceptance_lines = []


@pytest.fixture(scope="session")
def acceptance_log():
    """Collects one PASS/FAIL line per acceptance criterion, echoed in the terminal summary."""
    return _acceptance_lines


def pytest_terminal_summary(terminalreporter):
    if _acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in _acceptance_lines:
            terminalreporter.write_line(line)


def random_problem(seed: int, n: int, p: int, sparsity: float = 0.5, noise: float = 1.0, standardized=True):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p)) @ (np.eye(p) + 0.3 * rng.standard_normal((p, p)))
    beta = rng.uniform(-2, 2, p) * (rng.uniform(size=p) > sparsity)
    y = x @ beta + noise * rng.standard_normal(n)
    d = Dataset.from_arrays(x, y)
    return standardize(d)[0] if standardized else d


@pytest.fixture(scope="session")
def macro_csv():
    return DATA / "macro_fixture.csv"


@pytest.fixture(scope="session")
def noiseless_csv():
    return DATA / "noiseless_fixture.csv"


@pytest.fixture(scope="session")
def degenerate_csv():
    return DATA / "degenerate_fixture.csv"
