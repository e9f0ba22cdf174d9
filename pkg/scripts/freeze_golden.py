"""Regenerate tests/golden/backtest_report.csv from data/macro_fixture.csv.

Only rerun this after an intentional change to the backtest numbers; the
golden file is what the test suite byte-compares against.

    python scripts/freeze_golden.py
"""

import shutil
import sys
import tempfile
from pathlib import Path

from vwlasso.cli import main

ROOT = Path(__file__).resolve().parents[1]


def freeze() -> Path:
    dest = ROOT / "tests" / "golden" / "backtest_report.csv"
    with tempfile.TemporaryDirectory() as tmp:
        code = main(["backtest", "--input", str(ROOT / "data" / "macro_fixture.csv"), "--out", tmp, "--threads", "1"])
        if code != 0:
            sys.exit(code)
        dest.parent.mkdir(parents=True, exist_ok=True)
        shutil.copyfile(Path(tmp) / "backtest_report.csv", dest)
    return dest


if __name__ == "__main__":
    print(f"froze {freeze()}")
