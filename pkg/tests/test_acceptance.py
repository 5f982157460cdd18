"""Acceptance battery: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest -s tests/test_acceptance.py` to see the lines on the console.
"""

import pytest

from addgrowth import report, suite
from addgrowth.cli import main


@pytest.mark.parametrize("number", sorted(suite.CRITERIA))
def test_criterion(number):
    res = suite.run_criterion(number)
    print("\n" + res.line())
    assert res.rows, "criterion produced no rows"
    assert res.passed, res.detail
    assert res.within_time, f"{res.seconds:.1f}s over the {res.limit:g}s limit"


def test_quick_suite_csvs_are_identical_across_runs(tmp_path):
    dirs = [tmp_path / "a", tmp_path / "b"]
    codes = [main(["paper-suite", "--quick", "--criteria", "4,5,6,7,8", "--out", str(d)]) for d in dirs]
    assert codes[0] == codes[1]
    first = sorted(p.name for p in (dirs[0] / "paper_suite").glob("*.csv"))
    assert first == sorted(p.name for p in (dirs[1] / "paper_suite").glob("*.csv"))
    assert "criterion_05.csv" in first
    for name in first:
        a = report.csv_body(dirs[0] / "paper_suite" / name)
        b = report.csv_body(dirs[1] / "paper_suite" / name)
        print(f"{name}: {'identical' if a == b else 'DIFFERENT'}")
        assert a == b
