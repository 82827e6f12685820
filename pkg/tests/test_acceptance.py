"""One test per acceptance criterion; each prints a PASS/FAIL line with its metrics."""

import pytest

from subdiffrange.acceptance import CRITERIA, run_criterion


@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(number, capsys):
    r = run_criterion(number)
    with capsys.disabled():
        print("\n" + r.line(), flush=True)
    assert r.passed, r.line()
