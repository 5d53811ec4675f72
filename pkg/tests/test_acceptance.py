"""Acceptance criteria, one test each; every verdict is echoed as a PASS/FAIL line.

The lines are printed as they are produced and repeated in the terminal
summary under "acceptance criteria".
"""

import pytest

from hardyhenon.verification import CRITERIA, run_criterion

from conftest import ACCEPTANCE_LINES


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=[f"c{n:02d}_{CRITERIA[n][0].replace(' ', '_')}" for n in sorted(CRITERIA)])
def test_criterion(number):
    result = run_criterion(number)
    line = result.line()
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert result.passed, line
