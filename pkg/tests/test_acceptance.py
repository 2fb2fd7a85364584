"""All thirteen acceptance criteria at their stated tolerances and runtime budgets.

Each test prints one PASS/FAIL line; conftest repeats all of them in the
terminal summary so they survive output capture.
"""

import pytest

from qmegs.acceptance import CRITERIA, run_criterion

LINES = {}


@pytest.mark.parametrize("number", sorted(CRITERIA), ids=lambda n: f"criterion_{n:02d}")
def test_criterion(number):
    result = run_criterion(number)
    LINES[number] = result.line()
    print(result.line())
    assert result.passed, result.line()
