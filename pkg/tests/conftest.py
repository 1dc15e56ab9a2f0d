import numpy as np
import pytest

from pielm_pile.experiments import table1_problem


@pytest.fixture
def problem():
    return table1_problem()


@pytest.fixture(params=["free_free", "fixed_fixed", "free_top_fixed_tip"])
def any_bc_problem(request):
    return table1_problem(request.param)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# Acceptance criteria register their verdicts here; the terminal summary
# prints one line per criterion.
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
