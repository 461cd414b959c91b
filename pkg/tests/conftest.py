import numpy as np
import pytest

from fbkinetic.discretize import DiscreteModel
from fbkinetic.krein import decompose

SQRT3 = np.sqrt(3.0)


@pytest.fixture
def coupled2():
    """L = [[2,1],[1,2]], J = diag(1,-1), W = I."""
    return DiscreteModel.from_matrices(np.array([[2.0, 1.0], [1.0, 2.0]]), np.array([1.0, -1.0]))


@pytest.fixture
def coupled2_k(coupled2):
    return decompose(coupled2)


@pytest.fixture
def uncoupled():
    L = np.diag([1.0, 2.0, 3.0, 0.5])
    return DiscreteModel.from_matrices(L, np.array([1.0, 1.0, -1.0, -1.0]))


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results):
        terminalreporter.write_line(results[key])
