import numpy as np
import pytest

from adjmm.operator import dense_pair
from adjmm.sampling import MATRIX_STREAM, make_rng


@pytest.fixture
def gauss():
    """Factory for seeded standard normal matrices."""
    def make(m, d, seed=0):
        return make_rng(seed, MATRIX_STREAM).standard_normal((m, d))
    return make


@pytest.fixture
def diag10():
    return dense_pair(np.diag([1.0, 0.0]), np.zeros((2, 2)))


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE

    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
