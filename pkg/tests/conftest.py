import numpy as np
import pytest

from fracdnn.data import one_hot
from fracdnn.network import xavier_init


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_problem(rng):
    """Seeded 2-feature, 2-class, 5-layer network on 10 random samples."""
    params = xavier_init(7, 2, 2, 5)
    params.b[:] = 0.3 * rng.standard_normal(5)
    Y0 = rng.standard_normal((2, 10))
    C = one_hot(rng.integers(0, 2, 10), 2)
    return params, Y0, C


def pytest_terminal_summary(terminalreporter):
    from tests.test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
