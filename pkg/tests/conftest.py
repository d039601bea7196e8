import numpy as np
import pytest


def random_matrix(rng, n, radius=2.0):
    """Random real n x n matrix scaled to the given spectral radius."""
    a = rng.standard_normal((n, n))
    rho = max(abs(np.linalg.eigvals(a)))
    return a * (radius * rng.uniform(0.3, 1.0) / rho)


def random_normbounded(rng, n, bound=2.0):
    a = rng.standard_normal((n, n))
    return a * (bound * rng.uniform(0.3, 1.0) / np.linalg.norm(a, 2))


@pytest.fixture
def rng():
    return np.random.default_rng(20181)


ROTATION = np.array([[0.0, 1.0], [-1.0, 0.0]])
EXAMPLE1_GRID = [0.01 + 0.2 * i for i in range(6)]


# PASS/FAIL lines from the acceptance module, echoed after the run
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
