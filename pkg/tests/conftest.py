import numpy as np
import pytest

from accelode import problems


@pytest.fixture(scope="session")
def kappa100():
    """Rotated d=50 quadratic with spectrum in [1, 100]."""
    return problems.random_quadratic(50, 1.0, 100.0, seed=7)


@pytest.fixture(scope="session")
def x0_50():
    return 3.0 * np.random.default_rng(11).standard_normal(50)


@pytest.fixture(scope="session")
def ridge30():
    return problems.ridge_l1_problem(30, alpha=1.0, lipschitz=100.0, weight=0.1, seed=3)


@pytest.fixture(scope="session")
def box20():
    return problems.box_quadratic_problem(20, alpha=1.0, lipschitz=100.0, seed=5)


@pytest.fixture(scope="session")
def banded100():
    return problems.banded_quadratic(100, bandwidth=3, seed=2)


def scalar_quadratic(lam=1.0, center=0.0):
    """``f(x) = lam/2 (x - center)^2`` in one dimension."""
    return problems.quadratic_from_spectrum([lam], [lam * center], constant=0.5 * lam * center ** 2)


def pytest_terminal_summary(terminalreporter):
    import test_acceptance

    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(line)
