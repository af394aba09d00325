import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from accelode import problems
from accelode.errors import DimensionError, InvalidBoxError, InvalidSpectrumError, NonConvergenceError

from conftest import scalar_quadratic

# grid used as an independent minimizer oracle for 1-D prox objectives
GRID = np.linspace(-5.0, 5.0, 1_000_001)


def all_smooth_instances():
    out = [
        problems.random_quadratic(12, 1.0, 100.0, seed=0),
        problems.random_quadratic(8, 0.5, 4.0, seed=1, spacing="geometric"),
        problems.ridge_l1_problem(10, 1.0, 50.0, seed=2).smooth,
        problems.box_quadratic_problem(6, 2.0, 30.0, seed=3).smooth,
        problems.banded_quadratic(15, bandwidth=5, seed=4).base,
    ]
    return out


# quadratic_from_spectrum


def test_identity_quadratic():
    q = problems.quadratic_from_spectrum([1.0], [0.0])
    assert q.alpha == q.lipschitz == 1.0
    assert q.value(np.array([3.0])) == pytest.approx(4.5)
    np.testing.assert_array_equal(q.minimizer, [0.0])


def test_unit_spectrum_minimizer_is_linear_term():
    q = problems.quadratic_from_spectrum([1.0, 1.0], [1.0, 2.0])
    np.testing.assert_allclose(q.minimizer, [1.0, 2.0])


def test_value_and_gradient_against_matrix_arithmetic():
    A = np.diag([1.0, 100.0])
    x = np.array([1.0, 1.0])
    q = problems.quadratic_from_spectrum([1.0, 100.0], [0.0, 0.0])
    assert q.value(x) == pytest.approx(0.5 * x @ A @ x) == pytest.approx(50.5)
    np.testing.assert_allclose(q.gradient(x), A @ x)
    np.testing.assert_allclose(q.gradient(x), [1.0, 100.0])


def test_rotated_spectrum_is_exact():
    lam = np.array([0.5, 1.0, 3.0, 7.0, 20.0])
    q = problems.quadratic_from_spectrum(lam, np.ones(5), rotation_seed=4)
    np.testing.assert_allclose(np.linalg.eigvalsh(q.hessian), lam, rtol=1e-12)
    assert (q.alpha, q.lipschitz) == (0.5, 20.0)
    np.testing.assert_allclose(q.gradient(q.minimizer), 0.0, atol=1e-12)


def test_spectrum_errors():
    with pytest.raises(InvalidSpectrumError):
        problems.quadratic_from_spectrum([0.0, 1.0], [0.0, 0.0])
    with pytest.raises(InvalidSpectrumError):
        problems.quadratic_from_spectrum([-1.0], [0.0])
    with pytest.raises(InvalidSpectrumError):
        problems.quadratic_from_spectrum([2.0, 1.0], [0.0, 0.0])
    with pytest.raises(DimensionError):
        problems.quadratic_from_spectrum([1.0, 2.0], [0.0])


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_rayleigh_quotients_within_spectrum(seed):
    lam = problems.spectrum(30, 1.0, 100.0)
    q = problems.quadratic_from_spectrum(lam, np.zeros(30), rotation_seed=seed)
    u = np.random.default_rng(seed).standard_normal((2000, 30))
    rq = np.einsum("ij,jk,ik->i", u, q.hessian, u) / np.einsum("ij,ij->i", u, u)
    assert rq.min() >= lam[0] * (1 - 1e-12)
    assert rq.max() <= lam[-1] * (1 + 1e-12)


# oracle invariants


@pytest.mark.parametrize("k", range(5))
def test_strong_convexity_and_smoothness_on_random_pairs(k):
    f = all_smooth_instances()[k]
    rng = np.random.default_rng(100 + k)
    for _ in range(1000):
        x, y = 3 * rng.standard_normal((2, f.dimension))
        lower = f.value(y) + f.gradient(y) @ (x - y) + 0.5 * f.alpha * (x - y) @ (x - y)
        assert f.value(x) >= lower - 1e-10 * (1 + abs(lower))
        gdiff = np.linalg.norm(f.gradient(x) - f.gradient(y))
        assert gdiff <= f.lipschitz * np.linalg.norm(x - y) * (1 + 1e-10)


@pytest.mark.parametrize("k", range(5))
def test_gradient_matches_central_differences(k):
    f = all_smooth_instances()[k]
    rng = np.random.default_rng(k)
    h = 1e-5
    for _ in range(5):
        x = rng.standard_normal(f.dimension)
        fd = np.array([(f.value(x + h * e) - f.value(x - h * e)) / (2 * h) for e in np.eye(f.dimension)])
        g = f.gradient(x)
        assert np.linalg.norm(fd - g) <= 1e-6 * np.linalg.norm(g)


@pytest.mark.parametrize("k", range(5))
def test_minimizer_is_stationary(k):
    f = all_smooth_instances()[k]
    if f.minimizer is not None:
        assert np.linalg.norm(f.gradient(f.minimizer)) <= 1e-9


def test_alpha_above_lipschitz_rejected():
    q = scalar_quadratic()
    with pytest.raises(ValueError):
        problems.SmoothOracle(1, 2.0, 1.0, q.value, q.gradient)


def test_excess_agrees_with_value_difference():
    q = problems.random_quadratic(10, 1.0, 10.0, seed=3)
    x = np.random.default_rng(0).standard_normal(10)
    assert q.excess(x) == pytest.approx(q.value(x) - q.min_value, rel=1e-10)


# prox maps


def test_prox_l1_zero_is_fixed():
    for s, mu in [(0.1, 1.0), (1.0, 5.0), (3.0, 0.0)]:
        np.testing.assert_array_equal(problems.prox_l1(np.array([0.0]), s, mu), [0.0])


def test_prox_l1_examples_against_grid_search():
    # minimizers of |y| + (y - x)^2 / 2 found on GRID: 1.0 for x=2, 0.0 for x=-0.5
    for x, expected in [(2.0, 1.0), (-0.5, 0.0)]:
        grid_min = GRID[np.argmin(np.abs(GRID) + (GRID - x) ** 2 / 2)]
        assert grid_min == pytest.approx(expected, abs=1e-5)
        assert problems.prox_l1(np.array([x]), 1.0, 1.0)[0] == pytest.approx(expected, abs=1e-15)


@settings(max_examples=200, deadline=None)
@given(x=st.floats(-4, 4), s=st.floats(0.01, 3), mu=st.floats(0, 2))
def test_prox_l1_beats_grid(x, s, mu):
    grid = np.linspace(-5, 5, 10_001)
    obj = lambda y: mu * np.abs(y) + (y - x) ** 2 / (2 * s)
    p = problems.prox_l1(np.array([x]), s, mu)[0]
    assert obj(p) <= obj(grid).min() + 1e-12


@settings(max_examples=200, deadline=None)
@given(x=st.floats(-4, 4), lo=st.floats(-3, 3), width=st.floats(0, 3), s=st.floats(0.01, 10))
def test_prox_box_beats_grid(x, lo, width, s):
    hi = lo + width
    grid = np.linspace(lo, hi, 10_001)
    p = problems.prox_box(np.array([x]), [lo], [hi], s)[0]
    assert lo <= p <= hi
    assert (p - x) ** 2 <= ((grid - x) ** 2).min() + 1e-12
    # the projection does not depend on the scale
    assert p == problems.prox_box(np.array([x]), [lo], [hi], 1.0)[0]


def test_prox_box_examples():
    x = np.array([0.2, 0.7])
    np.testing.assert_array_equal(problems.prox_box(x, [0, 0], [1, 1]), x)
    np.testing.assert_array_equal(problems.prox_box(np.array([3.0]), [0.0], [1.0]), [1.0])
    np.testing.assert_array_equal(problems.prox_box(np.array([-2.0, 0.5]), [0, 0], [1, 1]), [0.0, 0.5])


def test_prox_box_rejects_inverted_box():
    with pytest.raises(InvalidBoxError):
        problems.prox_box(np.array([0.0]), [1.0], [0.0])
    with pytest.raises(InvalidBoxError):
        problems.box_term([1.0], [0.0])


def test_zero_prox_is_identity():
    x = np.random.default_rng(0).standard_normal(7)
    np.testing.assert_array_equal(problems.ZERO.prox(x, 0.37), x)


# reference_minimizer


def test_reference_minimizer_closed_form():
    q = problems.quadratic_from_spectrum([1.0, 1.0], [1.0, 2.0])
    xs, fs = problems.reference_minimizer(q)
    np.testing.assert_allclose(xs, [1.0, 2.0])
    assert fs == pytest.approx(-2.5)
    xs, fs = problems.reference_minimizer(scalar_quadratic())
    assert (xs[0], fs) == (0.0, 0.0)


def scalar_composite():
    """``g = (x - 2)^2 / 2``, ``h = |x|``."""
    return problems.CompositeOracle(scalar_quadratic(1.0, 2.0), problems.l1_term(1.0))


def test_reference_minimizer_composite_against_grid():
    comp = scalar_composite()
    F = 0.5 * (GRID - 2) ** 2 + np.abs(GRID)
    assert GRID[np.argmin(F)] == pytest.approx(1.0, abs=1e-5)
    assert F.min() == pytest.approx(1.5, abs=1e-9)
    xs, fs = problems.reference_minimizer(comp)
    assert xs[0] == pytest.approx(1.0, abs=1e-9)
    assert fs == pytest.approx(1.5, abs=1e-12)


@pytest.mark.parametrize("make", [
    lambda: problems.ridge_l1_problem(30, 1.0, 100.0, 0.1, seed=3),
    lambda: problems.box_quadratic_problem(20, 1.0, 100.0, seed=5),
])
def test_reference_minimizer_residual(make):
    comp = make()
    xs, fs = problems.reference_minimizer(comp, tolerance=1e-10)
    assert np.linalg.norm(problems.gradient_mapping(comp, xs)) <= 1e-10
    assert comp.value(xs) == pytest.approx(fs)
    # no sampled feasible point does better
    rng = np.random.default_rng(0)
    for _ in range(200):
        z = comp.nonsmooth.project(xs + 0.1 * rng.standard_normal(comp.dimension))
        assert comp.value(z) >= fs - 1e-12


def test_reference_minimizer_budget_exhausted():
    comp = problems.ridge_l1_problem(10, 1.0, 100.0, seed=0)
    with pytest.raises(NonConvergenceError) as info:
        problems.reference_minimizer(comp, tolerance=1e-14, max_iter=20)
    assert info.value.residual > 0


def test_box_problem_minimizer_on_boundary(box20):
    xs, _ = problems.reference_minimizer(box20)
    assert np.any(np.isclose(np.abs(xs), 0.5))
    assert np.all(np.abs(xs) <= 0.5)


# coordinate access


@pytest.mark.parametrize("make", [
    lambda: problems.coordinate_oracle(problems.random_quadratic(9, 1.0, 20.0, seed=1)),
    lambda: problems.banded_quadratic(40, bandwidth=3, seed=0),
    lambda: problems.banded_quadratic(40, bandwidth=5, seed=1),
])
def test_coordinate_partials_and_lipschitz(make):
    co = make()
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = rng.standard_normal(co.dimension)
        g = co.gradient(x)
        for i in rng.integers(0, co.dimension, 5):
            assert abs(co.partial(x, i) - g[i]) <= 1e-12 * max(1.0, abs(g[i]))
            c = rng.standard_normal()
            moved = x.copy()
            moved[i] += c
            assert abs(co.partial(moved, i) - co.partial(x, i)) <= co.coord_lipschitz[i] * abs(c) * (1 + 1e-12)


def test_banded_dependencies():
    co = problems.banded_quadratic(20, bandwidth=3, seed=0)
    assert all(len(d) <= 2 for d in co.dependencies)
    np.testing.assert_array_equal(co.dependencies[5], [4, 6])
    with pytest.raises(ValueError):
        problems.banded_quadratic(10, bandwidth=4)
