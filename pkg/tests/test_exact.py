import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.linalg import expm

from fracdisc.errors import ConvergenceError, NonPositiveTime, ValidationError
from fracdisc.exact import (
    boundary_sum,
    exact_fundamental_quadrature,
    exact_fundamental_series,
    forced_increment,
    forced_increment_matrix,
    propagate,
)
from fracdisc.matcore import mat_frac_power
from fracdisc.problem import FracOrder, ProblemSpec, SeriesControl

from conftest import EXAMPLE1_GRID, ROTATION, random_matrix, random_normbounded

THIRD = FracOrder(0, 1)
ONE = FracOrder(0, 0)

# Published transitions for the rotation example; entry (2,1) of the first
# interval is printed with the wrong sign (the matrix must commute with the
# rotation, so it has the form [[a, b], [-b, a]]).
PUBLISHED_EXACT = [
    [[8.253515142e-2, 6.623231589e-2], [-6.6232315e-2, 8.2535151422e-2]],
    [[4.014333789e-1, 3.91934853e-2], [-3.91934853771e-2, 4.014333789e-1]],
    [[3.9781124825e-1, 5.4958790553e-2], [-5.495879055e-2, 3.9781124811e-1]],
    [[3.957906410e-1, 9.46203741871e-2], [-9.46203741873e-2, 3.9579064106e-1]],
    [[4.0040509424e-1, 1.3019825994e-1], [-1.3019825995e-1, 4.0040509421e-1]],
]


# -- boundary sum ------------------------------------------------------------


def test_boundary_alpha_one_is_identity(rng):
    a = random_matrix(rng, 3)
    for t in (0.01, 0.5, 3.0):
        np.testing.assert_array_equal(boundary_sum(a, ONE, t), np.eye(3))


def test_boundary_zero_matrix():
    t = 0.37
    expected = t ** (-2 / 3) / math.gamma(1 / 3)
    np.testing.assert_allclose(boundary_sum(np.zeros((2, 2)), THIRD, t), expected * np.eye(2), rtol=1e-14)


def test_boundary_rotation_eigenvalue_oracle():
    t = 0.21
    m = boundary_sum(ROTATION, THIRD, t)
    for lam, v in [(1j, np.array([1, 1j])), (-1j, np.array([1, -1j]))]:
        scalar = sum(lam**s * t ** ((s - 2) / 3) / math.gamma((s + 1) / 3) for s in range(3))
        np.testing.assert_allclose(m @ v, scalar * v, rtol=1e-14)


def test_boundary_rejects_nonpositive_time():
    with pytest.raises(NonPositiveTime):
        boundary_sum(ROTATION, THIRD, 0.0)


# -- fundamental matrices ----------------------------------------------------


@pytest.mark.parametrize("func", [exact_fundamental_quadrature, exact_fundamental_series])
def test_alpha_one_is_expm(rng, func):
    for n in (2, 3):
        a = random_matrix(rng, n)
        np.testing.assert_allclose(func(a, ONE, 0.3, 0.5), expm(0.2 * a), atol=1e-10)


@pytest.mark.parametrize("func", [exact_fundamental_quadrature, exact_fundamental_series])
def test_zero_matrix_one_third(func):
    phi = func(np.zeros((1, 1)), THIRD, 0.2, 0.45)
    assert phi[0, 0] == pytest.approx((0.45 / 0.2) ** (-2 / 3), rel=1e-12)


@pytest.mark.parametrize("func", [exact_fundamental_quadrature, exact_fundamental_series])
def test_zero_matrix_general_order(func):
    # only the s = 0 boundary term survives: (t_hi/t_lo)**(-2q/(2q+1))
    for p, q in [(1, 2), (2, 1), (0, 2)]:
        phi = func(np.zeros((2, 2)), FracOrder(p, q), 0.2, 0.45)
        np.testing.assert_allclose(phi, (0.45 / 0.2) ** (-2 * q / (2 * q + 1)) * np.eye(2), rtol=1e-12)


@pytest.mark.parametrize("func", [exact_fundamental_quadrature, exact_fundamental_series])
def test_identity_interval(func):
    np.testing.assert_array_equal(func(ROTATION, THIRD, 0.4, 0.4), np.eye(2))


@pytest.mark.parametrize("func", [exact_fundamental_quadrature, exact_fundamental_series])
def test_integer_root_order(func, rng):
    # p = 1, q = 0 (alpha = 3): M = E and Phi = expm(A**(1/3) d)
    a = rng.standard_normal((3, 3))
    a = a @ a.T + 0.5 * np.eye(3)
    b = mat_frac_power(a, Fraction(1, 3))
    np.testing.assert_allclose(func(a, FracOrder(1, 0), 0.1, 0.35), expm(0.25 * b), rtol=1e-9, atol=1e-12)


def test_published_rotation_transitions():
    for (lo, hi), pub in zip(zip(EXAMPLE1_GRID[:-1], EXAMPLE1_GRID[1:]), PUBLISHED_EXACT):
        np.testing.assert_allclose(exact_fundamental_series(ROTATION, THIRD, lo, hi), pub, atol=5e-10)
        np.testing.assert_allclose(exact_fundamental_quadrature(ROTATION, THIRD, lo, hi), pub, atol=5e-10)


def test_series_quadrature_agree_random(rng):
    orders = [THIRD, FracOrder(0, 2), FracOrder(1, 2)]
    done = 0
    while done < 12:
        order = orders[done % 3]
        a = random_normbounded(rng, rng.integers(2, 4), bound=2.0)
        if order.p and any(l.real <= 0 and abs(l.imag) < 1e-3 for l in np.linalg.eigvals(a)):
            continue
        lo = rng.uniform(0.05, 1.0)
        hi = lo + rng.uniform(0.05, 0.25)
        s = exact_fundamental_series(a, order, lo, hi)
        qd = exact_fundamental_quadrature(a, order, lo, hi)
        assert np.max(np.abs(s - qd)) <= 1e-6
        done += 1


def test_quadrature_node_doubling():
    a = np.array([[0.3, 1.2], [-0.8, -0.4]])
    for order in (THIRD, FracOrder(0, 3)):
        coarse = exact_fundamental_quadrature(a, order, 0.1, 0.35, SeriesControl(quad_nodes=64))
        fine = exact_fundamental_quadrature(a, order, 0.1, 0.35, SeriesControl(quad_nodes=128))
        assert np.linalg.norm(coarse - fine) < 1e-8


def test_series_convergence_error():
    with pytest.raises(ConvergenceError):
        exact_fundamental_series(ROTATION * 3, THIRD, 0.1, 2.0, SeriesControl(max_terms=3))


def test_rejects_nonpositive_start():
    with pytest.raises(NonPositiveTime):
        exact_fundamental_series(ROTATION, THIRD, 0.0, 0.2)


# -- forced increment --------------------------------------------------------


def test_forced_zero():
    np.testing.assert_array_equal(forced_increment(ROTATION, THIRD, 0.1, 0.3, [0.0, 0.0]), [0.0, 0.0])


def test_forced_alpha_one_zoh(rng):
    for n in (2, 3):
        a = random_matrix(rng, n)
        f = rng.standard_normal(n)
        zoh = np.linalg.solve(a, (expm(0.2 * a) - np.eye(n)) @ f)
        np.testing.assert_allclose(forced_increment(a, ONE, 0.4, 0.6, f), zoh, atol=1e-8)


def test_forced_linear(rng):
    a = random_matrix(rng, 3)
    f1, f2 = rng.standard_normal(3), rng.standard_normal(3)
    g = lambda f: forced_increment(a, THIRD, 0.2, 0.4, f)  # noqa: E731
    np.testing.assert_allclose(g(f1 + f2), g(f1) + g(f2), atol=1e-12)
    np.testing.assert_allclose(g(2.5 * f1), 2.5 * g(f1), atol=1e-12)


def test_forced_double_series_matches_collapsed_form():
    # The alternating k-sum collapses through the Beta integral:
    # sum_k (-1)^k / (k! (k+b) (m-k)!) = Gamma(b) / Gamma(m+1+b).
    a, lo, hi = ROTATION, 0.21, 0.41
    d = hi - lo
    b_mat = np.linalg.matrix_power(a, 3)
    bracket = np.zeros((2, 2))
    for s in range(3):
        g = (s - 2) / 3
        beta = g + 1
        inner = sum(
            np.linalg.matrix_power(b_mat, m) * d ** (m + 1 + beta) / ((m + 1 + beta) * math.gamma(m + 1 + beta))
            for m in range(40)
        )
        inner = np.linalg.matrix_power(a, s + 3) @ inner
        inner = inner + np.eye(2) * (hi**beta - lo**beta) / math.gamma(beta + 1)
        bracket = bracket + np.linalg.matrix_power(a, s) @ inner
    m_lo = sum(np.linalg.matrix_power(a, s) * lo ** ((s - 2) / 3) / math.gamma((s + 1) / 3) for s in range(3))
    expected = np.linalg.solve(m_lo, bracket)
    np.testing.assert_allclose(forced_increment_matrix(a, THIRD, lo, hi), expected, atol=1e-12)


# -- propagation -------------------------------------------------------------


def test_propagate_zero_steps():
    prob = ProblemSpec.uniform(ROTATION, [1.0, 2.0], THIRD, 0.5, 0.5, 0)
    tr = propagate(prob)
    assert len(tr) == 1
    np.testing.assert_array_equal(tr.states[0], [1.0, 2.0])


@pytest.mark.parametrize("method", ["series", "quadrature"])
def test_propagate_alpha_one(method):
    x0 = np.array([1.0, 2.0])
    prob = ProblemSpec.uniform(ROTATION, x0, ONE, 0.1, 2.1, 10)
    tr = propagate(prob, method)
    for t, x in zip(tr.times, tr.states):
        np.testing.assert_allclose(x, expm(ROTATION * (t - 0.1)) @ x0, atol=1e-8)
    assert tr.diagnostics["product_check"]["discrepancy_euclidean"] < 1e-8


def test_propagate_example1_states():
    prob = ProblemSpec.uniform(ROTATION, [1.0, 2.0], THIRD, 0.01, 1.01, 5)
    tr = propagate(prob)
    published = [[1, 2], [0.21, 0.098], [0.091, 0.031], [0.037, 0.0079], [0.01, -0.0005], [0.006, -0.0022]]
    # published states carry two significant digits
    np.testing.assert_allclose(tr.states, published, atol=6e-3)
    np.testing.assert_allclose(tr.states[1], [0.214999783208, 0.098837986951], atol=1e-11)
    # stepwise and one-shot propagation differ for this fractional system
    assert tr.diagnostics["product_check"]["discrepancy_euclidean"] > 1e-3


def test_propagate_zero_forcing_bitwise():
    base = ProblemSpec.uniform(ROTATION, [1.0, 2.0], THIRD, 0.01, 1.01, 5)
    forced = ProblemSpec.uniform(ROTATION, [1.0, 2.0], THIRD, 0.01, 1.01, 5, forcing=np.zeros((5, 2)))
    np.testing.assert_array_equal(propagate(forced).states, propagate(base).states)


def test_propagate_forced_alpha_one():
    a = np.array([[-1.0, 0.5], [0.0, -2.0]])
    f = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, -1.0]])
    prob = ProblemSpec.uniform(a, [1.0, 1.0], ONE, 0.2, 0.8, 3, forcing=f)
    tr = propagate(prob)
    x = np.array([1.0, 1.0])
    ed = expm(0.2 * a)
    for i in range(3):
        x = ed @ x + np.linalg.solve(a, (ed - np.eye(2)) @ f[i])
        np.testing.assert_allclose(tr.states[i + 1], x, atol=1e-10)
    assert "note" in tr.diagnostics["product_check"]


def test_propagate_nonuniform_grid():
    prob = ProblemSpec(ROTATION, [1.0, 2.0], THIRD, 0.1, 1.0, [0.1, 0.15, 0.4, 1.0])
    tr = propagate(prob)
    assert tr.states.shape == (4, 2)
    np.testing.assert_allclose(tr.transitions[1], exact_fundamental_series(ROTATION, THIRD, 0.15, 0.4))


def test_propagate_threads_deterministic():
    prob = ProblemSpec.uniform(ROTATION, [1.0, 2.0], THIRD, 0.01, 1.01, 5)
    np.testing.assert_array_equal(propagate(prob, workers=4).states, propagate(prob).states)


def test_transitions_vary_on_uniform_grid():
    tr = propagate(ProblemSpec.uniform(ROTATION, [1.0, 2.0], THIRD, 0.01, 1.01, 5))
    assert np.linalg.norm(tr.transitions[0] - tr.transitions[1]) > 0.1


def test_problem_validation():
    with pytest.raises(ValidationError):
        ProblemSpec.uniform(ROTATION, [1.0, 2.0], THIRD, 0.0, 1.0, 5)
    with pytest.raises(ValidationError):
        ProblemSpec.uniform(ROTATION, [1.0], THIRD, 0.1, 1.0, 5)
    with pytest.raises(ValidationError):
        ProblemSpec(ROTATION, [1.0, 2.0], THIRD, 0.1, 1.0, [0.1, 0.5, 0.4, 1.0])
    with pytest.raises(ValidationError):
        ProblemSpec.uniform(ROTATION, [1.0, 2.0], THIRD, 0.1, 1.0, 2, forcing=[[1.0, 0.0]])
    with pytest.raises(ValidationError):
        FracOrder(5, 0)
    with pytest.raises(ValidationError):
        FracOrder(0, 0.5)
    with pytest.raises(ValidationError):
        SeriesControl(max_terms=501)
    with pytest.raises(ValidationError):
        SeriesControl(quad_nodes=2)
    with pytest.raises(ValidationError):
        SeriesControl(tail_tol=0.1)
