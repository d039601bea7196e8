"""Exact fundamental matrices for ``D^alpha x = A x (+ f)``, ``alpha = (2p+1)/(2q+1)``.

With ``g_s = (s - 2q)/(2q+1)``, ``b_s = g_s + 1 = (s+1)/(2q+1)`` and
``B = A**((2q+1)/(2p+1))`` the boundary sum is::

    M(t) = sum_{s=0}^{2q} A**(s/(2p+1)) t**g_s / Gamma(b_s)

and the transition over ``[t_lo, t_hi]`` (``d = t_hi - t_lo``) is::

    Phi = M(t_lo)^-1 [ M(t_hi) + sum_s A**((s+2q+1)/(2p+1)) I_s ]
    I_s = int_{t_lo}^{t_hi} (t_hi - tau)**g_s / Gamma(b_s) expm(B (tau - t_lo)) dtau

``I_s`` is computed either by Gauss-Jacobi quadrature in the weight
``(t_hi - tau)**g_s`` or by integrating the exponential series termwise,
which gives ``sum_k B**k d**(k + b_s) / Gamma(k + 1 + b_s)``.

All fractional factorials are read as ``z! = Gamma(z + 1)``.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.special import roots_jacobi

from .errors import ConvergenceError, FracDiscError, NonPositiveTime
from .matcore import (
    as_matrix,
    gen_factorial,
    identity,
    mat_frac_power,
    mat_inverse,
    real_if_effectively_real,
)
from .problem import FracOrder, ProblemSpec, SeriesControl, Trajectory

log = logging.getLogger(__name__)

METHODS = ("series", "quadrature")


class _Powers:
    """Memoized principal powers of one matrix."""

    def __init__(self, a: np.ndarray):
        self.a = a
        self._cache: dict[Fraction, np.ndarray] = {}

    def __call__(self, r: Fraction) -> np.ndarray:
        m = self._cache.get(r)
        if m is None:
            m = mat_frac_power(self.a, r)
            self._cache[r] = m
        return m


def _boundary(powers: _Powers, order: FracOrder, t: float) -> np.ndarray:
    if not t > 0:
        raise NonPositiveTime(f"boundary terms need t > 0, got {t}")
    p, q = order.p, order.q
    n = powers.a.shape[0]
    out = np.zeros((n, n), dtype=np.complex128)
    for s in range(2 * q + 1):
        g = Fraction(s - 2 * q, 2 * q + 1)
        out += powers(Fraction(s, 2 * p + 1)) * (t ** float(g) / gen_factorial(float(g)))
    return out


def boundary_sum(A, order: FracOrder, t: float) -> np.ndarray:
    """``M(t) = sum_{s=0}^{2q} A**(s/(2p+1)) t**((s-2q)/(2q+1)) / ((s-2q)/(2q+1))!``."""
    return real_if_effectively_real(_boundary(_Powers(as_matrix(A)), order, t))


@lru_cache(maxsize=64)
def _jacobi_rule(n: int, g: Fraction) -> tuple[np.ndarray, np.ndarray]:
    x, w = roots_jacobi(n, float(g), 0.0)
    return x, w


def _check_interval(t_lo: float, t_hi: float) -> None:
    if not t_lo > 0:
        raise NonPositiveTime(f"t_lo must be > 0, got {t_lo}")
    if t_hi < t_lo:
        raise ValueError(f"t_hi={t_hi} precedes t_lo={t_lo}")


def _integral_quadrature(b: np.ndarray, g: Fraction, d: float, nodes: int) -> np.ndarray:
    x, w = _jacobi_rule(nodes, g)
    u = 0.5 * d * (1.0 + x)
    expo = scipy.linalg.expm(b[None, :, :] * u[:, None, None])
    scale = (0.5 * d) ** (float(g) + 1.0) / gen_factorial(float(g))
    return np.tensordot(w, expo, axes=1) * scale


def _integral_series(b: np.ndarray, g: Fraction, d: float, ctrl: SeriesControl) -> np.ndarray:
    beta = float(g) + 1.0
    n = b.shape[0]
    coef = d**beta / math.gamma(1.0 + beta)
    bk = identity(n)
    total = bk * coef
    for k in range(1, ctrl.max_terms):
        coef *= d / (k + beta)
        bk = bk @ b
        term = bk * coef
        total = total + term
        tn = np.linalg.norm(term)
        if tn == 0.0 or tn < ctrl.tail_tol * np.linalg.norm(total):
            return total
    raise ConvergenceError(
        f"exponential series did not reach tail_tol={ctrl.tail_tol:g} in {ctrl.max_terms} terms"
    )


def _fundamental(A, order: FracOrder, t_lo: float, t_hi: float, ctrl, method: str) -> np.ndarray:
    _check_interval(t_lo, t_hi)
    a = as_matrix(A)
    n = a.shape[0]
    if t_hi == t_lo:
        return np.eye(n)
    ctrl = ctrl or SeriesControl()
    powers = _Powers(a)
    p, q = order.p, order.q
    d = t_hi - t_lo
    b = powers(Fraction(2 * q + 1, 2 * p + 1))
    bracket = _boundary(powers, order, t_hi)
    for s in range(2 * q + 1):
        g = Fraction(s - 2 * q, 2 * q + 1)
        if method == "quadrature":
            integral = _integral_quadrature(b, g, d, ctrl.quad_nodes)
        elif method == "series":
            integral = _integral_series(b, g, d, ctrl)
        else:
            raise ValueError(f"unknown method {method!r}")
        bracket += powers(Fraction(s + 2 * q + 1, 2 * p + 1)) @ integral
    prefactor = mat_inverse(_boundary(powers, order, t_lo))
    return real_if_effectively_real(prefactor @ bracket)


def exact_fundamental_quadrature(A, order: FracOrder, t_lo: float, t_hi: float,
                                 ctrl: Optional[SeriesControl] = None) -> np.ndarray:
    """Transition ``Phi(t_hi, t_lo)`` with the integral done by Gauss-Jacobi quadrature.

    The integrable singularity ``(t_hi - tau)**g_s`` at the right endpoint is
    absorbed in the Jacobi weight, so the remaining integrand is entire.
    """
    return _fundamental(A, order, t_lo, t_hi, ctrl, "quadrature")


def exact_fundamental_series(A, order: FracOrder, t_lo: float, t_hi: float,
                             ctrl: Optional[SeriesControl] = None) -> np.ndarray:
    """Transition ``Phi(t_hi, t_lo)`` with the integral expanded termwise.

    Each ``(s, k)`` term is ``A**((s + (k+1)(2q+1))/(2p+1)) d**(k + b_s) /
    Gamma(k + 1 + b_s)``; summation over ``k`` stops once a term's Frobenius
    norm drops below ``tail_tol`` times the partial sum.

    Raises
    ------
    ConvergenceError
        When ``ctrl.max_terms`` terms do not meet the tail criterion.
    """
    return _fundamental(A, order, t_lo, t_hi, ctrl, "series")


def _increment_inner(a_frac: np.ndarray, b: np.ndarray, g: Fraction, d: float,
                     ctrl: SeriesControl) -> np.ndarray:
    # sum_k sum_l (-1)^k A^((s+(k+1)(2q+1))/(2p+1)) B^l d^(l+k+1+b_s)
    #   / (g_s! k! (k+b_s) l! (l+k+1+b_s)), summed by total degree m = k + l.
    beta = float(g) + 1.0
    gfac = gen_factorial(float(g))
    n = b.shape[0]
    bm = identity(n)
    total = np.zeros((n, n), dtype=np.complex128)
    for m in range(ctrl.max_terms):
        if m:
            bm = bm @ b
        inner = 0.0
        for k in range(m + 1):
            l = m - k
            inner += (-1) ** k / (math.factorial(k) * (k + beta) * math.factorial(l))
        e = m + 1 + beta
        term = bm * (inner * d**e / (gfac * e))
        total = total + term
        tn = np.linalg.norm(term)
        if tn == 0.0 or tn < ctrl.tail_tol * np.linalg.norm(total):
            return a_frac @ total
    raise ConvergenceError(
        f"forced-increment series did not reach tail_tol={ctrl.tail_tol:g} in {ctrl.max_terms} terms"
    )


def forced_increment_matrix(A, order: FracOrder, t_lo: float, t_hi: float,
                            ctrl: Optional[SeriesControl] = None) -> np.ndarray:
    """Matrix ``G`` with ``g(t_lo) = G f`` for forcing held constant on the interval."""
    _check_interval(t_lo, t_hi)
    a = as_matrix(A)
    n = a.shape[0]
    if t_hi == t_lo:
        return np.zeros((n, n))
    ctrl = ctrl or SeriesControl()
    powers = _Powers(a)
    p, q = order.p, order.q
    d = t_hi - t_lo
    b = powers(Fraction(2 * q + 1, 2 * p + 1))
    bracket = np.zeros((n, n), dtype=np.complex128)
    for s in range(2 * q + 1):
        g = Fraction(s - 2 * q, 2 * q + 1)
        beta = float(g) + 1.0
        inner = _increment_inner(powers(Fraction(s + 2 * q + 1, 2 * p + 1)), b, g, d, ctrl)
        inner = inner + identity(n) * ((t_hi**beta - t_lo**beta) / gen_factorial(beta))
        bracket += powers(Fraction(s, 2 * p + 1)) @ inner
    prefactor = mat_inverse(_boundary(powers, order, t_lo))
    return real_if_effectively_real(prefactor @ bracket)


def forced_increment(A, order: FracOrder, t_lo: float, t_hi: float, f,
                     ctrl: Optional[SeriesControl] = None) -> np.ndarray:
    """Increment ``g(t_lo)`` added to ``Phi x`` under piecewise-constant forcing ``f``."""
    f = np.asarray(f).reshape(-1)
    G = forced_increment_matrix(A, order, t_lo, t_hi, ctrl)
    if f.shape[0] != G.shape[0]:
        raise ValueError("forcing vector does not match the state dimension")
    return real_if_effectively_real(G @ f)


FUNDAMENTAL = {
    "series": exact_fundamental_series,
    "quadrature": exact_fundamental_quadrature,
}


def _interval_maps(problem: ProblemSpec, method: str, ctrl: SeriesControl, i: int):
    t_lo, t_hi = float(problem.grid[i]), float(problem.grid[i + 1])
    phi = FUNDAMENTAL[method](problem.A, problem.order, t_lo, t_hi, ctrl)
    g = None
    if problem.forcing is not None:
        g = forced_increment(problem.A, problem.order, t_lo, t_hi, problem.forcing.values[i], ctrl)
    return phi, g


def propagate(problem: ProblemSpec, method: str = "series",
              ctrl: Optional[SeriesControl] = None, workers: int = 1) -> Trajectory:
    """Step the exact transitions (and forced increments) across the grid.

    Per-interval maps are independent and may be built on ``workers``
    threads; the state pass is sequential. ``diagnostics["product_check"]``
    compares the stepwise result at ``T`` with the one-shot
    ``Phi(T, t0) x0``; the two need not agree for fractional orders.
    """
    if method not in FUNDAMENTAL:
        raise ValueError(f"method must be one of {METHODS}, got {method!r}")
    ctrl = ctrl or SeriesControl()
    k = problem.steps
    if workers > 1 and k > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            maps = list(pool.map(lambda i: _interval_maps(problem, method, ctrl, i), range(k)))
    else:
        maps = [_interval_maps(problem, method, ctrl, i) for i in range(k)]

    x = np.asarray(problem.x0, dtype=np.result_type(problem.x0, *(m[0] for m in maps)))
    states = [x]
    for phi, g in maps:
        x = phi @ x
        if g is not None:
            x = x + g
        states.append(x)
    states = real_if_effectively_real(np.array(states))

    diagnostics = {}
    if k >= 1:
        diagnostics["product_check"] = _product_check(problem, method, ctrl, states[-1])
    return Trajectory(
        problem.grid.copy(),
        states,
        transitions=[m[0] for m in maps],
        increments=[m[1] for m in maps] if problem.forcing is not None else None,
        diagnostics=diagnostics,
    )


def _product_check(problem: ProblemSpec, method: str, ctrl: SeriesControl, stepwise) -> dict:
    if problem.forcing is not None and not problem.forcing.is_zero():
        return {"note": "skipped: the one-shot map covers the unforced problem only"}
    try:
        one_shot_phi = FUNDAMENTAL[method](problem.A, problem.order, problem.t0, problem.T, ctrl)
    except FracDiscError as exc:
        log.info("one-shot transition failed: %s", exc)
        return {"error": f"{type(exc).__name__}: {exc}"}
    one_shot = real_if_effectively_real(one_shot_phi @ problem.x0)
    return {
        "one_shot_state": one_shot,
        "stepwise_state": np.asarray(stepwise),
        "discrepancy_euclidean": float(np.linalg.norm(np.asarray(stepwise) - one_shot)),
    }
