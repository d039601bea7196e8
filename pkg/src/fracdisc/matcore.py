"""Dense complex matrix kernel and special functions.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.
Fractional exponents are :class:`fractions.Fraction` instances, which keep
them in lowest terms.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational as _RationalABC

import numpy as np
import scipy.linalg

from .errors import (
    BranchCutError,
    ConvergenceError,
    DimensionMismatch,
    NotDiagonalizable,
    PoleError,
    SingularMatrix,
)

Rational = Fraction

POLE_TOL = 1e-12
PIVOT_TOL = 1e-13
BRANCH_TOL = 1e-12
RECON_TOL = 1e-9
# Eigenvector bases worse conditioned than this are treated as defective.
MAX_EIG_COND = 1e12
ML_TOL = 1e-16
ML_MAX_TERMS = 10_000


# -- special functions -------------------------------------------------------


def _check_pole(x: float) -> None:
    if x <= 0.0 and abs(x - round(x)) < POLE_TOL:
        raise PoleError(f"Gamma has a pole at {x!r}")


def gamma_fn(x: float) -> float:
    """Gamma function on the real line.

    Raises
    ------
    PoleError
        If ``x`` lies within 1e-12 of a nonpositive integer.
    """
    x = float(x)
    _check_pole(x)
    return math.gamma(x)


def gen_factorial(x: float) -> float:
    """Generalized factorial ``x! = Gamma(x + 1)``."""
    return gamma_fn(float(x) + 1.0)


def frac_binomial(alpha: float, i: int) -> float:
    """Binomial coefficient ``alpha (alpha-1) ... (alpha-i+1) / i!``."""
    if i < 0:
        raise ValueError("i must be nonnegative")
    num = 1.0
    for j in range(i):
        num *= alpha - j
    return num / math.factorial(i)


# -- matrix helpers ----------------------------------------------------------


def as_matrix(a) -> np.ndarray:
    """Return ``a`` as a finite square complex matrix."""
    m = np.array(a, dtype=np.complex128)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    return m


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.complex128)


def is_effectively_real(m: np.ndarray, tol: float = 1e-9) -> bool:
    m = np.asarray(m)
    if not np.iscomplexobj(m) or m.size == 0:
        return True
    return float(np.max(np.abs(m.imag))) <= tol * (1.0 + float(np.max(np.abs(m.real))))


def real_if_effectively_real(m: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Drop the imaginary part when it is round-off only."""
    if np.iscomplexobj(m) and is_effectively_real(m, tol):
        return np.ascontiguousarray(np.asarray(m).real)
    return np.asarray(m)


@dataclass(frozen=True)
class EigenDecomposition:
    values: np.ndarray
    vectors: np.ndarray
    cond: float

    def reconstruct(self) -> np.ndarray:
        v = self.vectors
        return (v * self.values) @ np.linalg.inv(v)

    def apply(self, func) -> np.ndarray:
        """Return ``V diag(func(values)) V^-1``."""
        v = self.vectors
        vals = np.array([func(lam) for lam in self.values], dtype=np.complex128)
        return (v * vals) @ np.linalg.inv(v)


def eig_decompose(a) -> EigenDecomposition:
    """Eigendecomposition with deterministic ordering.

    Eigenvalues are sorted by descending real part, ties broken by
    descending imaginary part.

    Raises
    ------
    NotDiagonalizable
        When the eigenvector basis is numerically singular or the
        reconstruction residual exceeds ``1e-9 (1 + ||A||_F)``.
    """
    a = as_matrix(a)
    vals, vecs = np.linalg.eig(a)
    order = sorted(
        range(len(vals)),
        key=lambda j: (-round(vals[j].real, 12), -round(vals[j].imag, 12)),
    )
    vals = vals[order]
    vecs = vecs[:, order]
    cond = float(np.linalg.cond(vecs))
    if not np.isfinite(cond) or cond > MAX_EIG_COND:
        raise NotDiagonalizable(f"eigenvector basis is singular (cond={cond:.3g})")
    dec = EigenDecomposition(vals, vecs, cond)
    normA = np.linalg.norm(a)
    resid = np.linalg.norm(dec.reconstruct() - a)
    if resid > RECON_TOL * (1.0 + normA):
        raise NotDiagonalizable(f"reconstruction residual {resid:.3g} too large")
    return dec


def mat_inverse(a) -> np.ndarray:
    """Inverse via LU with partial pivoting.

    Raises
    ------
    SingularMatrix
        If some pivot is below ``1e-13 ||A||_F`` in magnitude.
    """
    a = as_matrix(a)
    n = a.shape[0]
    norm = np.linalg.norm(a)
    if norm == 0.0:
        raise SingularMatrix("zero matrix")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_TOL * norm:
        raise SingularMatrix(
            f"pivot {pivots.min():.3g} below {PIVOT_TOL:g}*||A|| = {PIVOT_TOL * norm:.3g}"
        )
    return scipy.linalg.lu_solve((lu, piv), identity(n), check_finite=False)


def mat_exp(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring (Pade approximant)."""
    return scipy.linalg.expm(as_matrix(a))


def _as_fraction(r) -> Fraction:
    if isinstance(r, Fraction):
        return r
    if isinstance(r, (int, _RationalABC)):
        return Fraction(r)
    if isinstance(r, tuple):
        return Fraction(*r)
    raise TypeError(f"exponent must be rational, got {type(r).__name__}")


def _on_negative_axis(lam: complex) -> bool:
    if lam.real <= 0.0:
        return abs(lam.imag) < BRANCH_TOL
    return abs(lam) < BRANCH_TOL


def mat_frac_power(a, r) -> np.ndarray:
    """Principal power ``A**r`` for rational ``r``.

    Integer exponents use repeated multiplication (a negative exponent
    inverts first) and never touch the eigendecomposition; ``A**0`` is the
    identity even for singular ``A``. Non-integer exponents are evaluated
    as ``V diag(lam**r) V^-1`` on the principal branch, with ``0**r = 0``
    for positive ``r``.

    Raises
    ------
    NotDiagonalizable
    BranchCutError
        For a non-integer power of an eigenvalue on the negative real axis,
        or of a zero eigenvalue when ``r < 0``.
    """
    a = as_matrix(a)
    r = _as_fraction(r)
    if r.denominator == 1:
        k = r.numerator
        if k == 0:
            return identity(a.shape[0])
        if k < 0:
            a, k = mat_inverse(a), -k
        return np.linalg.matrix_power(a, k)
    dec = eig_decompose(a)
    for lam in dec.values:
        lam = complex(lam)
        if r > 0 and abs(lam) < BRANCH_TOL:
            continue  # 0**r = 0 for r > 0
        if _on_negative_axis(lam):
            raise BranchCutError(
                f"eigenvalue {lam:.6g} lies on the branch cut for power {r}"
            )
    ex = float(r)

    def power(lam):
        if abs(lam) < BRANCH_TOL:
            return 0j
        return cmath.exp(ex * cmath.log(lam))

    return dec.apply(power)


# -- Mittag-Leffler ----------------------------------------------------------


def _ml_term(alpha: float, beta: float, log_z: complex, k: int) -> complex:
    arg = alpha * k + beta
    if arg <= 0.0 and abs(arg - round(arg)) < POLE_TOL:
        return 0j  # 1/Gamma vanishes at the poles
    if arg > 0.0:
        return cmath.exp(k * log_z - math.lgamma(arg))
    return cmath.exp(k * log_z) / math.gamma(arg)


def mittag_leffler(alpha: float, beta: float, z: complex) -> complex:
    """Two-parameter Mittag-Leffler function by direct power series.

    The series ``sum z**k / Gamma(alpha k + beta)`` is summed until two
    consecutive terms fall below ``1e-16 |partial sum|``. Only meant for
    moderate arguments (``|z| <= 5``); cancellation ruins it far outside.

    Raises
    ------
    ConvergenceError
        If 10**4 terms are not enough.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    z = complex(z)
    if z == 0:
        arg = float(beta)
        if arg <= 0 and abs(arg - round(arg)) < POLE_TOL:
            return 0j
        return complex(1.0 / math.gamma(arg))
    log_z = cmath.log(z)
    total = 0j
    small = 0
    for k in range(ML_MAX_TERMS):
        try:
            term = _ml_term(alpha, beta, log_z, k)
        except OverflowError as exc:
            raise ConvergenceError(f"Mittag-Leffler series overflowed at term {k}") from exc
        total += term
        if abs(term) < ML_TOL * abs(total) or term == 0 and k > 0:
            small += 1
            if small >= 2:
                return total
        else:
            small = 0
    raise ConvergenceError(f"Mittag-Leffler series did not converge in {ML_MAX_TERMS} terms")


def mittag_leffler_matrix(alpha: float, a, tau: float) -> np.ndarray:
    """``E_alpha(A tau**alpha)`` evaluated on the eigenvalues of ``A``."""
    a = as_matrix(a)
    if tau < 0:
        raise ValueError("tau must be nonnegative")
    if tau == 0:
        return identity(a.shape[0])
    dec = eig_decompose(a)
    scale = tau**alpha
    return dec.apply(lambda lam: mittag_leffler(alpha, 1.0, lam * scale))
