"""Approximate discretization by the Grunwald-Letnikov recursion.

For ``D^alpha x = A x`` on a uniform grid with step ``delta`` the state is
advanced as::

    x(k+1) = (A delta**alpha + alpha E) x(k) - sum_{i=2}^{k+1} c_i x(k+1-i)

with ``c_i = (-1)**i binom(alpha, i)``. The same recursion applied to the
identity gives transition matrices ``Phi(k)`` with ``x(k) = Phi(k) x(0)``,
and pair transitions ``Phi(k, m) = Phi(k) Phi(m)^-1``.

The full history is kept; there is no short-memory truncation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .errors import DimensionMismatch, NonUniformGrid, ValidationError
from .matcore import as_matrix, identity, mat_inverse, real_if_effectively_real
from .problem import ProblemSpec, Trajectory


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise ValidationError(f"GL recursion needs 0 < alpha <= 1, got {alpha}")
    return alpha


@dataclass(frozen=True)
class GLCoefficients:
    alpha: float
    values: np.ndarray

    def __len__(self) -> int:
        return self.values.shape[0]


def gl_coefficients(alpha: float, kmax: int) -> GLCoefficients:
    """Weights ``c_0..c_kmax`` from ``c_i = c_{i-1} (1 - (alpha+1)/i)``.

    The factor is evaluated as ``(i - 1 - alpha)/i`` so that ``c_1 = -alpha``
    holds exactly.
    """
    alpha = _check_alpha(alpha)
    if kmax < 0:
        raise ValueError("kmax must be nonnegative")
    c = np.empty(kmax + 1)
    c[0] = 1.0
    for i in range(1, kmax + 1):
        c[i] = c[i - 1] * ((i - 1 - alpha) / i)
    c.setflags(write=False)
    return GLCoefficients(alpha, c)


def _lead(a: np.ndarray, alpha: float, delta: float) -> np.ndarray:
    return a * delta**alpha + alpha * identity(a.shape[0])


def gl_state_step(A, alpha: float, delta: float, history: Sequence) -> np.ndarray:
    """One step of the recursion given states ``x(0), ..., x(k)``."""
    alpha = _check_alpha(alpha)
    if delta <= 0:
        raise ValueError("delta must be positive")
    a = as_matrix(A)
    hist = np.array(history, dtype=np.complex128)
    if hist.ndim == 1:
        hist = hist.reshape(1, -1)
    if hist.shape[0] == 0:
        raise ValueError("history must be nonempty")
    if hist.shape[1] != a.shape[0]:
        raise DimensionMismatch(
            f"states have length {hist.shape[1]} but A is {a.shape[0]}x{a.shape[0]}"
        )
    k = hist.shape[0] - 1
    c = gl_coefficients(alpha, k + 1).values
    nxt = _lead(a, alpha, delta) @ hist[k]
    if k >= 1:
        nxt -= c[2 : k + 2] @ hist[k - 1 :: -1]
    return real_if_effectively_real(nxt)


@dataclass(frozen=True)
class TransitionSequence:
    """Transition matrices ``Phi(0) = E, Phi(1), ..., Phi(K)`` for one step size."""

    alpha: float
    delta: float
    matrices: np.ndarray
    coefficients: GLCoefficients
    increments: Optional[np.ndarray] = None

    def __len__(self) -> int:
        return self.matrices.shape[0]

    def __getitem__(self, k: int) -> np.ndarray:
        return self.matrices[k]


def gl_transition_sequence(A, alpha: float, delta: float, kmax: int) -> TransitionSequence:
    alpha = _check_alpha(alpha)
    if delta <= 0:
        raise ValueError("delta must be positive")
    if kmax < 0:
        raise ValueError("kmax must be nonnegative")
    a = as_matrix(A)
    coeffs = gl_coefficients(alpha, kmax)
    mats = _kernels.gl_recurrence(_lead(a, alpha, delta), coeffs.values, identity(a.shape[0]), kmax)
    mats = real_if_effectively_real(mats)
    mats.setflags(write=False)
    return TransitionSequence(alpha, float(delta), mats, coeffs)


def gl_pair_transition(seq: TransitionSequence, k: int, m: int) -> np.ndarray:
    """``Phi(k, m) = Phi(k) Phi(m)^-1``; raises SingularMatrix for singular ``Phi(m)``."""
    if not (0 <= k < len(seq) and 0 <= m < len(seq)):
        raise IndexError(f"indices ({k}, {m}) outside sequence of length {len(seq)}")
    if k == m:
        return np.eye(seq.matrices.shape[1], dtype=seq.matrices.dtype)
    return real_if_effectively_real(seq[k] @ mat_inverse(seq[m]))


def gl_states(A, alpha: float, delta: float, x0, kmax: int) -> np.ndarray:
    """States ``x(0..kmax)`` from the state recursion, shape ``(kmax+1, n)``."""
    alpha = _check_alpha(alpha)
    a = as_matrix(A)
    x0 = np.asarray(x0, dtype=np.complex128).reshape(-1, 1)
    if x0.shape[0] != a.shape[0]:
        raise DimensionMismatch("x0 does not match A")
    coeffs = gl_coefficients(alpha, kmax)
    out = _kernels.gl_recurrence(_lead(a, alpha, delta), coeffs.values, x0, kmax)
    return real_if_effectively_real(out[:, :, 0])


def gl_trajectory(problem: ProblemSpec) -> Trajectory:
    """GL trajectory over the problem grid.

    Raises
    ------
    NonUniformGrid
        The recursion needs a constant step.
    ValidationError
        For a nonzero forcing term or an order outside ``(0, 1]``.
    """
    if problem.forcing is not None and not problem.forcing.is_zero():
        raise ValidationError("the GL recursion does not support forcing")
    if not problem.is_uniform():
        raise NonUniformGrid("GL recursion requires a uniform grid")
    alpha = _check_alpha(problem.order.alpha)
    if problem.steps == 0:
        return Trajectory(problem.grid.copy(), problem.x0.reshape(1, -1).copy())
    delta = (problem.T - problem.t0) / problem.steps
    states = gl_states(problem.A, alpha, delta, problem.x0, problem.steps)
    return Trajectory(problem.grid.copy(), states)
