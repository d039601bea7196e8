"""Problem description types shared by the discretizers and the harness."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .errors import DimensionMismatch, ValidationError
from .matcore import as_matrix

MAX_PQ = 4


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class FracOrder:
    """Order ``alpha = (2p+1)/(2q+1)`` with odd numerator and denominator."""

    p: int
    q: int

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, np.integer)):
                raise ValidationError(
                    f"{name} must be an integer (2{name}+1 has to be an odd positive integer)"
                )
            if v < 0:
                raise ValidationError(f"{name} must be nonnegative, got {v}")
            if v > MAX_PQ:
                raise ValidationError(f"{name}={v} exceeds the supported bound {MAX_PQ}")
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "q", int(self.q))

    @property
    def num(self) -> int:
        return 2 * self.p + 1

    @property
    def den(self) -> int:
        return 2 * self.q + 1

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.num, self.den)

    def __str__(self) -> str:
        return f"{self.num}/{self.den}"


@dataclass(frozen=True)
class SeriesControl:
    max_terms: int = 200
    tail_tol: float = 1e-12
    quad_nodes: int = 64

    def __post_init__(self):
        if not (isinstance(self.max_terms, int) and 0 < self.max_terms <= 500):
            raise ValidationError(f"max_terms must be in [1, 500], got {self.max_terms!r}")
        if not (0.0 < self.tail_tol <= 1e-3):
            raise ValidationError(f"tail_tol must be in (0, 1e-3], got {self.tail_tol!r}")
        if not (isinstance(self.quad_nodes, int) and 4 <= self.quad_nodes <= 256):
            raise ValidationError(f"quad_nodes must be in [4, 256], got {self.quad_nodes!r}")

    def as_dict(self) -> dict:
        return {"max_terms": self.max_terms, "tail_tol": self.tail_tol, "quad_nodes": self.quad_nodes}


@dataclass(frozen=True)
class PiecewiseConstantSignal:
    """Forcing value ``f(t_i)`` held on each grid interval ``[t_i, t_{i+1})``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2:
            raise ValidationError("forcing must be a list of vectors, one per interval")
        if not np.all(np.isfinite(v)):
            raise ValidationError("forcing has non-finite entries")
        object.__setattr__(self, "values", _freeze(v))

    def __len__(self) -> int:
        return self.values.shape[0]

    def is_zero(self) -> bool:
        return not np.any(self.values)


@dataclass(frozen=True)
class ProblemSpec:
    A: np.ndarray
    x0: np.ndarray
    order: FracOrder
    t0: float
    T: float
    grid: np.ndarray
    forcing: Optional[PiecewiseConstantSignal] = None

    def __post_init__(self):
        try:
            a = as_matrix(self.A)
        except (DimensionMismatch, ValueError) as exc:
            raise ValidationError(f"A: {exc}") from exc
        x0 = np.asarray(self.x0)
        x0 = np.array(x0, dtype=np.result_type(x0, float)).reshape(-1)
        if x0.shape[0] != a.shape[0]:
            raise ValidationError(
                f"x0 has length {x0.shape[0]} but A is {a.shape[0]}x{a.shape[0]}"
            )
        if not self.t0 > 0:
            raise ValidationError(f"t0 must be > 0 (the boundary terms are singular at t=0), got {self.t0}")
        grid = np.array(self.grid, dtype=float).reshape(-1)
        if grid.size == 0:
            raise ValidationError("grid must contain at least t0")
        if np.any(np.diff(grid) <= 0):
            raise ValidationError("grid nodes must be strictly increasing")
        if not np.isclose(grid[0], self.t0, rtol=1e-12, atol=0):
            raise ValidationError(f"grid starts at {grid[0]} but t0 = {self.t0}")
        if not np.isclose(grid[-1], self.T, rtol=1e-12, atol=0):
            raise ValidationError(f"grid ends at {grid[-1]} but T = {self.T}")
        if grid.size > 1 and not self.T > self.t0:
            raise ValidationError("T must exceed t0")
        if self.forcing is not None:
            if len(self.forcing) != grid.size - 1:
                raise ValidationError(
                    f"forcing has {len(self.forcing)} values but the grid has {grid.size - 1} intervals"
                )
            if self.forcing.values.shape[1] != a.shape[0]:
                raise ValidationError("forcing vectors must match the state dimension")
        if np.all(a.imag == 0):
            a = a.real
        object.__setattr__(self, "A", _freeze(a))
        object.__setattr__(self, "x0", _freeze(x0))
        object.__setattr__(self, "grid", _freeze(grid))
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "T", float(self.T))

    @classmethod
    def uniform(cls, A, x0, order, t0, T, steps, forcing=None) -> "ProblemSpec":
        if steps < 0:
            raise ValidationError("steps must be nonnegative")
        if steps == 0:
            grid = np.array([float(t0)])
            T = t0
        else:
            grid = np.linspace(t0, T, steps + 1)
        if forcing is not None and not isinstance(forcing, PiecewiseConstantSignal):
            forcing = PiecewiseConstantSignal(forcing)
        return cls(A, x0, order, t0, T, grid, forcing)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def steps(self) -> int:
        return self.grid.size - 1

    def intervals(self) -> list[tuple[float, float]]:
        g = self.grid
        return [(float(g[i]), float(g[i + 1])) for i in range(g.size - 1)]

    def is_uniform(self, rtol: float = 1e-9) -> bool:
        d = np.diff(self.grid)
        return d.size == 0 or bool(np.allclose(d, d[0], rtol=rtol, atol=0))


@dataclass
class Trajectory:
    """Node times with the state at each node.

    ``transitions`` and ``increments`` hold the per-interval maps used to
    produce the states, when the producing method has them. ``diagnostics``
    carries method-specific checks.
    """

    times: np.ndarray
    states: np.ndarray
    transitions: Optional[list] = None
    increments: Optional[list] = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states)
        if self.states.ndim == 1:
            self.states = self.states.reshape(-1, 1)
        if self.times.shape[0] != self.states.shape[0]:
            raise ValueError("times and states must have equal lengths")

    def __len__(self) -> int:
        return self.times.shape[0]
