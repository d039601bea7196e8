"""Discretization of linear fractional-order systems ``D^alpha x = A x + f``.

The order is restricted to ``alpha = (2p+1)/(2q+1)``. Two discretizations
are provided: the approximate Grunwald-Letnikov recursion (:mod:`.gl`) and
exact per-interval fundamental matrices (:mod:`.exact`).
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .errors import (
    BranchCutError,
    ConvergenceError,
    DimensionMismatch,
    FracDiscError,
    NonPositiveTime,
    NonUniformGrid,
    NotDiagonalizable,
    ParseError,
    PoleError,
    SingularMatrix,
    ValidationError,
)
from .exact import (
    boundary_sum,
    exact_fundamental_quadrature,
    exact_fundamental_series,
    forced_increment,
    propagate,
)
from .gl import (
    GLCoefficients,
    TransitionSequence,
    gl_coefficients,
    gl_pair_transition,
    gl_state_step,
    gl_trajectory,
    gl_transition_sequence,
)
from .harness import ComparisonReport, compare_methods, emit, load_problem, load_report, run_example1
from .matcore import (
    EigenDecomposition,
    Rational,
    eig_decompose,
    frac_binomial,
    gamma_fn,
    gen_factorial,
    mat_exp,
    mat_frac_power,
    mat_inverse,
    mittag_leffler,
    mittag_leffler_matrix,
)
from .problem import FracOrder, PiecewiseConstantSignal, ProblemSpec, SeriesControl, Trajectory

__version__ = "0.1.0"
