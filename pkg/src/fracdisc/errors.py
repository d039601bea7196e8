"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line front end, so
the process status identifies the failure class.
"""


class FracDiscError(Exception):
    """Base class for all library errors."""

    exit_code = 1


class ParseError(FracDiscError):
    exit_code = 2


class ValidationError(FracDiscError):
    exit_code = 3


class ConvergenceError(FracDiscError):
    exit_code = 4


class SingularMatrix(FracDiscError):
    exit_code = 5


class NotDiagonalizable(FracDiscError):
    exit_code = 6


class BranchCutError(FracDiscError):
    exit_code = 7


class PoleError(FracDiscError):
    exit_code = 8


class DimensionMismatch(FracDiscError):
    exit_code = 9


class NonUniformGrid(FracDiscError):
    exit_code = 10


class NonPositiveTime(FracDiscError):
    exit_code = 11


EXIT_CODES = {
    cls.__name__: cls.exit_code
    for cls in (
        FracDiscError,
        ParseError,
        ValidationError,
        ConvergenceError,
        SingularMatrix,
        NotDiagonalizable,
        BranchCutError,
        PoleError,
        DimensionMismatch,
        NonUniformGrid,
        NonPositiveTime,
    )
}
