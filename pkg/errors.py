"""
Exception hierarchy shared by every module.
Each class carries the exit code the command line reports for it.
"""
from typing import List, Optional, Sequence


class HarmonicError(Exception):
    """Base class for all library errors."""

    exit_code: int = 5

    def __init__(self, message: str, part: Optional[str] = None):
        """
        Initialize the error.

        Args:
            message: Human readable description
            part: "h" or "g" when the error concerns one harmonic part
        """
        self.part = part
        if part:
            name = "analytic part h" if part == "h" else "co-analytic part g"
            message = f"{name}: {message}"
        super().__init__(message)


# ========== PARSE / SCHEMA (exit 2) ==========

class ParseError(HarmonicError):
    exit_code = 2


class ExprSyntaxError(ParseError):
    """Syntax error with a 1-based column and the tokens that would have been accepted."""

    def __init__(self, message: str, column: int, expected: Sequence[str] = ()):
        self.column = column
        self.expected: List[str] = list(expected)
        text = f"column {column}: {message}"
        if self.expected:
            text += f" (expected {', '.join(self.expected)})"
        super().__init__(text)


class NestedConj(ExprSyntaxError):
    pass


class NonlinearDivision(ExprSyntaxError):
    pass


class SchemaError(ParseError):
    pass


# ========== REPRESENTATION (exit 3) ==========

class RepresentationMismatch(HarmonicError):
    exit_code = 3


# ========== PRECONDITIONS (exit 4) ==========

class PreconditionError(HarmonicError):
    exit_code = 4


class NotNormalized(PreconditionError):
    pass


class NotInvertible(PreconditionError):
    pass


class DegenerateMatrix(PreconditionError):
    pass


class IdentityTransform(PreconditionError):
    pass


class DegenerateMap(PreconditionError):
    pass


class MultiplierOutOfRange(PreconditionError):
    pass


class NotFixedAtZero(PreconditionError):
    pass


class NotSuperattracting(PreconditionError):
    pass


class OutOfDisk(PreconditionError):
    pass


class SymbolNotSelfMap(PreconditionError):
    pass


class TruncationMismatch(PreconditionError):
    pass


# ========== NUMERICAL (exit 5) ==========

class NumericalFailure(HarmonicError):
    exit_code = 5


class RootFindingFailed(NumericalFailure):
    """Root finder did not converge; `partial` holds the best approximations found."""

    def __init__(self, message: str, partial: Sequence[complex] = (), part: Optional[str] = None):
        self.partial = list(partial)
        super().__init__(message, part=part)


class PowerIterationStalled(NumericalFailure):
    pass
