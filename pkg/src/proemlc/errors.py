"""Exception hierarchy shared by every module.

Each class carries a short ``kind`` tag that the command-line layer writes
into its machine-readable error document.
"""

import numpy as np


class ProEMLCError(Exception):
    kind = "error"


class InvalidArgumentError(ProEMLCError, ValueError):
    kind = "invalid-argument"


class ShapeError(ProEMLCError, ValueError):
    """Raised when an array does not have the dimensions an operation needs."""

    kind = "shape"

    def __init__(self, message, expected=None, actual=None):
        if expected is not None or actual is not None:
            message = f"{message} (expected {expected}, got {actual})"
        super().__init__(message)
        self.expected = expected
        self.actual = actual


class SingularMatrixError(ProEMLCError, np.linalg.LinAlgError):
    kind = "singular-matrix"


class LabelConflictError(ProEMLCError, ValueError):
    kind = "label-conflict"


class NumericError(ProEMLCError, ValueError):
    kind = "numeric"

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class ParseError(ProEMLCError, ValueError):
    kind = "parse"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class InvalidPatternError(ProEMLCError, ValueError):
    kind = "invalid-pattern"


class InfeasiblePlanError(InvalidPatternError):
    kind = "infeasible-plan"

    def __init__(self, message, max_feasible=None):
        super().__init__(message)
        self.max_feasible = max_feasible
