"""Exception types shared across the package.

The CLI maps these onto its exit-code contract: data problems exit with
code 2, guard/resource violations with code 3.
"""


class DataValidationError(ValueError):
    """Raised when an input matrix, label, or threshold file is invalid."""


class DegenerateDenominatorError(ValueError):
    """Raised when the pooled micro-F1 denominator is zero.

    This only happens when the ground truth contains no positive label and
    the predictions are all zero; the F1 gradient is undefined there.
    """


class ResourceGuardError(RuntimeError):
    """Raised when a requested computation exceeds a configured size guard."""
