"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage errors exit 1, data/format
errors exit 2, numerical failures exit 3.
"""


class MCESError(Exception):
    """Base class for all package errors."""


class ContractViolationError(MCESError):
    """An argument violated a documented precondition (shape, sign, ...)."""


class DataFormatError(MCESError):
    """A data file is missing or does not match its documented format."""


class NumericalError(MCESError):
    """A linear-algebra or floating-point operation failed irrecoverably."""


class DivergenceError(NumericalError):
    """A leapfrog trajectory left the finite floating-point range.

    ``step`` is the 1-based index of the integration step at which the
    first non-finite coordinate appeared.
    """

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(message or f"trajectory diverged at leapfrog step {step}")
