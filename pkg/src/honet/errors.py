"""Exception hierarchy.

Data problems (bad files, bad values, structurally impossible requests)
derive from DataError; numerical breakdowns (divergent path counts,
non-convergence) derive from NumericalError.  The CLI maps DataError to
exit code 2 and NumericalError to exit code 3.
"""


class HonetError(Exception):
    """Base class for all errors raised by this package."""


class DataError(HonetError):
    """Invalid input data or an operation that the data cannot support."""


class ParseError(DataError):
    """Malformed input file; carries the 1-based line number."""

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        prefix = ""
        if path is not None:
            prefix += f"{path}:"
        if line is not None:
            prefix += f"{line}: "
        super().__init__(prefix + message)


class ValidationError(DataError):
    """A value violates a documented precondition or invariant."""


class UnknownNodeError(DataError):
    """A node label is not part of the graph or model."""


class UnseenContextError(DataError):
    """A transition context was never observed; caller decides the fallback."""


class DeadEndError(DataError):
    """No outgoing transition exists anywhere for the requested context."""


class EmptyModelError(DataError):
    """Model construction found no usable windows at the requested order."""


class DegenerateTestError(DataError):
    """Likelihood-ratio test with a non-positive degree-of-freedom difference."""


class InsufficientDataError(DataError):
    """Too few observations to compute the requested statistic."""


class NumericalError(HonetError):
    """Numerical failure: overflow, divergence, or non-convergence."""


class ConvergenceError(NumericalError):
    """Iteration exceeded its budget; carries the last residual."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)
