"""Exception types shared across the toolkit.

The CLI maps these onto exit codes, so everything numerical that can fail
in a controlled way should raise one of the classes below instead of a
bare ValueError/RuntimeError.
"""


class DomainError(ValueError):
    """An input is outside its physical domain (probability, rate, lifetime...)."""


class DimensionError(ValueError):
    """A matrix is too large for the exact algorithms or badly shaped."""


class TruncationError(RuntimeError):
    """A truncated Fock-space sum is too short for the requested accuracy."""


class ConvergenceError(RuntimeError):
    """An iterative numerical routine failed to converge."""


class DegenerateSetupError(ValueError):
    """A setup is degenerate for the requested extraction (e.g. no contrast)."""
