"""Package-level error types, mapped to CLI exit codes in csurv.cli."""


class ValidationError(ValueError):
    """Invalid input data or configuration (CLI exit code 3)."""


class NumericalError(RuntimeError):
    """A sampler or solver failed numerically (CLI exit code 4)."""
