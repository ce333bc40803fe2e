"""Exception types shared across the package.

The CLI maps these onto exit codes: usage errors are handled by argparse,
DataError (and plain ValueError) exit with 2, NumericalError with 3.
"""


class DataError(ValueError):
    """Malformed, inconsistent, or out-of-domain input data."""


class DimensionError(DataError):
    """Array shapes incompatible with the requested operation."""


class NumericalError(RuntimeError):
    """A numerically degenerate situation (singular matrix, zero denominator)."""


class ResourceError(RuntimeError):
    """Problem size exceeds a guard intended for exact dense computations."""
