"""Exception types shared across the package.

The CLI maps these onto exit codes: usage/config problems exit 1,
DataError exits 2, NumericError exits 3.
"""


class CapgraphError(Exception):
    pass


class DataError(CapgraphError):
    """Malformed input files or inconsistent graph/label data."""


class NumericError(CapgraphError):
    """Numerical failure (non-finite values, infeasible solver settings)."""
