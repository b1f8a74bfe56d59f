"""Shared exception types."""


class NumericFailure(RuntimeError):
    """A numerical routine failed to converge or cross-checks disagreed."""


class DegenerateSourceError(ValueError):
    """Input mass is zero or concentrated on a lower-dimensional set."""
