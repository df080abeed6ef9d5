"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A matrix factorization or other numerical step failed beyond repair."""


class DataError(ValueError):
    """Input data could not be parsed or fails basic validation."""
