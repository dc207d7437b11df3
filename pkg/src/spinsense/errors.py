class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class NumericalError(RuntimeError):
    pass


class DegeneratePosteriorError(NumericalError):
    """Every grid point assigns zero probability to the observed data."""
