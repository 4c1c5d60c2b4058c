class CoopChainError(Exception):
    pass


class DomainError(CoopChainError, ValueError):
    """Argument outside the domain of an operation (index, parameter range)."""


class DivergenceError(DomainError):
    """Evaluation at a point where the model quantity diverges."""


class NumericalFailure(CoopChainError, RuntimeError):
    """A numerical routine failed to converge or to meet its accuracy target."""
