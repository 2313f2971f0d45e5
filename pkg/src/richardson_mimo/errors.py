"""Exception hierarchy shared by the solver, link and simulation layers."""


class MimoError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(MimoError, ValueError):
    """Array shapes are inconsistent."""


class DomainError(MimoError, ValueError):
    """A scalar argument lies outside its admissible range."""


class FactorizationError(MimoError, ArithmeticError):
    """Cholesky factorization hit a non-positive pivot.

    Attributes:
        index: zero-based row/column of the failing pivot.
        pivot: the offending pivot value.
    """

    def __init__(self, index: int, pivot: float):
        self.index = index
        self.pivot = pivot
        super().__init__(f"non-positive pivot {pivot:.3e} at index {index}")


class PreconditionerError(MimoError, ArithmeticError):
    """The diagonal splitting of a Neumann series has a zero/negative entry."""


class UnsupportedRowError(MimoError, ValueError):
    """No tabulated multiplication count exists for the requested row."""


class ConvergenceError(MimoError, ArithmeticError):
    """An eigenvalue estimate did not converge within its step budget."""


class ConfigurationError(MimoError, ValueError):
    """Simulation or channel parameters violate the operating regime."""


class FramingError(MimoError, ValueError):
    """A bit/LLR sequence has a length the coding chain cannot accept."""
