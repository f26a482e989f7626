"""Exception hierarchy shared across the package."""


class FracDNNError(Exception):
    """Base class for all errors raised by fracdnn."""


class ShapeError(FracDNNError, ValueError):
    """Inconsistent array dimensions or too few recorded states."""


class NonFiniteError(FracDNNError, ArithmeticError):
    """A propagated state became inf or nan.

    ``index`` is the first offending step (layer) index.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class ConvergenceError(FracDNNError, ArithmeticError):
    """A series or iteration hit its cap before meeting its tolerance."""


class LineSearchError(FracDNNError, RuntimeError):
    """Armijo backtracking exhausted without sufficient decrease."""
