"""Exception hierarchy shared by the library and the command line driver."""


class BinLatentError(Exception):
    """Base class for all package errors."""


class DimensionError(BinLatentError, ValueError):
    """Shapes of the inputs do not agree."""


class DataError(BinLatentError, ValueError):
    """Input data violates a precondition (empty sample, bad distribution, ...)."""


class NumericalError(BinLatentError, ArithmeticError):
    """A numerical procedure failed (rank deficiency, non-convergence, ...)."""


class ConvergenceError(NumericalError):
    """An iterative solver hit its iteration cap or a singular step."""


class RankError(NumericalError):
    """A matrix that must have full rank does not."""


class SurvivorCountError(NumericalError):
    """Exact binary filtering kept a number of candidates different from d."""
