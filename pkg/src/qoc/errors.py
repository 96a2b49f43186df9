"""Exception hierarchy shared by all modules."""


class QOCError(Exception):
    """Base class for every error raised by :mod:`qoc`."""


class ConfigurationError(QOCError, ValueError):
    """Invalid grid, mismatched grids, or bad parameters."""


class DomainError(QOCError, ValueError):
    """A physical quantity lies outside its admissible range."""


class SingularityError(QOCError, ValueError):
    """Division by a vanishing cavity amplitude."""


class ResolutionError(QOCError, ValueError):
    """A requested feature is narrower than the grid can resolve."""


class PreconditionError(QOCError, ValueError):
    """The optimizer was handed an inadmissible starting protocol."""


class DivergenceError(QOCError, ArithmeticError):
    """The cost became non-finite; try a smaller step size."""

    report = None


class StallError(QOCError):
    """Step halving was exhausted without lowering the cost."""
