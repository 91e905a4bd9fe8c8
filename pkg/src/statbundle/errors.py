"""Exception hierarchy."""


class GeometryError(Exception):
    """Base class for every error raised by statbundle."""


class SpaceMismatchError(GeometryError, ValueError):
    """Two objects live on different sample spaces."""


class BaseMismatchError(GeometryError, ValueError):
    """A fiber vector is used at a base point other than its own."""


class NonPositiveError(GeometryError, ValueError):
    """A probability function would leave the open simplex."""


class CenteringError(GeometryError, ValueError):
    """A fiber vector does not have zero mean under its base."""


class NumericalError(GeometryError, ArithmeticError):
    """Base class for failures of an iterative or integrating routine."""


class PositivityBreachError(NumericalError):
    """An integrated state lost strict positivity."""


class ConvergenceError(NumericalError):
    """An iterative solver did not reach its tolerance."""


class IllConditionedError(NumericalError):
    """A linear system is too badly conditioned to be trusted."""


class DivergenceError(NumericalError):
    """A parameter trajectory blew up."""
