"""Exception hierarchy shared by every module."""


class GameError(Exception):
    """Base class for all package errors."""


class ShapeError(GameError, ValueError):
    """Array or profile dimensions do not match the game."""


class CapacityError(GameError):
    """Problem exceeds a hard size cap (dense tensor, LP, coalition count)."""


class ValidationError(GameError, ValueError):
    """Input violates a documented invariant or precondition."""


class CapabilityError(GameError):
    """An optional capability (gradient, best-response oracle) is missing."""


class ContractError(GameError, ValueError):
    """A hard precondition of an algorithm is not met."""


class NoEquilibriumError(GameError):
    """An operation needs an equilibrium set but got none."""


class UndefinedRatioError(GameError, ArithmeticError):
    """Price of anarchy is undefined (both welfare values non-positive)."""


class LPError(GameError):
    """Numerical failure inside the LP kernel."""


class DisagreementError(GameError):
    """No feasible point dominates the bargaining status quo."""


class DegenerateChannelError(GameError, ValueError):
    """Every band has zero direct gain; water-filling is undefined."""
