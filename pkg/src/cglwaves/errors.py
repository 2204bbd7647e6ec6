"""Exception hierarchy shared by every module of the package."""


class CglError(Exception):
    """Base class for all errors raised by cglwaves."""


class NumericalError(CglError, ArithmeticError):
    """A computation hit a singular or degenerate configuration."""


class DegenerateLattice(NumericalError):
    pass


class NearLatticePoint(NumericalError):
    pass


class DegenerateArguments(NumericalError):
    pass


class NotARoot(CglError, ValueError):
    pass


class ZeroDispersion(CglError, ValueError):
    pass


class ZeroModulus(NumericalError):
    pass


class DegenerateLeading(NumericalError):
    pass


class ResonantIndex(NumericalError):
    """A positive integer Fuchs index made the order-by-order system singular."""

    def __init__(self, order, message=None):
        self.order = order
        super().__init__(message or f"resonant Fuchs index at order {order}")


class InvalidFreeConstant(CglError, ValueError):
    pass


class InsufficientTerms(CglError, ValueError):
    pass


class NearPole(NumericalError):
    pass


class InversionFailure(NumericalError):
    pass


class CsiZeroRestriction(CglError, ValueError):
    pass


class BranchCut(NumericalError):
    pass


class Unresolvable(NumericalError):
    pass
