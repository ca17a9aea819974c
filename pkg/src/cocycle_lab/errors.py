"""Exception hierarchy shared by every module of the package."""


class CocycleLabError(Exception):
    """Base class for all errors raised by cocycle_lab."""


class InvalidInputError(CocycleLabError, ValueError):
    pass


class ClassViolationError(CocycleLabError):
    """A generator or perturbation breaks its declared class tag."""


class NumericalBlowupError(CocycleLabError, ArithmeticError):
    """Integration produced NaN/inf or an entry above the blowup threshold."""

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


class NumericalDomainError(CocycleLabError, ArithmeticError):
    pass


class CompositionMismatchError(CocycleLabError):
    pass


class DegenerateFrameError(CocycleLabError):
    """The spectrum is (numerically) not simple, so no Oseledets frame exists."""


class RotationInfeasibleError(CocycleLabError):
    pass


class ConstructionFailureError(CocycleLabError):
    pass


class SwapInfeasibleError(CocycleLabError):
    pass


class InvariantViolationError(CocycleLabError):
    pass
