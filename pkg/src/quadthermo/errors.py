"""Exception types shared across the package."""


class QuadThermoError(Exception):
    """Base class; the CLI maps these to exit status 1."""


class TailNotCertifiable(QuadThermoError):
    pass


class HypothesisViolation(QuadThermoError):
    pass


class ScheduleTooShort(QuadThermoError):
    pass


class PrecisionExhausted(QuadThermoError):
    pass


class BranchResolutionFailure(QuadThermoError):
    pass


class RootNotBracketed(QuadThermoError):
    pass


class ThetaNotAboveOne(QuadThermoError):
    pass


class OrbitEscapedCantorSet(QuadThermoError):
    def __init__(self, index: int, message: str = ""):
        super().__init__(message or f"orbit left Y u Ytilde at g-step {index}")
        self.index = index


class TargetNotRealized(QuadThermoError):
    pass


class AmbiguousBracket(QuadThermoError):
    pass


class BranchInversionFailure(QuadThermoError):
    pass


class BudgetExhausted(QuadThermoError):
    pass


class NoBracket(QuadThermoError):
    pass


class WeightOverflow(QuadThermoError):
    pass


class SeriesDiverging(QuadThermoError):
    pass
