class PbarOmegaError(Exception):
    """Base class for every error raised by the library."""


class DivisionByZero(PbarOmegaError, ZeroDivisionError):
    ...


class LatticeMismatch(PbarOmegaError, ValueError):
    ...


class NonInvertibleLeadingTerm(PbarOmegaError):
    ...


class DivergentProduct(PbarOmegaError):
    ...


class PrecisionExhausted(PbarOmegaError):
    ...


class InexactDivision(PbarOmegaError):
    ...


class NoCombinatorialDefinition(PbarOmegaError):
    ...


class ResourceBound(PbarOmegaError):
    ...


class RootOfUnityOutsideCyc8(PbarOmegaError):
    ...


class NonExpandableDenominator(PbarOmegaError):
    ...


class PrecisionUnreachable(PbarOmegaError):
    ...


class PoleProximity(PbarOmegaError):
    ...


class SpecializationPole(PbarOmegaError):
    ...


class UnboundedCone(PbarOmegaError):
    ...


class WindowTooSmall(PbarOmegaError):
    ...


class ContourThroughPole(PbarOmegaError):
    ...


class NotUnimodular(PbarOmegaError, ValueError):
    ...


class DomainViolation(PbarOmegaError, ValueError):
    ...


class StencilThroughSingularity(PbarOmegaError):
    ...


class UnknownIdentity(PbarOmegaError):
    ...


class UnknownObject(PbarOmegaError):
    ...
