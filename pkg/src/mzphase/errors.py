"""Exception hierarchy.

Domain errors mean the requested physical configuration has no answer
(no bound state, vanishing in-plane field).  Numerical-guard errors mean
the configuration is fine but the discretization is too coarse to trust.
The CLI maps the two families to exit codes 2 and 3.
"""


class MZPhaseError(Exception):
    """Base class for all package errors."""


class DomainError(MZPhaseError, ValueError):
    pass


class NumericalGuardError(MZPhaseError, ArithmeticError):
    pass


class EvanescentConditionViolated(DomainError):
    pass


class DegenerateInPlane(EvanescentConditionViolated):
    pass


class NoDecayingMode(DomainError):
    pass


class NoZeroMode(DomainError):
    pass


class DegenerateZeroMode(DomainError):
    pass


class NoLocalizedZeroMode(DomainError):
    pass


class GridMismatch(MZPhaseError, ValueError):
    pass


class NonHermitianGenerator(DomainError):
    pass


class StepTooCoarse(NumericalGuardError):
    pass


class ZeroOverlap(NumericalGuardError):
    pass


class OverlapVanishes(DomainError):
    pass


class BasisDiscontinuity(NumericalGuardError):
    pass
