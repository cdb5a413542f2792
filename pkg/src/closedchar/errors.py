"""Exception hierarchy.

Every error raised on purpose by the library derives from ``ClosedCharError``
so callers (and the command line front-end) can separate numerical failures
from programming errors.
"""


class ClosedCharError(Exception):
    """Base class for all library errors."""


class RangeError(ClosedCharError, ValueError):
    """A parameter lies outside its admissible range."""


class NotSymplecticError(ClosedCharError, ValueError):
    """A matrix fails the symplecticity check."""


class ResolutionError(ClosedCharError):
    """Adaptive refinement could not resolve a path."""


class StabilityError(ClosedCharError):
    """A one-sided limit changed when the perturbation was halved."""


class ConsistencyError(ClosedCharError):
    """Two independent routes to the same quantity disagree."""

    def __init__(self, message, *values):
        super().__init__(message)
        self.values = values


class UnsupportedNormalFormError(ClosedCharError):
    """Matrix contains a block the normal form decomposition does not handle."""


class SingularPointError(ClosedCharError, ValueError):
    """Evaluation requested at the origin where the Hessian is undefined."""


class InfeasibleParametersError(ClosedCharError, ValueError):
    """The auxiliary function cannot satisfy all requested conditions."""


class DualDomainError(ClosedCharError):
    """A point could not be written as a multiple of a unit normal."""


class FamilyDegeneracyError(ClosedCharError):
    """Rational semi-axis ratios produce continuous families of orbits."""


class IntegratorError(ClosedCharError):
    """ODE integration failed or drifted beyond tolerance."""


class AmbiguityError(ClosedCharError):
    """A period ratio cannot be snapped to an integer unambiguously."""


class TrivialSolutionError(ClosedCharError):
    """A variational solver converged to the zero loop."""


class BasisError(ClosedCharError):
    """A change of basis is too ill-conditioned to trust."""


class PreconditionError(ClosedCharError, ValueError):
    """Input violates an operation's precondition."""


class InvariantViolationError(ClosedCharError):
    """Computed data violates a structural invariant."""


class DepthError(ClosedCharError):
    """An index table is too short for the requested cutoff."""

    def __init__(self, message, required_m_max):
        super().__init__(message)
        self.required_m_max = required_m_max


class CriticalTypeError(ClosedCharError, ValueError):
    """Critical type numbers violate an admissibility rule."""

    def __init__(self, message, rule):
        super().__init__(message)
        self.rule = rule
