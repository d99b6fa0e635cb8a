"""Exception hierarchy.

Every error raised by the library derives from :class:`SmpError`, so callers
can catch one class. Validation problems with a model document derive from
:class:`ValidationError`; failures of the hitting conditions derive from
:class:`ReachabilityError`. The CLI maps these two families onto exit codes.
"""


class SmpError(Exception):
    """Base class for all library errors."""


class ValidationError(SmpError, ValueError):
    """The input violates a structural requirement."""


class MalformedDocument(ValidationError):
    pass


class RowSumViolation(ValidationError):
    pass


class OrderZeroMismatch(ValidationError):
    pass


class NegativeMoment(ValidationError):
    pass


class OrderOutOfRange(ValidationError):
    pass


class EmptyTarget(ValidationError):
    pass


class InactiveState(ValidationError):
    pass


class DuplicateState(ValidationError):
    pass


class MissingLowerMoments(ValidationError):
    pass


class WeightOutOfRange(ValidationError):
    pass


class HorizonMismatch(ValidationError):
    pass


class MissingFinalTarget(ValidationError):
    pass


class ReachabilityError(SmpError):
    """A hitting condition fails or an exclusion is not allowed."""


class UnreachableTarget(ReachabilityError):
    pass


class UnreachableTargetSet(UnreachableTarget):
    pass


class UnhittableDomain(UnreachableTarget):
    pass


class TargetExclusion(ReachabilityError):
    pass


class AbsorbingState(ReachabilityError):
    pass


class SingularSystem(ReachabilityError, ArithmeticError):
    pass


class SingularMixSystem(SingularSystem):
    pass


class TruncationExceeded(SmpError):
    pass
