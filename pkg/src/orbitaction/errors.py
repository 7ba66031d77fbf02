"""Exception hierarchy.

``ValidationError`` covers bad inputs (CLI exit code 2); everything else
deriving from ``NumericalFailure`` is a numerical problem (exit code 3).
"""


class OrbitActionError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(OrbitActionError, ValueError):
    pass


class NotRegularError(ValidationError):
    """The orbit has a non-abelian stabilizer (some multiplicity > 1)."""


class InvalidTangentError(ValidationError):
    pass


class NumericalFailure(OrbitActionError, ArithmeticError):
    pass


class DegenerateInputError(NumericalFailure):
    pass


class CapDegeneracyError(NumericalFailure):
    pass


class QuadratureFailure(NumericalFailure):
    pass


class StabilizerMembershipError(NumericalFailure):
    pass


class NotClosedError(NumericalFailure):
    pass


class InapplicableError(NumericalFailure):
    pass


class InternalConsistencyError(NumericalFailure):
    pass
