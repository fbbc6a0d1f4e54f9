"""Exception types raised across the package."""


class CCOptError(Exception):
    """Base class for all package errors."""


class EvaluationError(CCOptError):
    """A callback returned non-finite values or arrays of the wrong shape."""


class ClassificationError(CCOptError):
    """A point cannot be classified into the index sets of the reformulation."""


class InfeasibleInput(CCOptError):
    """The given point violates the feasibility precondition of an operation."""


class SubproblemFailure(CCOptError):
    """An auxiliary least-squares or linear program did not solve."""


class EnumerationLimit(CCOptError):
    """A combinatorial enumeration exceeded its configured cap."""


class BranchExplosion(CCOptError):
    """Too many cone branches would have to be generated."""


class PathStalled(CCOptError):
    """The regularization parameter reached its floor before complementarity did.

    The partial path is attached as ``path``.
    """

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class UnknownProblem(CCOptError):
    """No built-in problem with the requested name."""


class ParseError(CCOptError):
    """A problem document is malformed; ``field`` names the offending entry."""

    def __init__(self, field, message=""):
        super().__init__(f"{field}: {message}" if message else field)
        self.field = field
