"""Exception types raised across the package."""


class RankBPError(Exception):
    """Base class for all package errors."""


class PreconditionError(RankBPError, ValueError):
    """Input does not satisfy an operation's stated precondition."""


class NumericalError(RankBPError, ArithmeticError):
    """An iterative numerical routine failed to converge."""


class InfeasibleError(RankBPError, ValueError):
    """A geometric or algebraic construction has no solution for the input."""


class ConstructionError(PreconditionError):
    """A branching-process construction was handed an invalid instance.

    ``index`` is the offending 0-based vertex index when one exists.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class IntegrityError(RankBPError, ValueError):
    """Two objects that must agree (e.g. a partition and its matrix) do not."""


class SizeError(RankBPError, ValueError):
    """Input is too large for an enumeration-based routine."""


class TestInfeasibleError(RankBPError, ValueError):
    """A statistical test cannot be run at the required expected counts."""

    __test__ = False  # keep pytest from collecting this class
