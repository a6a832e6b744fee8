"""Exception hierarchy shared by all oulab modules."""


class OULabError(Exception):
    """Base class for every error raised by oulab."""


class NonPositiveEigenvalue(OULabError, ValueError):
    pass


class NotSorted(OULabError, ValueError):
    pass


class DimensionMismatch(OULabError, ValueError):
    pass


class DimensionTooLarge(OULabError, ValueError):
    pass


class DegenerateGradient(OULabError, ArithmeticError):
    """|Q^{1/2} Dg| fell below the nondegeneracy threshold."""


class NotOnBoundary(OULabError, ValueError):
    pass


class NoBoundaryFound(OULabError, RuntimeError):
    pass


class RadiusTooSmall(OULabError, ValueError):
    pass


class HypothesisViolated(OULabError, ValueError):
    pass


class EmptyDomain(OULabError, ValueError):
    pass


class SolverDiverged(OULabError, RuntimeError):
    pass


class NonPositiveLambda(OULabError, ValueError):
    pass


class UnsupportedSource(OULabError, ValueError):
    """The source does not vanish in a neighbourhood of the boundary."""


class UnboundedDomain(OULabError, ValueError):
    pass


class StartOutsideDomain(OULabError, ValueError):
    pass


class BoundaryOutsideGrid(OULabError, ValueError):
    """Part of the boundary lies outside the grid box, where the solve imposed the box wall instead."""


class ConfigInvalid(OULabError, ValueError):
    exit_code = 2


class TaskFailed(OULabError, RuntimeError):
    exit_code = 1
