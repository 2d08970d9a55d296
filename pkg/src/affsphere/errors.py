"""Exception hierarchy shared by all modules."""


class AffsphereError(Exception):
    """Base class for every error raised by the package."""


class InvalidParameter(AffsphereError, ValueError):
    pass


class DimensionMismatch(AffsphereError, ValueError):
    pass


class NonpositiveArgument(AffsphereError, ValueError):
    pass


class DivisionByZero(AffsphereError, ZeroDivisionError):
    pass


class ChartDomainViolation(AffsphereError, ValueError):
    pass


class DegenerateImmersion(AffsphereError, ValueError):
    pass


class DegenerateHessian(AffsphereError, ValueError):
    pass


class NotLocallyConvex(AffsphereError, ValueError):
    pass


class SingularFrame(AffsphereError, ValueError):
    pass


class DimensionTooSmall(AffsphereError, ValueError):
    pass


class PartitionMismatch(AffsphereError, ValueError):
    pass


class InvalidDecomposition(AffsphereError, ValueError):
    """Block data violates a structural hypothesis (e.g. ``q + s < 2``)."""


class RankContradiction(AffsphereError, ArithmeticError):
    pass


class ManifestError(AffsphereError, ValueError):
    pass
