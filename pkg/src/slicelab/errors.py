"""Exception hierarchy shared by every module."""


class SliceLabError(Exception):
    """Base class for all library errors."""


class ValidationError(SliceLabError, ValueError):
    """Bad input; the CLI maps these to exit code 2."""


class OutOfDomain(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class SingularMatrix(ValidationError):
    pass


class DegenerateHull(ValidationError):
    pass


class DepthTooLarge(ValidationError):
    pass


class InsufficientData(ValidationError):
    pass


class EmptyCloud(ValidationError):
    pass


class ConeNotInvariant(SliceLabError):
    pass


class MassVanishes(SliceLabError):
    """The slice misses the graph, so pointwise dimension is undefined (not 0)."""


class ResolutionTooFine(SliceLabError):
    pass
