"""Exception hierarchy shared by all modules."""


class NoisyFBError(Exception):
    """Base class for package errors."""


class NotPositiveDefinite(NoisyFBError, ValueError):
    pass


class ConvergenceFailure(NoisyFBError, RuntimeError):
    pass


class InvalidParameter(NoisyFBError, ValueError):
    pass


class DimensionMismatch(NoisyFBError, ValueError):
    pass


class MalformedInstance(NoisyFBError, ValueError):
    pass


class NoStrictInterior(NoisyFBError, ValueError):
    pass


class NumericalFailure(NoisyFBError, RuntimeError):
    pass


class RecoveryFailure(NoisyFBError, RuntimeError):
    pass


class CrossCheckFailure(NoisyFBError, RuntimeError):
    pass


class RankDeficiency(NoisyFBError, ValueError):
    pass


class SchemaError(NoisyFBError, ValueError):
    pass
