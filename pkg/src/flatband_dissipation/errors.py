"""Exception hierarchy shared by all modules."""


class FlatBandError(Exception):
    """Base class for every error raised by this package."""


class UnknownModel(FlatBandError, ValueError):
    pass


class SizeTooSmall(FlatBandError, ValueError):
    pass


class InvalidParam(FlatBandError, ValueError):
    pass


class NumericalFailure(FlatBandError, RuntimeError):
    pass


class AmbiguousBands(FlatBandError, ValueError):
    pass


class NoExactCls(FlatBandError, ValueError):
    pass


class NotBilayer(FlatBandError, ValueError):
    pass


class UnknownChainStructure(FlatBandError, ValueError):
    pass


class IndexOutOfRange(FlatBandError, IndexError):
    pass


class DimensionMismatch(FlatBandError, ValueError):
    pass


class DimensionTooLarge(FlatBandError, MemoryError):
    pass


class NoZeroEigenvalue(FlatBandError, RuntimeError):
    pass


class NotConverged(FlatBandError, RuntimeError):
    pass


class NotPure(FlatBandError, ValueError):
    pass


class BadCount(FlatBandError, ValueError):
    pass


class BadWindow(FlatBandError, ValueError):
    pass


class ConfigError(FlatBandError, ValueError):
    pass


class BadCsv(FlatBandError, ValueError):
    pass
