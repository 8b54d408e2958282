"""Exception hierarchy shared by every stage of the pipeline."""


class DeepTemporalError(ValueError):
    """Base class for validation failures raised by this package."""


class ParseError(DeepTemporalError):
    pass


class DimensionError(DeepTemporalError):
    pass


class ConfigurationError(DeepTemporalError):
    pass


class SplitError(DeepTemporalError):
    pass


class DegenerateFrameError(DeepTemporalError):
    pass


class ShapeError(DeepTemporalError):
    pass


class NumericOverflowError(DeepTemporalError, ArithmeticError):
    pass


class ConsistencyError(DeepTemporalError):
    pass


class FormatError(DeepTemporalError):
    pass


class AlignmentError(DeepTemporalError):
    pass


class EmptySequenceError(DeepTemporalError):
    pass
