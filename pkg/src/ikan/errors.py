"""Exception hierarchy shared by all ikan modules."""


class IkanError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(IkanError):
    """Array shapes incompatible with an operation's contract."""


class WindowTooShortError(IkanError):
    """Time axis too short for the requested convolution or window."""


class LabelError(IkanError):
    """A class label lies outside its admissible range."""


class RangeError(IkanError):
    """Degenerate or inverted numeric range."""


class TaskRangeError(IkanError):
    """Task id outside the configured task count."""


class StateError(IkanError):
    """Operation invoked before required state exists (cache, matrix column, ...)."""


class CapacityError(IkanError):
    """Registry already holds the configured maximum number of tasks."""


class AmbiguousShapeError(IkanError):
    """Two tasks share an input shape and no explicit id was given."""


class UnknownTaskError(IkanError):
    """Input shape does not match any registered task."""


class EmptyDataError(IkanError):
    """An operation received zero samples."""


class DatasetFormatError(IkanError):
    """Dataset directory violates the on-disk format."""


class SchemaError(IkanError):
    """CSV contents disagree with the dataset metadata."""


class TrainingDivergedError(IkanError):
    """Loss became non-finite during training."""
