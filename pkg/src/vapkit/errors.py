"""Exception hierarchy. The CLI maps these onto exit codes."""


class VapError(Exception):
    """Base class for all vapkit errors."""


class ConfigurationError(VapError):
    """Invalid parameters or config file contents."""


class IngestionError(VapError):
    """Corpus data that fails validation."""


class CodecError(VapError):
    pass


class WindowBoundsError(VapError):
    pass


class NormalizationError(VapError):
    pass


class HeadFormatError(VapError):
    pass


class UnsupportedTaskError(VapError):
    pass


class TrainingError(VapError):
    pass


class EvaluationError(VapError):
    pass


class CalibrationError(EvaluationError):
    pass


class InvariantError(VapError):
    """An internal consistency check failed; indicates a bug."""
