"""
Exception hierarchy for the speech pipeline.

Every error carries the process exit code the command line reports for it:
1 usage error, 2 data error, 3 numeric failure.
"""


class PipelineError(Exception):
    exit_code = 2


class UsageError(PipelineError):
    exit_code = 1


class ConfigError(UsageError, ValueError):
    pass


class TractabilityError(UsageError, ValueError):
    """Raised when an exhaustive oracle is asked for an instance it cannot enumerate."""


class DataError(PipelineError, ValueError):
    exit_code = 2


class SignalError(DataError):
    pass


class ShapeError(DataError):
    pass


class AlphabetError(DataError):
    pass


class OutOfVocabularyError(AlphabetError):
    pass


class InfeasibleTargetError(DataError):
    pass


class CorpusError(DataError):
    pass


class ManifestError(DataError):
    pass


class AudioFormatError(DataError):
    pass


class CheckpointError(DataError):
    pass


class CheckpointVersionError(CheckpointError):
    pass


class NumericError(PipelineError):
    exit_code = 3


class DivergenceError(NumericError):
    pass


class GradientCheckError(NumericError):
    pass
