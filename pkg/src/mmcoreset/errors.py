"""Exception hierarchy shared across the pipeline stages."""


class MMCoresetError(Exception):
    """Base class for all domain errors raised by this package."""


class FormatError(MMCoresetError):
    """Tensor file has a bad magic, version, dtype code, or header field."""


class TruncationError(MMCoresetError):
    """Tensor file length is inconsistent with its header dimensions."""


class DataError(MMCoresetError):
    """Payload contains a non-finite value or violates a data invariant."""


class IoError(MMCoresetError):
    """Underlying file could not be read or written."""


class AlignmentError(MMCoresetError):
    """Modalities disagree on the shared sample count."""


class ManifestError(MMCoresetError):
    """Dataset manifest is malformed or inconsistent with its tensors."""


class DimensionError(MMCoresetError):
    """Operands have incompatible widths."""


class RankError(MMCoresetError):
    """Requested component count is outside the fittable range."""


class DegenerateError(MMCoresetError):
    """Data has no principal direction at the requested rank."""


class ConfigError(MMCoresetError):
    """Configuration value out of range or unparseable."""


class PartitionError(MMCoresetError):
    """Bin partition violates disjointness, coverage, or the size schedule."""


class EmptyError(MMCoresetError):
    """Operation requires a non-empty coreset."""


class ReportError(MMCoresetError):
    """A stage artifact required by the report is missing."""


class PipelineStageError(MMCoresetError):
    """Wraps a stage failure with the stage name; the cause is chained."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause
