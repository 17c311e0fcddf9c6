"""Exception hierarchy shared by all engine stages."""


class EngineError(Exception):
    """Base class for every error raised by this package."""


class FormatError(EngineError):
    """A recording file does not match the documented on-disk format."""


class IntegrityError(EngineError):
    """A recording violates a structural invariant (e.g. ragged channels)."""


class ValidationError(EngineError):
    """An argument or record fails a contract precondition."""


class ConfigError(EngineError):
    """An engine configuration is internally inconsistent or unusable."""


class DegenerateInputError(EngineError):
    """Input carries no usable information (e.g. constant signal for an AR fit)."""


class CoverageError(EngineError):
    """Detector generation cannot find acceptable candidates (self set saturates space)."""


class NotTrainedError(EngineError):
    """A matcher operation was requested on an empty population."""


class SentinelError(EngineError):
    """A sentinel (all-zero) signature was used where a real one is required."""


class PipelineOrderingError(EngineError):
    """Stage outputs for different windows were fused; the stream contract is broken."""


class BundleError(EngineError):
    """A population or export bundle is malformed, truncated or tampered with."""
