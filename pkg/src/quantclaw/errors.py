"""Exception hierarchy shared across the gateway and analytics modules."""


class QuantClawError(Exception):
    """Base class for all quantclaw errors."""


class DomainError(QuantClawError):
    """An operation was called with a value outside its mathematical domain."""


class ConfigError(QuantClawError):
    """Invalid configuration (bad thresholds, malformed files, unknown ids)."""


class ValidationError(QuantClawError):
    """A mutation or input record failed validation; no state was changed."""


class InsufficientDataError(QuantClawError):
    """Too few usable data points to produce a result."""

    def __init__(self, message, excluded=None):
        super().__init__(message)
        self.excluded = list(excluded) if excluded else []


class ProtocolError(QuantClawError):
    """A wire-format payload did not match the expected schema."""


class DetectionBackendError(QuantClawError):
    """The classifier backend was unreachable or timed out."""


class PoolExhaustedError(QuantClawError):
    """No healthy variant exists at or above the requested precision."""


class UpstreamTimeoutError(QuantClawError):
    """Upstream variant did not answer within the forwarding timeout."""


class UpstreamDownError(QuantClawError):
    """Upstream variant refused the connection."""


class TelemetryError(QuantClawError):
    """Journal storage failure; observability is best-effort."""


class SequenceRangeError(QuantClawError):
    """Requested stream position is beyond the journal head."""
