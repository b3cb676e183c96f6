"""Exception hierarchy shared across the toolkit."""


class RngAuditError(Exception):
    """Base class for every error raised by rngaudit."""


class UnsupportedLanguageError(RngAuditError, KeyError):
    pass


class InvalidRangeError(RngAuditError, ValueError):
    pass


class TemplateError(RngAuditError, ValueError):
    pass


class ProviderError(RngAuditError):
    """A provider call failed."""


class ProviderRejectedError(ProviderError):
    """Permanent HTTP failure (4xx other than 429)."""

    def __init__(self, status: int, body: str):
        super().__init__(f"provider rejected request: HTTP {status}: {body[:200]}")
        self.status = status
        self.body = body


class TransientExhaustedError(ProviderError):
    def __init__(self, attempts: int, last_error: Exception | None = None):
        super().__init__(f"gave up after {attempts} attempts: {last_error!r}")
        self.attempts = attempts
        self.last_error = last_error


class WireFormatError(ProviderError):
    """The endpoint answered with a body we could not interpret."""


class ScriptCoverageError(RngAuditError, KeyError):
    pass


class ConfigError(RngAuditError, ValueError):
    pass


class EmptyPlanError(ConfigError):
    pass


class PlanDriftError(RngAuditError):
    """The store was written under the same run_id with different plan dimensions."""


class StorageError(RngAuditError, OSError):
    pass


class EmptyCellError(RngAuditError, ValueError):
    pass


class InvalidTemperatureError(RngAuditError, ValueError):
    pass


class EmptyAggregateError(RngAuditError, ValueError):
    pass


class EmptySelectionError(RngAuditError, LookupError):
    pass
