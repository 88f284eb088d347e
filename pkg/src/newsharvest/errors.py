"""Exception hierarchy shared across pipeline stages."""

from __future__ import annotations


class HarvestError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(HarvestError):
    pass


class RangeError(ConfigError):
    pass


class FetchError(HarvestError):
    def __init__(self, message: str, query_digest: str | None = None, url: str | None = None):
        super().__init__(message)
        self.query_digest = query_digest
        self.url = url


class ListingParseError(HarvestError):
    def __init__(self, message: str, body: str = ""):
        super().__init__(message)
        self.body = body


class ResolutionError(HarvestError):
    def __init__(self, message: str, url: str, status: int | None = None, final_url: str | None = None):
        super().__init__(message)
        self.url = url
        self.status = status
        self.final_url = final_url


class CorpusError(HarvestError):
    def __init__(self, message: str, url: str | None = None):
        super().__init__(message)
        self.url = url


class ServerStartupError(HarvestError):
    pass


class UrlError(HarvestError, ValueError):
    pass


class PreconditionError(HarvestError):
    pass


class ExtractionError(HarvestError):
    pass


class DomainError(HarvestError, ValueError):
    pass


class SnapshotError(HarvestError):
    pass


class SequencingError(HarvestError):
    pass


class DelimitedImportError(HarvestError):
    """Raised when a delimited import lacks mandatory columns."""


class MergeError(HarvestError):
    pass


class StoreIOError(HarvestError, OSError):
    pass
