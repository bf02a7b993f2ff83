"""Shared exception hierarchy.

Everything the package raises for contract violations derives from
:class:`ArtmodError`, so callers (notably the CLI) can separate data and
configuration problems from genuine bugs.
"""

__all__ = [
    "ArtmodError",
    "BackendError",
    "CacheFormatError",
    "CacheMagicError",
    "CacheTruncatedError",
    "CacheVersionError",
    "ManifestError",
    "ShapeMismatchError",
]


class ArtmodError(Exception):
    """Base class for errors raised by this package."""


class ManifestError(ArtmodError):
    """A manifest file violates the CSV contract."""


class BackendError(ArtmodError):
    """A backend cannot be opened or cannot serve a request."""


class ShapeMismatchError(BackendError):
    """Model output shape disagrees with the declared dimension."""


class CacheFormatError(ArtmodError):
    """An embedding-cache file violates the binary format."""


class CacheMagicError(CacheFormatError):
    """The file does not start with the cache magic bytes."""


class CacheVersionError(CacheFormatError):
    """The file declares a format version this build cannot read."""


class CacheTruncatedError(CacheFormatError):
    """The file ends before its declared records do."""
