"""Extractor failure taxonomy."""


class ExtractorError(Exception):
    """Base class for everything this adapter raises on purpose."""


class SourceUnreadable(ExtractorError):
    """The video file or camera cannot be opened or decoded."""


class DetectorUnavailable(ExtractorError):
    """The requested face detector backend is not importable here."""
