"""Video to landmark-JSONL adapter for the wakeguard monitor."""

from .detect import FaceBox, build_detector, largest
from .errors import DetectorUnavailable, ExtractorError, SourceUnreadable
from .face68 import face_landmarks
from .pipeline import ExtractorConfig, ExtractSummary, extract
from .video import parse_source, read_frames, resample

__all__ = [
    "DetectorUnavailable",
    "ExtractSummary",
    "ExtractorConfig",
    "ExtractorError",
    "FaceBox",
    "SourceUnreadable",
    "build_detector",
    "extract",
    "face_landmarks",
    "largest",
    "parse_source",
    "read_frames",
    "resample",
]
