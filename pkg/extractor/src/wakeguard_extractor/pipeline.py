"""End-to-end extraction: video source to landmark JSONL."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import cv2

from .detect import build_detector
from .face68 import face_landmarks
from .video import parse_source, read_frames, resample

log = logging.getLogger(__name__)


@dataclass
class ExtractorConfig:
    source: str
    output_path: Path
    target_fps: Optional[float] = None
    contrast_enhancement: bool = True
    detector: Optional[str] = None

    def __post_init__(self) -> None:
        self.output_path = Path(self.output_path)
        if self.target_fps is not None and not self.target_fps > 0:
            raise ValueError(f"target_fps must be positive, got {self.target_fps}")
        if self.detector not in (None, "hog", "cascade"):
            raise ValueError(f"unknown detector {self.detector!r}")


@dataclass(frozen=True)
class ExtractSummary:
    frames: int
    detected: int
    output_path: Path
    detector: str

    @property
    def detection_rate(self) -> float:
        if self.frames == 0:
            return 0.0
        return self.detected / self.frames


def _face_line(index: int, t_ms: int, points) -> str:
    payload = {
        "frame": index,
        "t_ms": t_ms,
        "face": True,
        "points": [[float(x), float(y)] for x, y in points],
    }
    return json.dumps(payload, separators=(",", ":"))


def _faceless_line(index: int, t_ms: int) -> str:
    return json.dumps(
        {"frame": index, "t_ms": t_ms, "face": False}, separators=(",", ":")
    )


def extract(config: ExtractorConfig) -> ExtractSummary:
    """Run the full adapter pipeline and write one JSON line per frame.

    Frames are re-indexed contiguously from zero after any resampling so
    the output stream stands on its own.
    """
    detector_name, detector = build_detector(config.detector)

    frames = read_frames(parse_source(config.source))
    if config.target_fps is not None:
        frames = resample(frames, config.target_fps)

    total = 0
    detected = 0
    with open(config.output_path, "w", encoding="utf-8") as out:
        for index, (t_ms, image) in enumerate(frames):
            gray = cv2.cvtColor(image, cv2.COLOR_BGR2GRAY)
            if config.contrast_enhancement:
                gray = cv2.equalizeHist(gray)
            box = detector(gray)
            if box is None:
                out.write(_faceless_line(index, t_ms) + "\n")
            else:
                points = face_landmarks(box)
                out.write(_face_line(index, t_ms, points) + "\n")
                detected += 1
            total += 1

    log.info("extracted %d/%d frames with faces from %s", detected, total,
             config.source)
    return ExtractSummary(
        frames=total,
        detected=detected,
        output_path=config.output_path,
        detector=detector_name,
    )
