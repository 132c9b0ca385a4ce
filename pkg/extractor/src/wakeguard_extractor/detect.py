"""Face detector backends.

Two backends are supported: 'hog' (dlib's frontal-face HOG detector,
preferred because cascades miss profile and partly occluded faces) and
'cascade' (scikit-image's bundled LBP frontal-face cascade). When no
backend is named, hog is used if dlib is importable, cascade otherwise.
Both backends are deterministic for a given input image.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DetectorUnavailable

# exhaustive step_ratio keeps detection deterministic and repeatable
CASCADE_SCALE_FACTOR = 1.2
CASCADE_STEP_RATIO = 1
CASCADE_MIN_SIZE = (48, 48)


@dataclass(frozen=True)
class FaceBox:
    x: int
    y: int
    width: int
    height: int

    @property
    def area(self) -> int:
        return self.width * self.height


Detector = Callable[[np.ndarray], Optional[FaceBox]]


def largest(boxes: list[FaceBox]) -> FaceBox | None:
    """Single-traveler rule: only the biggest face in frame counts.
    Ties break toward the earlier detection for determinism."""
    best: FaceBox | None = None
    for box in boxes:
        if best is None or box.area > best.area:
            best = box
    return best


def _build_hog() -> Detector:
    try:
        import dlib
    except ImportError as exc:
        raise DetectorUnavailable(
            "hog detector needs dlib, which is not installed"
        ) from exc
    hog = dlib.get_frontal_face_detector()

    def detect(gray: np.ndarray) -> FaceBox | None:
        rects = hog(gray, 1)
        boxes = [
            FaceBox(r.left(), r.top(), r.width(), r.height()) for r in rects
        ]
        return largest(boxes)

    return detect


def _build_cascade() -> Detector:
    try:
        from skimage.data import lbp_frontal_face_cascade_filename
        from skimage.feature import Cascade
    except ImportError as exc:
        raise DetectorUnavailable(
            "cascade detector needs scikit-image, which is not installed"
        ) from exc
    cascade = Cascade(lbp_frontal_face_cascade_filename())

    def detect(gray: np.ndarray) -> FaceBox | None:
        h, w = gray.shape[:2]
        found = cascade.detect_multi_scale(
            img=gray,
            scale_factor=CASCADE_SCALE_FACTOR,
            step_ratio=CASCADE_STEP_RATIO,
            min_size=CASCADE_MIN_SIZE,
            max_size=(h, w),
        )
        boxes = [
            FaceBox(int(d["c"]), int(d["r"]), int(d["width"]), int(d["height"]))
            for d in found
        ]
        return largest(boxes)

    return detect


_BACKENDS = {"hog": _build_hog, "cascade": _build_cascade}


def build_detector(name: str | None) -> tuple[str, Detector]:
    """Resolve a backend name (None = hog when available, else cascade)."""
    if name is None:
        try:
            return "hog", _build_hog()
        except DetectorUnavailable:
            return "cascade", _build_cascade()
    if name not in _BACKENDS:
        raise ValueError(f"unknown detector {name!r}, want hog or cascade")
    return name, _BACKENDS[name]()
