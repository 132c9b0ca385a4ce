"""Frame decoding and rate resampling.

Timestamps come from the container clock (CAP_PROP_POS_MSEC queried after
each read). Containers that report a stalled clock fall back to
frame-ordinal / nominal-fps timing so the output stays non-decreasing.
"""
from __future__ import annotations

from pathlib import Path
from typing import Iterable, Iterator

import cv2
import numpy as np

from .errors import SourceUnreadable

FALLBACK_FPS = 30.0


def parse_source(text: str) -> str | int:
    """'cam:N' selects camera index N; anything else is a file path."""
    if text.startswith("cam:"):
        suffix = text[4:]
        if not suffix.isdigit():
            raise SourceUnreadable(f"bad camera spec {text!r}, want cam:<index>")
        return int(suffix)
    return text


def open_source(source: str | int) -> cv2.VideoCapture:
    if isinstance(source, str) and not Path(source).exists():
        raise SourceUnreadable(f"no such file: {source}")
    cap = cv2.VideoCapture(source)
    if not cap.isOpened():
        cap.release()
        raise SourceUnreadable(f"cannot open video source {source!r}")
    return cap


def read_frames(source: str | int) -> Iterator[tuple[int, np.ndarray]]:
    """Yield (t_ms, BGR image) for every decodable frame, in order."""
    cap = open_source(source)
    fps = cap.get(cv2.CAP_PROP_FPS)
    if not fps or fps <= 0:
        fps = FALLBACK_FPS
    index = 0
    last_t = -1
    try:
        while True:
            ok, image = cap.read()
            if not ok:
                break
            raw = cap.get(cv2.CAP_PROP_POS_MSEC)
            if raw <= 0.0 and index > 0:
                raw = index * 1000.0 / fps
            t_ms = max(int(round(raw)), last_t)
            last_t = t_ms
            yield t_ms, image
            index += 1
    finally:
        cap.release()


def resample(
    frames: Iterable[tuple[int, np.ndarray]], target_fps: float
) -> Iterator[tuple[int, np.ndarray]]:
    """Keep the first frame at or after each 1/target_fps instant."""
    if target_fps <= 0:
        raise ValueError("target_fps must be positive")
    period_ms = 1000.0 / target_fps
    taken = 0
    origin: int | None = None
    for t_ms, image in frames:
        if origin is None:
            origin = t_ms
        if t_ms - origin >= taken * period_ms:
            yield t_ms, image
            taken += 1
