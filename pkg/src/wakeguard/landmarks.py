"""Landmark frame types, region extraction, and the JSONL wire format.

Coordinates follow the dlib 68-point convention (0-based indices here):
jaw 0-16, brows 17-26, nose 27-35, left eye 36-41, right eye 42-47,
outer lip 48-59, inner lip 60-67. "Left" means image-left.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import IO, Iterable, Iterator

import numpy as np

from .errors import FaceNotPresent, MalformedFrame

NUM_POINTS = 68

LEFT_EYE = list(range(36, 42))
RIGHT_EYE = list(range(42, 48))

# Inner-lip octagon in feature order: A/B are the mouth corners, C-D, E-F,
# G-H the vertical pairs from corner A inward.
MOUTH_A = 60
MOUTH_B = 64
MOUTH_UPPER = [61, 62, 63]
MOUTH_LOWER = [67, 66, 65]


class AlertnessLabel(IntEnum):
    ALERT = 0
    DROWSY = 1


@dataclass(frozen=True, eq=False)
class LandmarkFrame:
    """One timestamped landmark observation.

    ``points`` is a (68, 2) float array when a face was detected, else
    shape (0, 2). Construction does not validate geometry; the wire parser
    and the extraction ops enforce their own contracts.
    """

    frame_index: int
    t_ms: int
    face_present: bool
    points: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    confidence: float | None = None

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or (pts.size and pts.shape[1] != 2):
            raise MalformedFrame(f"points must be (N, 2), got {pts.shape}")
        pts = pts.reshape(-1, 2)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, LandmarkFrame):
            return NotImplemented
        return (
            self.frame_index == other.frame_index
            and self.t_ms == other.t_ms
            and self.face_present == other.face_present
            and self.confidence == other.confidence
            and np.array_equal(self.points, other.points)
        )


@dataclass(frozen=True)
class EyeLandmarks:
    """Six eye-contour points p1..p6: p1/p4 the horizontal corners,
    p2/p3 upper lid, p6/p5 lower lid (matching curve order p2-p6, p3-p5)."""

    points: np.ndarray

    @property
    def p1(self) -> np.ndarray:
        return self.points[0]

    @property
    def p2(self) -> np.ndarray:
        return self.points[1]

    @property
    def p3(self) -> np.ndarray:
        return self.points[2]

    @property
    def p4(self) -> np.ndarray:
        return self.points[3]

    @property
    def p5(self) -> np.ndarray:
        return self.points[4]

    @property
    def p6(self) -> np.ndarray:
        return self.points[5]


@dataclass(frozen=True)
class MouthLandmarks:
    """Inner-lip octagon: corners a/b plus upper (c, e, g) and lower
    (d, f, h) points forming three vertical chords."""

    a: np.ndarray
    b: np.ndarray
    upper: np.ndarray  # (3, 2): c, e, g
    lower: np.ndarray  # (3, 2): d, f, h


@dataclass(frozen=True)
class SessionMeta:
    subject_id: str
    session_id: str
    fps_nominal: float
    label: AlertnessLabel | None = None
    source_path: str | None = None


def _check_region(frame: LandmarkFrame, indices: list[int]) -> np.ndarray:
    if not frame.face_present:
        raise FaceNotPresent(f"frame {frame.frame_index} has no face")
    if frame.points.shape != (NUM_POINTS, 2):
        raise MalformedFrame(
            f"frame {frame.frame_index}: expected {NUM_POINTS} points, "
            f"got {frame.points.shape[0]}"
        )
    region = frame.points[indices]
    if not np.isfinite(region).all():
        raise MalformedFrame(f"frame {frame.frame_index}: non-finite coordinates")
    return region


def extract_eye_landmarks(frame: LandmarkFrame, side: str) -> EyeLandmarks:
    """Pull one eye's six contour points out of a frame.

    side is "left" or "right" (image-left / image-right).
    """
    if side == "left":
        idx = LEFT_EYE
    elif side == "right":
        idx = RIGHT_EYE
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    return EyeLandmarks(points=_check_region(frame, idx))


def extract_mouth_landmarks(frame: LandmarkFrame) -> MouthLandmarks:
    upper = _check_region(frame, MOUTH_UPPER)
    lower = _check_region(frame, MOUTH_LOWER)
    corners = _check_region(frame, [MOUTH_A, MOUTH_B])
    return MouthLandmarks(a=corners[0], b=corners[1], upper=upper, lower=lower)


def frame_to_json(frame: LandmarkFrame) -> str:
    """Serialize one frame to its wire line (no trailing newline)."""
    obj: dict = {
        "frame": int(frame.frame_index),
        "t_ms": int(frame.t_ms),
        "face": bool(frame.face_present),
    }
    if frame.confidence is not None:
        obj["conf"] = float(frame.confidence)
    if frame.face_present:
        obj["points"] = [[float(x), float(y)] for x, y in frame.points]
    return json.dumps(obj, separators=(",", ":"))


def frame_from_json(line: str) -> LandmarkFrame:
    """Parse and validate one wire line."""
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedFrame(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedFrame("frame record must be a JSON object")
    try:
        frame_index = obj["frame"]
        t_ms = obj["t_ms"]
        face = obj["face"]
    except KeyError as exc:
        raise MalformedFrame(f"missing field {exc.args[0]!r}") from exc
    if not isinstance(frame_index, int) or isinstance(frame_index, bool):
        raise MalformedFrame("'frame' must be an integer")
    if not isinstance(t_ms, int) or isinstance(t_ms, bool):
        raise MalformedFrame("'t_ms' must be an integer")
    if not isinstance(face, bool):
        raise MalformedFrame("'face' must be a boolean")
    conf = obj.get("conf")
    if conf is not None and not isinstance(conf, (int, float)):
        raise MalformedFrame("'conf' must be a number")

    if face:
        pts = obj.get("points")
        if pts is None:
            raise MalformedFrame("face frame without 'points'")
        arr = np.asarray(pts, dtype=np.float64)
        if arr.shape != (NUM_POINTS, 2):
            raise MalformedFrame(
                f"'points' must be {NUM_POINTS}x2, got shape {arr.shape}"
            )
        if not np.isfinite(arr).all():
            raise MalformedFrame("'points' contains non-finite values")
    else:
        if "points" in obj:
            raise MalformedFrame("faceless frame must omit 'points'")
        arr = np.empty((0, 2))

    return LandmarkFrame(
        frame_index=frame_index,
        t_ms=t_ms,
        face_present=face,
        points=arr,
        confidence=None if conf is None else float(conf),
    )


def read_landmarks(source: str | Path | IO[str]) -> Iterator[LandmarkFrame]:
    """Stream frames out of a landmark JSONL file. Blank lines are skipped."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            yield from read_landmarks(fh)
        return
    for line in source:
        line = line.strip()
        if line:
            yield frame_from_json(line)


def write_landmarks(frames: Iterable[LandmarkFrame], dest: str | Path | IO[str]) -> int:
    """Write frames as JSONL. Returns the number of lines written."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8") as fh:
            return write_landmarks(frames, fh)
    n = 0
    for frame in frames:
        dest.write(frame_to_json(frame))
        dest.write("\n")
        n += 1
    return n
