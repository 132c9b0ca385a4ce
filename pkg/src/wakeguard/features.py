"""Per-frame alertness features and per-subject baseline normalization.

Four scalar features per frame:

  EAR  eye aspect ratio, (|p2-p6| + |p3-p5|) / (2 |p1-p4|), averaged over
       both eyes
  MAR  mouth aspect ratio over the inner lip, (|CD| + |EF| + |GH|) / (3 |AB|)
  PUC  pupil circularity, 4 pi Area / Perimeter^2 with Area taken from the
       p2-p5 chord as (dist(p2, p5) / 2)^2 pi and Perimeter the closed
       six-point contour, averaged over both eyes
  MOE  mouth over eye, MAR / EAR

All features are translation, rotation and scale invariant, so they can be
compared across subjects only after z-scoring against a per-subject alert
baseline (first 30 feature-valid frames of an alert recording).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .errors import (
    AlreadyNormalized,
    DegenerateGeometry,
    InsufficientBaseline,
    MalformedFrame,
    WakeguardError,
)
from .landmarks import (
    EyeLandmarks,
    LandmarkFrame,
    MouthLandmarks,
    extract_eye_landmarks,
    extract_mouth_landmarks,
)

FEATURE_NAMES = ("ear", "mar", "puc", "moe")

# Denominators below this are treated as degenerate geometry.
DEGENERATE_EPS = 1e-9
# Baseline stds below this are floored and the feature flagged.
STD_EPS = 1e-6

MIN_BASELINE_FRAMES = 15
BASELINE_FRAMES = 30


@dataclass(frozen=True)
class FeatureVector:
    ear: float
    mar: float
    puc: float
    moe: float
    normalized: bool = False
    zero_std: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        # numpy scalars sneak in easily and their repr corrupts CSV dumps
        for name in FEATURE_NAMES:
            object.__setattr__(self, name, float(getattr(self, name)))

    def as_array(self) -> np.ndarray:
        return np.array([self.ear, self.mar, self.puc, self.moe], dtype=np.float64)

    @classmethod
    def from_array(
        cls,
        values: np.ndarray,
        normalized: bool = False,
        zero_std: tuple[str, ...] = (),
    ) -> "FeatureVector":
        ear, mar, puc, moe = (float(v) for v in values)
        return cls(ear, mar, puc, moe, normalized=normalized, zero_std=zero_std)


@dataclass(frozen=True)
class BaselineStats:
    """Alert-phase calibration statistics for one subject.

    mean/std are length-4 arrays in FEATURE_NAMES order; std is the
    population std (ddof=0) of the calibration sample.
    """

    subject_id: str
    mean: np.ndarray
    std: np.ndarray
    n_frames: int

    def __post_init__(self) -> None:
        for name in ("mean", "std"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (4,):
                raise ValueError(f"{name} must have shape (4,), got {arr.shape}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def to_dict(self) -> dict:
        return {
            "subject_id": self.subject_id,
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
            "n_frames": int(self.n_frames),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "BaselineStats":
        return cls(
            subject_id=str(obj["subject_id"]),
            mean=np.asarray(obj["mean"], dtype=np.float64),
            std=np.asarray(obj["std"], dtype=np.float64),
            n_frames=int(obj["n_frames"]),
        )


def identity_baseline(subject_id: str = "corpus") -> BaselineStats:
    """Baseline that leaves vectors unchanged. Stored in models trained on
    corpora where per-subject normalization already happened upstream."""
    return BaselineStats(
        subject_id=subject_id, mean=np.zeros(4), std=np.ones(4), n_frames=0
    )


def _dist(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a, dtype=np.float64) - b))


def compute_ear(eye: EyeLandmarks) -> float:
    """Eye aspect ratio of a single eye."""
    horiz = _dist(eye.p1, eye.p4)
    if horiz < DEGENERATE_EPS:
        raise DegenerateGeometry("eye corner distance ~ 0")
    return (_dist(eye.p2, eye.p6) + _dist(eye.p3, eye.p5)) / (2.0 * horiz)


def compute_mar(mouth: MouthLandmarks) -> float:
    """Mouth aspect ratio over the inner lip octagon."""
    width = _dist(mouth.a, mouth.b)
    if width < DEGENERATE_EPS:
        raise DegenerateGeometry("mouth corner distance ~ 0")
    vertical = sum(_dist(u, l) for u, l in zip(mouth.upper, mouth.lower))
    return vertical / (3.0 * width)


def compute_puc(eye: EyeLandmarks) -> float:
    """Pupil circularity of a single eye.

    Area comes from the p2-p5 chord treated as a diameter, so values above
    1 are possible for wide-open contours.
    """
    radius = _dist(eye.p2, eye.p5) / 2.0
    pts = eye.points
    perimeter = sum(_dist(pts[i], pts[(i + 1) % 6]) for i in range(6))
    if perimeter < DEGENERATE_EPS:
        raise DegenerateGeometry("eye contour perimeter ~ 0")
    area = radius * radius * math.pi
    return 4.0 * math.pi * area / (perimeter * perimeter)


def compute_moe(ear: float, mar: float) -> float:
    """Mouth-over-eye ratio from already-computed raw EAR and MAR."""
    if abs(ear) < DEGENERATE_EPS:
        raise DegenerateGeometry("EAR ~ 0, MOE undefined")
    return mar / ear


def compute_frame_ear(frame: LandmarkFrame) -> float:
    """Mean EAR over both eyes."""
    left = compute_ear(extract_eye_landmarks(frame, "left"))
    right = compute_ear(extract_eye_landmarks(frame, "right"))
    return (left + right) / 2.0


def compute_frame_puc(frame: LandmarkFrame) -> float:
    """Mean PUC over both eyes."""
    left = compute_puc(extract_eye_landmarks(frame, "left"))
    right = compute_puc(extract_eye_landmarks(frame, "right"))
    return (left + right) / 2.0


def compute_features(frame: LandmarkFrame) -> FeatureVector:
    """All four raw features for one frame.

    Raises FaceNotPresent / MalformedFrame / DegenerateGeometry; callers
    that want "feature-invalid means skip" semantics use
    try_compute_features.
    """
    ear = compute_frame_ear(frame)
    mar = compute_mar(extract_mouth_landmarks(frame))
    puc = compute_frame_puc(frame)
    moe = compute_moe(ear, mar)
    return FeatureVector(ear=ear, mar=mar, puc=puc, moe=moe)


def try_compute_features(frame: LandmarkFrame) -> FeatureVector | None:
    """compute_features with failures mapped to None."""
    try:
        return compute_features(frame)
    except WakeguardError:
        return None


def fit_baseline(
    features: Sequence[FeatureVector],
    subject_id: str,
    min_frames: int = MIN_BASELINE_FRAMES,
    max_frames: int = BASELINE_FRAMES,
) -> BaselineStats:
    """Fit per-subject statistics from the first max_frames raw vectors.

    The sample must be raw (not yet normalized) and at least min_frames
    long, else InsufficientBaseline.
    """
    sample = list(features[:max_frames])
    if len(sample) < min_frames:
        raise InsufficientBaseline(
            f"need at least {min_frames} feature-valid frames, got {len(sample)}"
        )
    if any(v.normalized for v in sample):
        raise AlreadyNormalized("baseline must be fit on raw features")
    mat = np.stack([v.as_array() for v in sample])
    return BaselineStats(
        subject_id=subject_id,
        mean=mat.mean(axis=0),
        std=mat.std(axis=0),
        n_frames=len(sample),
    )


def _effective_std(baseline: BaselineStats) -> tuple[np.ndarray, tuple[str, ...]]:
    flagged = tuple(
        name for name, s in zip(FEATURE_NAMES, baseline.std) if s < STD_EPS
    )
    return np.maximum(baseline.std, STD_EPS), flagged


def normalize(v: FeatureVector, baseline: BaselineStats) -> FeatureVector:
    """Z-score v against the subject baseline.

    Zero-variance features are divided by the STD_EPS floor instead and
    listed in the result's zero_std field. Double normalization raises.
    """
    if v.normalized:
        raise AlreadyNormalized("vector is already normalized")
    std, flagged = _effective_std(baseline)
    out = (v.as_array() - baseline.mean) / std
    return FeatureVector.from_array(out, normalized=True, zero_std=flagged)


def denormalize(v: FeatureVector, baseline: BaselineStats) -> FeatureVector:
    """Inverse of normalize under the same baseline."""
    if not v.normalized:
        raise AlreadyNormalized("vector is not normalized")
    std, _ = _effective_std(baseline)
    out = v.as_array() * std + baseline.mean
    return FeatureVector.from_array(out, normalized=False)


@dataclass(frozen=True)
class FeatureRecord:
    """One feature-dump row: provenance plus the vector."""

    frame_index: int
    t_ms: int
    vector: FeatureVector


_CSV_HEADER = ["frame", "t_ms", "ear", "mar", "puc", "moe", "normalized"]


def record_to_json(rec: FeatureRecord) -> str:
    v = rec.vector
    return json.dumps(
        {
            "frame": int(rec.frame_index),
            "t_ms": int(rec.t_ms),
            "ear": v.ear,
            "mar": v.mar,
            "puc": v.puc,
            "moe": v.moe,
            "normalized": v.normalized,
        },
        separators=(",", ":"),
    )


def record_from_json(line: str) -> FeatureRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedFrame(f"invalid JSON: {exc}") from exc
    try:
        vec = FeatureVector(
            ear=float(obj["ear"]),
            mar=float(obj["mar"]),
            puc=float(obj["puc"]),
            moe=float(obj["moe"]),
            normalized=bool(obj.get("normalized", False)),
        )
        return FeatureRecord(int(obj["frame"]), int(obj["t_ms"]), vec)
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedFrame(f"bad feature record: {exc}") from exc


def write_features(
    records: Iterable[FeatureRecord], dest: str | Path | IO[str], fmt: str = "jsonl"
) -> int:
    """Dump feature records as JSONL (default) or CSV."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            return write_features(records, fh, fmt=fmt)
    n = 0
    if fmt == "jsonl":
        for rec in records:
            dest.write(record_to_json(rec))
            dest.write("\n")
            n += 1
    elif fmt == "csv":
        writer = csv.writer(dest)
        writer.writerow(_CSV_HEADER)
        for rec in records:
            v = rec.vector
            writer.writerow(
                [
                    rec.frame_index,
                    rec.t_ms,
                    repr(v.ear),
                    repr(v.mar),
                    repr(v.puc),
                    repr(v.moe),
                    int(v.normalized),
                ]
            )
            n += 1
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return n


def read_features(source: str | Path | IO[str], fmt: str | None = None) -> list[FeatureRecord]:
    """Read a feature dump; format inferred from the extension if not given."""
    if isinstance(source, (str, Path)):
        if fmt is None:
            fmt = "csv" if str(source).endswith(".csv") else "jsonl"
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return read_features(fh, fmt=fmt)
    if fmt == "csv":
        reader = csv.reader(source)
        header = next(reader, None)
        if header != _CSV_HEADER:
            raise MalformedFrame(f"unexpected CSV header {header!r}")
        out = []
        for row in reader:
            frame, t_ms, ear, mar, puc, moe, norm = row
            out.append(
                FeatureRecord(
                    int(frame),
                    int(t_ms),
                    FeatureVector(
                        float(ear),
                        float(mar),
                        float(puc),
                        float(moe),
                        normalized=bool(int(norm)),
                    ),
                )
            )
        return out
    return [record_from_json(line) for line in source if line.strip()]
