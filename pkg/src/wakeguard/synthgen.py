"""Deterministic synthetic landmark sessions with ground-truth labels.

A template 68-point face is modulated analytically: eye-point vertical
offsets are solved so a frame's EAR equals the scheduled value exactly
(before jitter), and inner-lip offsets do the same for MAR. Blinks
collapse the eyes transiently, yawns widen the mouth transiently, drowsy
sessions scale baseline openness down (eyes) and up (mouth). Gaussian
point jitter and all schedules come from a seeded PCG64 generator, so a
(profile, label) pair always produces the identical session bit for bit.

No physiological realism is claimed; the generator exists so end-to-end
tests have a corpus whose statistics move in the documented drowsy
directions (EAR/PUC down, MAR/MOE up).
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .dataset import (
    LABEL_ALERT,
    LABEL_DROWSY,
    DatasetManifest,
    ManifestEntry,
    write_manifest,
)
from .errors import InvalidProfile
from .landmarks import AlertnessLabel, LandmarkFrame, write_landmarks

# Fixed face geometry (pixels). Eye width 100 gives EAR = h / 50 for a
# vertical half-opening of h; inner-lip width 40 gives MAR = v / 20. The
# narrow mouth is deliberate: pixel jitter costs MAR proportionally more
# than EAR, mirroring the real-world weakness of mouth landmarks.
EYE_WIDTH = 100.0
MOUTH_WIDTH = 40.0
LEFT_EYE_ORIGIN = (195.0, 210.0)
RIGHT_EYE_ORIGIN = (345.0, 210.0)
MOUTH_LEFT = (300.0, 330.0)

BLINK_FLOOR = 0.12  # eye openness multiplier at full blink
YAWN_GAIN = 2.5  # mouth openness multiplier at full yawn


@dataclass(frozen=True)
class SynthProfile:
    seed: int = 0
    fps: float = 10.0
    duration_s: float = 120.0
    base_eye_openness: float = 0.28
    base_mouth_openness: float = 0.40
    blink_rate_hz: float = 0.05
    blink_duration_ms: float = 150.0
    yawn_rate_per_min: float = 0.25
    yawn_duration_ms: float = 1800.0
    drowsy_ear_scale: float = 0.75
    drowsy_mar_scale: float = 1.2
    jitter_px: float = 1.5

    def __post_init__(self) -> None:
        if self.fps <= 0:
            raise InvalidProfile("fps must be positive")
        if self.duration_s <= 0:
            raise InvalidProfile("duration_s must be positive")
        if self.base_eye_openness <= 0 or self.base_mouth_openness <= 0:
            raise InvalidProfile("base openness values must be positive")
        if self.drowsy_ear_scale <= 0 or self.drowsy_mar_scale <= 0:
            raise InvalidProfile("drowsy scales must be positive")
        for name in ("blink_rate_hz", "blink_duration_ms", "yawn_rate_per_min",
                     "yawn_duration_ms", "jitter_px"):
            if getattr(self, name) < 0:
                raise InvalidProfile(f"{name} must be >= 0")

    def to_dict(self) -> dict:
        return asdict(self)


def _static_template() -> np.ndarray:
    """All 68 points for a neutral face; eye and inner-lip verticals get
    overwritten per frame."""
    pts = np.zeros((68, 2))
    # jaw 0-16: half-ellipse through the chin
    for i in range(17):
        theta = math.pi - i * math.pi / 16.0
        pts[i] = (320.0 + 135.0 * math.cos(theta), 240.0 + 140.0 * math.sin(theta))
    # brows 17-26
    for i in range(5):
        pts[17 + i] = (200.0 + 25.0 * i, 180.0)
        pts[22 + i] = (345.0 + 25.0 * i, 180.0)
    # nose bridge 27-30 and base 31-35
    for i in range(4):
        pts[27 + i] = (320.0, 210.0 + 20.0 * i)
    pts[31:36] = [(300.0, 285.0), (310.0, 290.0), (320.0, 295.0),
                  (330.0, 290.0), (340.0, 285.0)]
    # outer lip 48-59: static ellipse, features never read it
    for j in range(12):
        theta = math.pi - j * math.pi / 6.0
        pts[48 + j] = (320.0 + 32.0 * math.cos(theta),
                       330.0 - 18.0 * math.sin(theta))
    return pts


_TEMPLATE = _static_template()


def _face_points(ear: float, mar: float) -> np.ndarray:
    """Template with eyes opened to the requested EAR and inner lip to MAR."""
    pts = _TEMPLATE.copy()
    # EAR = (2h + 2h) / (2 w) = 2h / w, so h = EAR * w / 2
    h = ear * EYE_WIDTH / 2.0
    for base, (x0, y0) in ((36, LEFT_EYE_ORIGIN), (42, RIGHT_EYE_ORIGIN)):
        third = EYE_WIDTH / 3.0
        pts[base + 0] = (x0, y0)
        pts[base + 1] = (x0 + third, y0 - h)
        pts[base + 2] = (x0 + 2 * third, y0 - h)
        pts[base + 3] = (x0 + EYE_WIDTH, y0)
        pts[base + 4] = (x0 + 2 * third, y0 + h)
        pts[base + 5] = (x0 + third, y0 + h)
    # MAR = 3 * 2v / (3 w) = 2v / w, so v = MAR * w / 2
    v = mar * MOUTH_WIDTH / 2.0
    mx, my = MOUTH_LEFT
    quarter = MOUTH_WIDTH / 4.0
    pts[60] = (mx, my)
    pts[61] = (mx + quarter, my - v)
    pts[62] = (mx + 2 * quarter, my - v)
    pts[63] = (mx + 3 * quarter, my - v)
    pts[64] = (mx + MOUTH_WIDTH, my)
    pts[65] = (mx + 3 * quarter, my + v)
    pts[66] = (mx + 2 * quarter, my + v)
    pts[67] = (mx + quarter, my + v)
    return pts


def _poisson_onsets(rng: np.random.Generator, rate_hz: float,
                    duration_s: float, event_s: float) -> list[float]:
    """Non-overlapping event start times (seconds) from exponential gaps."""
    onsets: list[float] = []
    if rate_hz <= 0 or event_s <= 0:
        return onsets
    t = float(rng.exponential(1.0 / rate_hz))
    while t < duration_s:
        onsets.append(t)
        t += event_s + float(rng.exponential(1.0 / rate_hz))
    return onsets


def _envelope(t_s: np.ndarray, onsets: Sequence[float], event_s: float,
              peak: float) -> np.ndarray:
    """Multiplier per frame: 1 away from events, ramping to peak mid-event."""
    env = np.ones_like(t_s)
    for onset in onsets:
        inside = (t_s >= onset) & (t_s < onset + event_s)
        if not inside.any():
            continue
        phase = (t_s[inside] - onset) / event_s
        tri = 1.0 - np.abs(2.0 * phase - 1.0)  # 0 -> 1 -> 0
        env[inside] = 1.0 + (peak - 1.0) * tri
    return env


def generate_session(
    profile: SynthProfile,
    label: AlertnessLabel,
    gaps: Sequence[tuple[int, int]] = (),
) -> tuple[list[LandmarkFrame], AlertnessLabel]:
    """Generate one labeled session.

    gaps is an optional list of [start_ms, end_ms) spans rendered as
    face_present=false frames. Blink/yawn schedules depend only on the
    profile seed (shared across labels), jitter on (seed, label), so the
    drowsy/alert mean-feature ratios track the configured scales.
    """
    n = int(round(profile.duration_s * profile.fps))
    if n < 1:
        raise InvalidProfile("profile yields zero frames")
    t_s = np.arange(n) / profile.fps

    sched = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([profile.seed, 101]))
    )
    blink_onsets = _poisson_onsets(
        sched, profile.blink_rate_hz, profile.duration_s,
        profile.blink_duration_ms / 1000.0,
    )
    yawn_onsets = _poisson_onsets(
        sched, profile.yawn_rate_per_min / 60.0, profile.duration_s,
        profile.yawn_duration_ms / 1000.0,
    )
    blink_env = _envelope(
        t_s, blink_onsets, profile.blink_duration_ms / 1000.0, BLINK_FLOOR
    )
    yawn_env = _envelope(
        t_s, yawn_onsets, profile.yawn_duration_ms / 1000.0, YAWN_GAIN
    )

    if label is AlertnessLabel.DROWSY:
        ear_base = profile.base_eye_openness * profile.drowsy_ear_scale
        mar_base = profile.base_mouth_openness * profile.drowsy_mar_scale
    else:
        ear_base = profile.base_eye_openness
        mar_base = profile.base_mouth_openness
    ear_t = ear_base * blink_env
    mar_t = mar_base * yawn_env

    jitter_rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([profile.seed, int(label), 303]))
    )
    jitter = (
        jitter_rng.normal(0.0, profile.jitter_px, size=(n, 68, 2))
        if profile.jitter_px > 0
        else np.zeros((n, 68, 2))
    )

    frames: list[LandmarkFrame] = []
    for i in range(n):
        t_ms = int(round(i * 1000.0 / profile.fps))
        if any(start <= t_ms < end for start, end in gaps):
            frames.append(
                LandmarkFrame(frame_index=i, t_ms=t_ms, face_present=False)
            )
            continue
        pts = _face_points(float(ear_t[i]), float(mar_t[i])) + jitter[i]
        frames.append(
            LandmarkFrame(frame_index=i, t_ms=t_ms, face_present=True, points=pts)
        )
    return frames, label


def subject_profile(base: SynthProfile, corpus_seed: int, index: int) -> SynthProfile:
    """Derive one subject's profile: fresh seed plus mild anatomy variation."""
    rng = np.random.Generator(
        np.random.PCG64(np.random.SeedSequence([corpus_seed, index]))
    )
    eye_scale = float(rng.uniform(0.9, 1.1))
    mouth_scale = float(rng.uniform(0.9, 1.1))
    return replace(
        base,
        seed=int(rng.integers(2**31)),
        base_eye_openness=base.base_eye_openness * eye_scale,
        base_mouth_openness=base.base_mouth_openness * mouth_scale,
    )


def generate_corpus(
    out_dir: str | Path,
    n_per_class: int,
    seed: int,
    base: SynthProfile | None = None,
) -> DatasetManifest:
    """Write a corpus of n_per_class subjects, each with one alert and one
    drowsy session, plus truth sidecars and a manifest.json."""
    if n_per_class < 1:
        raise InvalidProfile("n_per_class must be >= 1")
    base = base if base is not None else SynthProfile()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for i in range(n_per_class):
        subject_id = f"s{i:03d}"
        profile = subject_profile(base, seed, i)
        for label, raw_label, name in (
            (AlertnessLabel.ALERT, LABEL_ALERT, "alert"),
            (AlertnessLabel.DROWSY, LABEL_DROWSY, "drowsy"),
        ):
            frames, _ = generate_session(profile, label)
            fname = f"{subject_id}_{name}.jsonl"
            write_landmarks(frames, out / fname)
            truth = {
                "session": f"{subject_id}/{name}",
                "label": int(label),
                "profile": profile.to_dict(),
            }
            (out / f"{subject_id}_{name}.truth.json").write_text(
                json.dumps(truth, indent=2) + "\n", encoding="utf-8"
            )
            entries.append(
                ManifestEntry(
                    subject_id=subject_id,
                    session_id=name,
                    label=raw_label,
                    landmarks=fname,
                    fps=profile.fps,
                )
            )
    manifest = DatasetManifest(root=out, entries=tuple(entries))
    write_manifest(
        DatasetManifest(root=Path("."), entries=manifest.entries),
        out / "manifest.json",
    )
    return manifest
