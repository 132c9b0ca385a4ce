"""Streaming alertness monitor.

The monitor consumes an ordered landmark frame stream and emits events:

  CalibrationStarted   first frame seen
  CalibrationComplete  baseline fitted after the calibration window
  StateDecision        one smoothed-window classification (state + score)
  RepositionCue        face lost longer than the threshold
  FaceReacquired       face back after a RepositionCue
  LowAlertnessAlert    two consecutive Drowsy decisions

Decisions are made on the component-wise mean of the last
smoothing_window_frames feature-valid frames, normalized against the
baseline calibrated from this same stream. Everything is deterministic:
same frames in, same events out, bit for bit.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Iterator, Sequence

import numpy as np

from .classifier import KnnModel, predict
from .errors import (
    CalibrationFailed,
    EmptyWindow,
    MixedNormalization,
    NonMonotonicTimestamps,
)
from .features import (
    BaselineStats,
    FeatureVector,
    fit_baseline,
    normalize,
    try_compute_features,
)
from .landmarks import AlertnessLabel, LandmarkFrame

DECISION_MODES = ("knn", "baseline_deviation")


class MonitorState(Enum):
    CALIBRATING = "calibrating"
    TRACKING = "tracking"
    FACE_LOST = "face_lost"
    LOW_ALERTNESS = "low_alertness"


@dataclass(frozen=True)
class MonitorConfig:
    calibration_duration_ms: int = 30_000
    smoothing_window_frames: int = 10
    face_lost_threshold_ms: int = 2_000
    decision_mode: str = "knn"
    deviation_threshold_z: float = 2.0
    min_valid_fraction: float = 0.5
    escalation_decisions: int = 2
    decision_stride_frames: int = 1
    min_calibration_frames: int = 15

    def __post_init__(self) -> None:
        if self.calibration_duration_ms <= 0:
            raise ValueError("calibration_duration_ms must be positive")
        if self.smoothing_window_frames < 1:
            raise ValueError("smoothing_window_frames must be >= 1")
        if self.face_lost_threshold_ms <= 0:
            raise ValueError("face_lost_threshold_ms must be positive")
        if self.decision_mode not in DECISION_MODES:
            raise ValueError(
                f"decision_mode must be one of {DECISION_MODES}, "
                f"got {self.decision_mode!r}"
            )
        if not 0.0 <= self.min_valid_fraction <= 1.0:
            raise ValueError("min_valid_fraction must be in [0, 1]")
        if self.escalation_decisions < 1:
            raise ValueError("escalation_decisions must be >= 1")
        if self.decision_stride_frames < 1:
            raise ValueError("decision_stride_frames must be >= 1")
        if self.min_calibration_frames < 2:
            raise ValueError("min_calibration_frames must be >= 2")


@dataclass(frozen=True)
class MonitorEvent:
    t_ms: int
    kind: str
    state: AlertnessLabel | None = None
    score: float | None = None
    # carried for programmatic callers, never serialized
    baseline: BaselineStats | None = field(default=None, compare=False)


def event_to_json(event: MonitorEvent) -> str:
    obj: dict = {"t_ms": int(event.t_ms), "kind": event.kind}
    if event.state is not None:
        obj["state"] = event.state.name
    if event.score is not None:
        obj["score"] = float(event.score)
    return json.dumps(obj, separators=(",", ":"))


def smooth_window(vectors: Sequence[FeatureVector]) -> FeatureVector:
    """Component-wise mean of a window of feature vectors."""
    if not vectors:
        raise EmptyWindow("cannot smooth an empty window")
    flags = {v.normalized for v in vectors}
    if len(flags) != 1:
        raise MixedNormalization("window mixes raw and normalized vectors")
    mat = np.stack([v.as_array() for v in vectors])
    return FeatureVector.from_array(mat.mean(axis=0), normalized=flags.pop())


def run_monitor(
    frames: Iterable[LandmarkFrame],
    config: MonitorConfig | None = None,
    model: KnnModel | None = None,
    subject_id: str = "live",
) -> Iterator[MonitorEvent]:
    """Drive the monitor over a frame stream, yielding events as they occur.

    The baseline is always calibrated from this stream's opening alert
    phase; a knn-mode model contributes only the trained neighbors. The
    stream must end at or after calibration, otherwise CalibrationFailed.
    """
    cfg = config if config is not None else MonitorConfig()
    if cfg.decision_mode == "knn" and model is None:
        raise ValueError("knn decision mode needs a trained model")

    state = MonitorState.CALIBRATING
    t_start: int | None = None
    prev_t: int | None = None
    calib: list[FeatureVector] = []
    baseline: BaselineStats | None = None

    window: list[FeatureVector] = []
    validity: list[tuple[int, bool]] = []  # face-present frames, trailing 1 s
    absent_since: int | None = None
    drowsy_run = 0
    valid_count = 0

    for frame in frames:
        t = int(frame.t_ms)
        if prev_t is not None and t < prev_t:
            raise NonMonotonicTimestamps(f"t_ms went from {prev_t} to {t}")
        prev_t = t

        if t_start is None:
            t_start = t
            yield MonitorEvent(t_ms=t, kind="CalibrationStarted")

        if state is MonitorState.CALIBRATING:
            if t - t_start >= cfg.calibration_duration_ms:
                if len(calib) < cfg.min_calibration_frames:
                    raise CalibrationFailed(
                        f"only {len(calib)} feature-valid frames in "
                        f"{cfg.calibration_duration_ms} ms"
                    )
                baseline = fit_baseline(
                    calib, subject_id, min_frames=cfg.min_calibration_frames
                )
                yield MonitorEvent(
                    t_ms=t, kind="CalibrationComplete", baseline=baseline
                )
                state = MonitorState.TRACKING
                # current frame falls through into tracking below
            else:
                v = try_compute_features(frame)
                if v is not None:
                    calib.append(v)
                continue

        # face loss bookkeeping
        if not frame.face_present:
            if absent_since is None:
                absent_since = t
            if (
                state in (MonitorState.TRACKING, MonitorState.LOW_ALERTNESS)
                and t - absent_since >= cfg.face_lost_threshold_ms
            ):
                state = MonitorState.FACE_LOST
                window.clear()
                validity.clear()
                drowsy_run = 0
                yield MonitorEvent(t_ms=t, kind="RepositionCue")
            continue

        absent_since = None
        if state is MonitorState.FACE_LOST:
            state = MonitorState.TRACKING
            yield MonitorEvent(t_ms=t, kind="FaceReacquired")

        v = try_compute_features(frame)

        # reset the window when the trailing second turns mostly invalid
        validity.append((t, v is not None))
        while validity and validity[0][0] <= t - 1000:
            validity.pop(0)
        valid_in_span = sum(1 for _, ok in validity if ok)
        if valid_in_span / len(validity) < cfg.min_valid_fraction:
            window.clear()

        if v is None:
            continue

        window.append(v)
        if len(window) > cfg.smoothing_window_frames:
            window.pop(0)
        valid_count += 1

        if (
            len(window) == cfg.smoothing_window_frames
            and valid_count % cfg.decision_stride_frames == 0
        ):
            assert baseline is not None
            smoothed = normalize(smooth_window(window), baseline)
            if cfg.decision_mode == "knn":
                assert model is not None
                label, score = predict(model, smoothed)
            else:
                score = smoothed.moe
                label = (
                    AlertnessLabel.DROWSY
                    if score >= cfg.deviation_threshold_z
                    else AlertnessLabel.ALERT
                )
            yield MonitorEvent(
                t_ms=t, kind="StateDecision", state=label, score=float(score)
            )

            if label is AlertnessLabel.DROWSY:
                drowsy_run += 1
                if (
                    drowsy_run >= cfg.escalation_decisions
                    and state is not MonitorState.LOW_ALERTNESS
                ):
                    state = MonitorState.LOW_ALERTNESS
                    yield MonitorEvent(t_ms=t, kind="LowAlertnessAlert")
            else:
                drowsy_run = 0
                if state is MonitorState.LOW_ALERTNESS:
                    state = MonitorState.TRACKING

    if state is MonitorState.CALIBRATING:
        raise CalibrationFailed(
            "stream ended during calibration "
            f"({len(calib)} feature-valid frames collected)"
        )
