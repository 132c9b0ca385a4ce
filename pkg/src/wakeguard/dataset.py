"""Offline corpus tooling: manifests, sampling, splits, sweeps, stats.

A corpus manifest is a JSON file:

  {"root": ".", "entries": [{"subject": "s001", "session": "alert",
    "label": 0, "landmarks": "s001_alert.jsonl", "fps": 24.0}, ...]}

Labels follow the three-state recording convention: 0 alert, 5 low
vigilant, 10 drowsy. Training collapses these to binary; label 5 is
dropped unless explicitly folded into drowsy. Sessions are sampled at
1 frame per second starting at the 40 s mark, features are normalized
per subject against that subject's alert recording, and splits are
seeded permutations (frame-level or subject-level).
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Mapping, Sequence

import numpy as np

from .classifier import (
    DEFAULT_K,
    KSweepRow,
    MetricsReport,
    evaluate,
    mask_label,
    train,
)
from .errors import (
    EmptySession,
    ManifestError,
    MissingAlertBaseline,
    MissingClass,
)
from .features import (
    FEATURE_NAMES,
    FeatureRecord,
    fit_baseline,
    normalize,
    try_compute_features,
)
from .landmarks import AlertnessLabel, LandmarkFrame, read_landmarks

LABEL_ALERT = 0
LABEL_LOW_VIGILANT = 5
LABEL_DROWSY = 10
VALID_LABELS = (LABEL_ALERT, LABEL_LOW_VIGILANT, LABEL_DROWSY)

SAMPLING_START_S = 40.0
SAMPLING_RATE_HZ = 1.0

# Feature-combination sweep order: singles, pairs, triples, all four.
ALL_MASKS: tuple[tuple[str, ...], ...] = (
    ("ear",),
    ("mar",),
    ("puc",),
    ("moe",),
    ("ear", "mar"),
    ("ear", "puc"),
    ("ear", "moe"),
    ("mar", "puc"),
    ("mar", "moe"),
    ("puc", "moe"),
    ("ear", "mar", "puc"),
    ("ear", "mar", "moe"),
    ("ear", "puc", "moe"),
    ("mar", "puc", "moe"),
    ("ear", "mar", "puc", "moe"),
)


@dataclass(frozen=True)
class ManifestEntry:
    subject_id: str
    session_id: str
    label: int
    landmarks: str
    fps: float


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    entries: tuple[ManifestEntry, ...]

    def path_for(self, entry: ManifestEntry) -> Path:
        p = Path(entry.landmarks)
        return p if p.is_absolute() else self.root / p


def load_manifest(path: str | Path) -> DatasetManifest:
    path = Path(path)
    try:
        obj = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(obj, dict) or not isinstance(obj.get("entries"), list):
        raise ManifestError("manifest must be an object with an 'entries' list")
    root = Path(obj.get("root", "."))
    if not root.is_absolute():
        root = path.parent / root
    entries = []
    for i, raw in enumerate(obj["entries"]):
        try:
            entry = ManifestEntry(
                subject_id=str(raw["subject"]),
                session_id=str(raw["session"]),
                label=int(raw["label"]),
                landmarks=str(raw["landmarks"]),
                fps=float(raw.get("fps", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestError(f"entry {i} is malformed: {exc}") from exc
        if entry.label not in VALID_LABELS:
            raise ManifestError(
                f"entry {i}: label {entry.label} not in {VALID_LABELS}"
            )
        entries.append(entry)
    manifest = DatasetManifest(root=root, entries=tuple(entries))
    for entry in manifest.entries:
        p = manifest.path_for(entry)
        if not p.is_file():
            raise ManifestError(f"landmark file missing: {p}")
    return manifest


def write_manifest(manifest: DatasetManifest, path: str | Path) -> None:
    obj = {
        "root": str(manifest.root),
        "entries": [
            {
                "subject": e.subject_id,
                "session": e.session_id,
                "label": e.label,
                "landmarks": e.landmarks,
                "fps": e.fps,
            }
            for e in manifest.entries
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def sample_frames(
    frames: Sequence[LandmarkFrame],
    start_s: float = SAMPLING_START_S,
    rate_hz: float = SAMPLING_RATE_HZ,
) -> tuple[list[LandmarkFrame], list[str]]:
    """Downsample to rate_hz starting at start_s into the recording.

    For each target instant the first not-yet-used frame at or after it is
    taken, so the result is strictly increasing in time even when the
    source rate dips below the sampling rate. Sessions that end before
    start_s return no frames plus a warning.
    """
    if rate_hz <= 0:
        raise ValueError("rate_hz must be positive")
    warnings: list[str] = []
    if not frames:
        return [], ["empty session"]
    last_t = frames[-1].t_ms
    start_ms = start_s * 1000.0
    if last_t < start_ms:
        warnings.append(
            f"session ends at {last_t} ms, before the {start_ms:.0f} ms "
            "sampling start; no frames sampled"
        )
        return [], warnings
    period_ms = 1000.0 / rate_hz
    picked: list[LandmarkFrame] = []
    pos = 0
    j = 0
    while True:
        target = start_ms + j * period_ms
        if target > last_t:
            break
        while pos < len(frames) and frames[pos].t_ms < target:
            pos += 1
        if pos >= len(frames):
            break
        picked.append(frames[pos])
        pos += 1
        j += 1
    return picked, warnings


@dataclass(frozen=True)
class SessionFeatures:
    """Raw (un-normalized) sampled features of one manifest entry."""

    entry: ManifestEntry
    records: tuple[FeatureRecord, ...]
    n_sampled: int
    warnings: tuple[str, ...] = ()


def extract_session(
    manifest: DatasetManifest,
    entry: ManifestEntry,
    start_s: float = SAMPLING_START_S,
    rate_hz: float = SAMPLING_RATE_HZ,
) -> SessionFeatures:
    """Sample one session's landmark file and compute raw features.

    Feature-invalid sampled frames are dropped (they count into
    n_sampled but produce no record).
    """
    frames = list(read_landmarks(manifest.path_for(entry)))
    sampled, warnings = sample_frames(frames, start_s=start_s, rate_hz=rate_hz)
    records = []
    for f in sampled:
        v = try_compute_features(f)
        if v is not None:
            records.append(FeatureRecord(f.frame_index, f.t_ms, v))
    return SessionFeatures(
        entry=entry,
        records=tuple(records),
        n_sampled=len(sampled),
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class SplitSpec:
    mode: str = "frame_level"
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self) -> None:
        if self.mode not in ("frame_level", "subject_level"):
            raise ValueError(f"unknown split mode {self.mode!r}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


def _rng(seed_parts: Sequence[int]) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed_parts)))


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Frame-level split: seeded permutation of row indices."""
    perm = _rng([spec.seed]).permutation(n)
    n_train = int(round(spec.train_fraction * n))
    n_train = max(1, min(n - 1, n_train)) if n >= 2 else n
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def split_subjects(
    subject_ids: Sequence[str], spec: SplitSpec
) -> tuple[set[str], set[str]]:
    """Subject-level split: seeded permutation of the sorted subject set."""
    unique = sorted(set(subject_ids))
    perm = _rng([spec.seed]).permutation(len(unique))
    n_train = int(math.ceil(spec.train_fraction * len(unique)))
    if len(unique) >= 2:
        n_train = max(1, min(len(unique) - 1, n_train))
    train_subjects = {unique[i] for i in perm[:n_train]}
    return train_subjects, set(unique) - train_subjects


@dataclass(frozen=True)
class FeatureSet:
    """Normalized feature rows with provenance, ready for the classifier."""

    vectors: np.ndarray  # (N, 4) normalized
    labels: np.ndarray  # (N,) 0/1
    subjects: tuple[str, ...]
    sessions: tuple[str, ...]

    def __len__(self) -> int:
        return int(self.vectors.shape[0])


@dataclass(frozen=True)
class DatasetBundle:
    train: FeatureSet
    test: FeatureSet
    warnings: tuple[str, ...] = ()


def _binary_label(label: int, include_low_vigilant: bool) -> AlertnessLabel | None:
    if label == LABEL_ALERT:
        return AlertnessLabel.ALERT
    if label == LABEL_DROWSY:
        return AlertnessLabel.DROWSY
    return AlertnessLabel.DROWSY if include_low_vigilant else None


def build_dataset(
    manifest: DatasetManifest,
    split: SplitSpec | None = None,
    include_low_vigilant: bool = False,
    start_s: float = SAMPLING_START_S,
    rate_hz: float = SAMPLING_RATE_HZ,
) -> DatasetBundle:
    """Sample, featurize, normalize per subject, and split a corpus.

    Every subject needs an alert entry: its first one (manifest order)
    supplies the calibration baseline applied to all of that subject's
    rows. Raises MissingAlertBaseline / MissingClass accordingly.
    """
    spec = split if split is not None else SplitSpec()
    by_subject: dict[str, list[ManifestEntry]] = {}
    for entry in manifest.entries:
        by_subject.setdefault(entry.subject_id, []).append(entry)

    rows: list[np.ndarray] = []
    labels: list[int] = []
    subjects: list[str] = []
    sessions: list[str] = []
    warnings: list[str] = []

    for subject_id in sorted(by_subject):
        entries = by_subject[subject_id]
        alert_entries = [e for e in entries if e.label == LABEL_ALERT]
        if not alert_entries:
            raise MissingAlertBaseline(
                f"subject {subject_id} has no alert recording"
            )
        base_session = extract_session(
            manifest, alert_entries[0], start_s=start_s, rate_hz=rate_hz
        )
        warnings.extend(
            f"{subject_id}/{alert_entries[0].session_id}: {w}"
            for w in base_session.warnings
        )
        baseline = fit_baseline(
            [r.vector for r in base_session.records], subject_id
        )
        for entry in entries:
            mapped = _binary_label(entry.label, include_low_vigilant)
            if mapped is None:
                continue
            if entry is alert_entries[0]:
                session = base_session
            else:
                session = extract_session(
                    manifest, entry, start_s=start_s, rate_hz=rate_hz
                )
                warnings.extend(
                    f"{subject_id}/{entry.session_id}: {w}"
                    for w in session.warnings
                )
            for rec in session.records:
                rows.append(normalize(rec.vector, baseline).as_array())
                labels.append(int(mapped))
                subjects.append(subject_id)
                sessions.append(entry.session_id)

    if not rows:
        raise EmptySession("corpus produced no feature rows")
    mat = np.stack(rows)
    lab = np.asarray(labels, dtype=np.int64)
    if len(set(labels)) < 2:
        raise MissingClass("corpus must contain both alert and drowsy rows")

    if spec.mode == "frame_level":
        tr_idx, te_idx = split_indices(len(lab), spec)
    else:
        tr_subj, _ = split_subjects(subjects, spec)
        mask = np.array([s in tr_subj for s in subjects])
        tr_idx = np.flatnonzero(mask)
        te_idx = np.flatnonzero(~mask)

    def take(idx: np.ndarray) -> FeatureSet:
        return FeatureSet(
            vectors=mat[idx],
            labels=lab[idx],
            subjects=tuple(subjects[i] for i in idx),
            sessions=tuple(sessions[i] for i in idx),
        )

    return DatasetBundle(
        train=take(tr_idx), test=take(te_idx), warnings=tuple(warnings)
    )


@dataclass(frozen=True)
class MaskSweepRow:
    mask: tuple[str, ...]
    report: MetricsReport


def sweep_features(
    train_set: FeatureSet, test_set: FeatureSet, k: int = DEFAULT_K
) -> list[MaskSweepRow]:
    """Train and evaluate one model per feature combination, all 15 masks."""
    rows = []
    for mask in ALL_MASKS:
        model = train(train_set.vectors, train_set.labels, mask, k=k)
        report = evaluate(model, test_set.vectors, test_set.labels)
        rows.append(MaskSweepRow(mask=mask, report=report))
    return rows


_SWEEP_HEADER = ["mask", "accuracy", "precision", "recall", "f1", "tp", "fp", "fn", "tn"]


def sweep_to_csv(rows: Sequence[MaskSweepRow], dest: IO[str]) -> None:
    writer = csv.writer(dest)
    writer.writerow(_SWEEP_HEADER)
    for row in rows:
        r = row.report
        writer.writerow(
            [mask_label(row.mask), f"{r.accuracy:.6f}", f"{r.precision:.6f}",
             f"{r.recall:.6f}", f"{r.f1:.6f}", r.tp, r.fp, r.fn, r.tn]
        )


def ksweep_to_csv(rows: Sequence[KSweepRow], dest: IO[str]) -> None:
    writer = csv.writer(dest)
    writer.writerow(["k", "accuracy", "precision", "recall", "f1"])
    for row in rows:
        r = row.report
        writer.writerow(
            [row.k, f"{r.accuracy:.6f}", f"{r.precision:.6f}",
             f"{r.recall:.6f}", f"{r.f1:.6f}"]
        )


@dataclass(frozen=True)
class FeatureStat:
    feature: str
    alert_mean: float
    alert_std: float
    drowsy_mean: float
    drowsy_std: float

    @property
    def delta_pct(self) -> float:
        if self.alert_mean == 0.0:
            return float("nan")
        return (self.drowsy_mean - self.alert_mean) / self.alert_mean * 100.0


# How each feature is expected to move from alert to drowsy:
# eyes close (EAR, PUC down), mouth opens (MAR up), their ratio rises (MOE up).
EXPECTED_DIRECTION = {"ear": -1, "mar": +1, "puc": -1, "moe": +1}


def state_statistics(
    raw_by_label: Mapping[AlertnessLabel, np.ndarray]
) -> list[FeatureStat]:
    """Per-feature mean/std for alert vs drowsy raw feature matrices."""
    for lbl in (AlertnessLabel.ALERT, AlertnessLabel.DROWSY):
        if lbl not in raw_by_label or len(raw_by_label[lbl]) == 0:
            raise MissingClass(f"no raw features for {lbl.name}")
    alert = np.asarray(raw_by_label[AlertnessLabel.ALERT], dtype=np.float64)
    drowsy = np.asarray(raw_by_label[AlertnessLabel.DROWSY], dtype=np.float64)
    stats = []
    for i, name in enumerate(FEATURE_NAMES):
        stats.append(
            FeatureStat(
                feature=name,
                alert_mean=float(alert[:, i].mean()),
                alert_std=float(alert[:, i].std()),
                drowsy_mean=float(drowsy[:, i].mean()),
                drowsy_std=float(drowsy[:, i].std()),
            )
        )
    return stats


def direction_check(stats: Sequence[FeatureStat]) -> dict[str, bool]:
    """Does each feature's alert->drowsy shift match physiology?"""
    out = {}
    for s in stats:
        expected = EXPECTED_DIRECTION[s.feature]
        shift = s.drowsy_mean - s.alert_mean
        out[s.feature] = (shift > 0) == (expected > 0) and shift != 0
    return out


def stats_to_csv(stats: Sequence[FeatureStat], dest: IO[str]) -> None:
    writer = csv.writer(dest)
    writer.writerow(
        ["feature", "alert_mean", "alert_std", "drowsy_mean", "drowsy_std", "delta_pct"]
    )
    for s in stats:
        writer.writerow(
            [s.feature.upper(), f"{s.alert_mean:.6f}", f"{s.alert_std:.6f}",
             f"{s.drowsy_mean:.6f}", f"{s.drowsy_std:.6f}", f"{s.delta_pct:.2f}"]
        )


def extract_raw_by_label(
    manifest: DatasetManifest,
    include_low_vigilant: bool = False,
    start_s: float = SAMPLING_START_S,
    rate_hz: float = SAMPLING_RATE_HZ,
) -> dict[AlertnessLabel, np.ndarray]:
    """Raw sampled feature matrices grouped by binary label, for stats."""
    groups: dict[AlertnessLabel, list[np.ndarray]] = {}
    for entry in manifest.entries:
        mapped = _binary_label(entry.label, include_low_vigilant)
        if mapped is None:
            continue
        session = extract_session(manifest, entry, start_s=start_s, rate_hz=rate_hz)
        for rec in session.records:
            groups.setdefault(mapped, []).append(rec.vector.as_array())
    return {
        lbl: np.stack(vecs) if vecs else np.empty((0, 4))
        for lbl, vecs in groups.items()
    }


def detection_rate(frames: Sequence[LandmarkFrame]) -> float:
    """Fraction of frames that are face-present and feature-valid."""
    if not frames:
        raise EmptySession("no frames")
    good = sum(
        1 for f in frames if f.face_present and try_compute_features(f) is not None
    )
    return good / len(frames)
