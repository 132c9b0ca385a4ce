"""K-nearest-neighbor alertness classifier over normalized features.

Models carry the feature mask they were trained with, so callers always
hand in full four-feature vectors (FEATURE_NAMES order) and the model
selects its own columns. Voting is by drowsy fraction with ties going to
Drowsy; k defaults to 38, picked by sweep_k on held-out accuracy.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    EmptyTestSet,
    InsufficientTraining,
    ModelFormatError,
)
from .features import FEATURE_NAMES, BaselineStats, FeatureVector, identity_baseline
from .kdtree import KdTree
from .landmarks import AlertnessLabel

DEFAULT_K = 38
MODEL_VERSION = "1"


def parse_mask(text: str) -> tuple[str, ...]:
    """Parse "MAR+MOE" or "mar,moe" into a canonical feature mask."""
    parts = [p.strip().lower() for p in text.replace("+", ",").split(",") if p.strip()]
    for p in parts:
        if p not in FEATURE_NAMES:
            raise ValueError(f"unknown feature {p!r}; choose from {FEATURE_NAMES}")
    if not parts:
        raise ValueError("empty feature mask")
    if len(set(parts)) != len(parts):
        raise ValueError(f"duplicate feature in mask {text!r}")
    return canonical_mask(parts)


def canonical_mask(names: Iterable[str]) -> tuple[str, ...]:
    """Order mask members by FEATURE_NAMES position."""
    wanted = set(names)
    return tuple(n for n in FEATURE_NAMES if n in wanted)


def mask_label(mask: Sequence[str]) -> str:
    return "+".join(n.upper() for n in mask)


def mask_indices(mask: Sequence[str]) -> list[int]:
    return [FEATURE_NAMES.index(n) for n in mask]


@dataclass(frozen=True)
class MetricsReport:
    """Binary confusion counts and derived scores, Drowsy positive."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def accuracy(self) -> float:
        return (self.tp + self.tn) / self.total if self.total else 0.0

    @property
    def precision(self) -> float:
        denom = self.tp + self.fp
        return self.tp / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return self.tp / denom if denom else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @property
    def confusion(self) -> np.ndarray:
        """2x2 matrix [[tn, fp], [fn, tp]] (rows true, cols predicted)."""
        return np.array([[self.tn, self.fp], [self.fn, self.tp]])

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "tp": self.tp,
            "fp": self.fp,
            "fn": self.fn,
            "tn": self.tn,
        }


@dataclass
class KnnModel:
    """Trained classifier state.

    train_vectors hold only the masked columns (N x len(feature_mask));
    the baseline refers to whatever normalization produced them: a real
    subject baseline for single-subject flows, the identity baseline for
    corpora normalized per subject upstream.
    """

    feature_mask: tuple[str, ...]
    k: int
    train_vectors: np.ndarray
    train_labels: np.ndarray
    baseline: BaselineStats
    tree: KdTree
    version: str = MODEL_VERSION


def _as_full_matrix(vectors: np.ndarray | Sequence) -> np.ndarray:
    mat = np.asarray(vectors, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[1] != len(FEATURE_NAMES):
        raise DimensionMismatch(
            f"expected an (N, {len(FEATURE_NAMES)}) feature matrix, got {mat.shape}"
        )
    return mat


def train(
    vectors: np.ndarray | Sequence,
    labels: np.ndarray | Sequence[int],
    feature_mask: Sequence[str] = FEATURE_NAMES,
    k: int = DEFAULT_K,
    baseline: BaselineStats | None = None,
) -> KnnModel:
    """Build a model from normalized feature rows and 0/1 labels."""
    mask = canonical_mask(feature_mask)
    if not mask:
        raise ValueError("feature mask must name at least one feature")
    mat = _as_full_matrix(vectors)
    lab = np.asarray(labels, dtype=np.int64)
    if lab.shape != (mat.shape[0],):
        raise DimensionMismatch("labels must be one per training row")
    if not np.isin(lab, (0, 1)).all():
        raise ValueError("labels must be 0 (alert) or 1 (drowsy)")
    if k < 1:
        raise ValueError("k must be >= 1")
    if mat.shape[0] < k:
        raise InsufficientTraining(
            f"{mat.shape[0]} training rows but k={k}"
        )
    sub = np.ascontiguousarray(mat[:, mask_indices(mask)])
    return KnnModel(
        feature_mask=mask,
        k=k,
        train_vectors=sub,
        train_labels=lab,
        baseline=baseline if baseline is not None else identity_baseline(),
        tree=KdTree(sub, tie=lab),
    )


def _query_vector(model: KnnModel, v) -> np.ndarray:
    if isinstance(v, FeatureVector):
        arr = v.as_array()
    else:
        arr = np.asarray(v, dtype=np.float64).reshape(-1)
    if arr.shape[0] == len(FEATURE_NAMES):
        return arr[mask_indices(model.feature_mask)]
    if arr.shape[0] == len(model.feature_mask):
        return arr
    raise DimensionMismatch(
        f"query of length {arr.shape[0]} fits neither the full feature set "
        f"nor mask {model.feature_mask}"
    )


def predict(model: KnnModel, v) -> tuple[AlertnessLabel, float]:
    """Classify one normalized vector; returns (label, drowsy fraction).

    Fraction >= 0.5 means Drowsy, so exact ties go to Drowsy.
    """
    q = _query_vector(model, v)
    idx, _ = model.tree.query(q, model.k)
    frac = float(np.mean(model.train_labels[idx] == 1))
    label = AlertnessLabel.DROWSY if frac >= 0.5 else AlertnessLabel.ALERT
    return label, frac


def predict_batch(
    model: KnnModel, vectors: np.ndarray | Sequence
) -> tuple[np.ndarray, np.ndarray]:
    mat = _as_full_matrix(vectors)
    labels = np.empty(mat.shape[0], dtype=np.int64)
    fracs = np.empty(mat.shape[0], dtype=np.float64)
    for i, row in enumerate(mat):
        lab, frac = predict(model, row)
        labels[i] = int(lab)
        fracs[i] = frac
    return labels, fracs


def evaluate(
    model: KnnModel,
    vectors: np.ndarray | Sequence,
    labels: np.ndarray | Sequence[int],
) -> MetricsReport:
    mat = _as_full_matrix(vectors)
    truth = np.asarray(labels, dtype=np.int64)
    if mat.shape[0] == 0:
        raise EmptyTestSet("no test rows")
    if truth.shape != (mat.shape[0],):
        raise DimensionMismatch("labels must be one per test row")
    pred, _ = predict_batch(model, mat)
    tp = int(np.sum((pred == 1) & (truth == 1)))
    fp = int(np.sum((pred == 1) & (truth == 0)))
    fn = int(np.sum((pred == 0) & (truth == 1)))
    tn = int(np.sum((pred == 0) & (truth == 0)))
    return MetricsReport(tp=tp, fp=fp, fn=fn, tn=tn)


@dataclass(frozen=True)
class KSweepRow:
    k: int
    report: MetricsReport


def sweep_k(
    train_vectors: np.ndarray | Sequence,
    train_labels: np.ndarray | Sequence[int],
    test_vectors: np.ndarray | Sequence,
    test_labels: np.ndarray | Sequence[int],
    feature_mask: Sequence[str] = FEATURE_NAMES,
    k_max: int = 45,
    k_min: int = 1,
) -> tuple[list[KSweepRow], int]:
    """Evaluate every k in [k_min, k_max]; returns rows and the best k
    (highest accuracy, smallest k on ties).

    One tree is built and queried once per test row at k_max; the ranked
    prefix gives every smaller k, which matches per-k queries exactly
    because neighbor order is total.
    """
    mask = canonical_mask(feature_mask)
    train_mat = _as_full_matrix(train_vectors)
    test_mat = _as_full_matrix(test_vectors)
    truth = np.asarray(test_labels, dtype=np.int64)
    if test_mat.shape[0] == 0:
        raise EmptyTestSet("no test rows")
    lab = np.asarray(train_labels, dtype=np.int64)
    if train_mat.shape[0] < k_max:
        raise InsufficientTraining(
            f"{train_mat.shape[0]} training rows but k_max={k_max}"
        )
    cols = mask_indices(mask)
    tree = KdTree(np.ascontiguousarray(train_mat[:, cols]), tie=lab)

    # drowsy counts among the first k neighbors, for every test row
    prefix = np.empty((test_mat.shape[0], k_max), dtype=np.int64)
    for i, row in enumerate(test_mat[:, cols]):
        idx, _ = tree.query(row, k_max)
        prefix[i] = np.cumsum(lab[np.asarray(idx)] == 1)

    rows: list[KSweepRow] = []
    best_k = k_min
    best_acc = -1.0
    for k in range(k_min, k_max + 1):
        frac = prefix[:, k - 1] / k
        pred = (frac >= 0.5).astype(np.int64)
        tp = int(np.sum((pred == 1) & (truth == 1)))
        fp = int(np.sum((pred == 1) & (truth == 0)))
        fn = int(np.sum((pred == 0) & (truth == 1)))
        tn = int(np.sum((pred == 0) & (truth == 0)))
        report = MetricsReport(tp=tp, fp=fp, fn=fn, tn=tn)
        rows.append(KSweepRow(k=k, report=report))
        if report.accuracy > best_acc:
            best_acc = report.accuracy
            best_k = k
    return rows, best_k


def save_model(model: KnnModel, path: str | Path) -> None:
    obj = {
        "version": model.version,
        "feature_mask": list(model.feature_mask),
        "k": model.k,
        "baseline": model.baseline.to_dict(),
        "train": {
            "vectors": [[float(x) for x in row] for row in model.train_vectors],
            "labels": [int(v) for v in model.train_labels],
        },
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh)
        fh.write("\n")


def load_model(path: str | Path) -> KnnModel:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            obj = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict) or obj.get("version") != MODEL_VERSION:
        raise ModelFormatError(
            f"unsupported model version {obj.get('version')!r}"
            if isinstance(obj, dict)
            else "model file must be a JSON object"
        )
    try:
        mask = tuple(str(n) for n in obj["feature_mask"])
        k = int(obj["k"])
        baseline = BaselineStats.from_dict(obj["baseline"])
        vectors = np.asarray(obj["train"]["vectors"], dtype=np.float64)
        labels = np.asarray(obj["train"]["labels"], dtype=np.int64)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"broken model schema: {exc}") from exc
    if canonical_mask(mask) != mask or not mask:
        raise ModelFormatError(f"invalid feature mask {mask!r}")
    if vectors.ndim != 2 or vectors.shape[1] != len(mask):
        raise ModelFormatError(
            f"stored vectors are {vectors.shape}, mask needs {len(mask)} columns"
        )
    if labels.shape != (vectors.shape[0],) or not np.isin(labels, (0, 1)).all():
        raise ModelFormatError("stored labels must be 0/1, one per vector")
    if vectors.shape[0] < k:
        raise ModelFormatError(f"stored k={k} exceeds {vectors.shape[0]} rows")
    return KnnModel(
        feature_mask=mask,
        k=k,
        train_vectors=vectors,
        train_labels=labels,
        baseline=baseline,
        tree=KdTree(vectors, tie=labels),
    )
