"""Traveler alertness monitoring from 68-point facial landmark streams."""

from .classifier import (
    DEFAULT_K,
    KnnModel,
    MetricsReport,
    evaluate,
    load_model,
    parse_mask,
    predict,
    save_model,
    sweep_k,
    train,
)
from .dataset import (
    ALL_MASKS,
    DatasetManifest,
    SplitSpec,
    build_dataset,
    detection_rate,
    load_manifest,
    sample_frames,
    state_statistics,
    sweep_features,
)
from .errors import WakeguardError
from .features import (
    FEATURE_NAMES,
    BaselineStats,
    FeatureVector,
    compute_features,
    fit_baseline,
    normalize,
)
from .landmarks import (
    AlertnessLabel,
    LandmarkFrame,
    frame_from_json,
    frame_to_json,
    read_landmarks,
    write_landmarks,
)
from .pipeline import MonitorConfig, MonitorEvent, run_monitor
from .synthgen import SynthProfile, generate_corpus, generate_session

__version__ = "0.1.0"

__all__ = [
    "ALL_MASKS",
    "AlertnessLabel",
    "BaselineStats",
    "DEFAULT_K",
    "DatasetManifest",
    "FeatureVector",
    "FEATURE_NAMES",
    "KnnModel",
    "LandmarkFrame",
    "MetricsReport",
    "MonitorConfig",
    "MonitorEvent",
    "SplitSpec",
    "SynthProfile",
    "WakeguardError",
    "build_dataset",
    "compute_features",
    "detection_rate",
    "evaluate",
    "fit_baseline",
    "frame_from_json",
    "frame_to_json",
    "generate_corpus",
    "generate_session",
    "load_manifest",
    "load_model",
    "normalize",
    "parse_mask",
    "predict",
    "read_landmarks",
    "run_monitor",
    "sample_frames",
    "save_model",
    "state_statistics",
    "sweep_features",
    "sweep_k",
    "train",
    "write_landmarks",
]
