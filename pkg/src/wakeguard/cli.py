"""Command-line entry point.

One verb per workflow: features, baseline, train, predict, sweep-k,
sweep-features, stats, detection-rate, monitor, synth, split. Logs go to
stderr; machine-readable output goes to --out files or stdout. Exit codes:
0 success, 1 runtime failure, 2 usage error.

--config accepts a small TOML-style file ([section], key = value, with
quoted strings, ints, floats, true/false and # comments) whose sections
overlay MonitorConfig ([monitor]), SynthProfile ([synth]) and SplitSpec
([split]) defaults. Explicit flags win over config values.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import IO, Iterator

import numpy as np

from . import classifier, dataset, features, pipeline, synthgen
from .errors import WakeguardError
from .landmarks import read_landmarks

log = logging.getLogger("wakeguard")


def _parse_config_value(text: str):
    text = text.strip()
    if len(text) >= 2 and text[0] == text[-1] and text[0] in ("'", '"'):
        return text[1:-1]
    if text.lower() == "true":
        return True
    if text.lower() == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def load_config(path: str | Path) -> dict[str, dict]:
    """Parse the supported TOML subset into {section: {key: value}}."""
    sections: dict[str, dict] = {}
    current: dict | None = None
    for lineno, raw in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if not name:
                raise ValueError(f"{path}:{lineno}: empty section name")
            current = sections.setdefault(name, {})
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        if current is None:
            raise ValueError(f"{path}:{lineno}: key outside any [section]")
        key, _, value = line.partition("=")
        # allow trailing comments on unquoted values
        if "#" in value and not value.strip().startswith(("'", '"')):
            value = value.split("#", 1)[0]
        current[key.strip()] = _parse_config_value(value)
    return sections


def _build_from_section(cls, section: dict, overrides: dict):
    """Instantiate a config dataclass from file section + flag overrides."""
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = set(section) - names
    if unknown:
        raise ValueError(
            f"unknown {cls.__name__} keys in config: {sorted(unknown)}"
        )
    merged = dict(section)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    return cls(**merged)


@contextmanager
def _out_stream(path: str | None) -> Iterator[IO[str]]:
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _split_spec(args: argparse.Namespace, config: dict) -> dataset.SplitSpec:
    section = dict(config.get("split", {}))
    overrides = {
        "mode": {"frame": "frame_level", "subject": "subject_level"}[args.split]
        if args.split
        else None,
        "seed": args.seed,
        "train_fraction": getattr(args, "fraction", None),
    }
    return _build_from_section(dataset.SplitSpec, section, overrides)


def _monitor_config(args: argparse.Namespace, config: dict) -> pipeline.MonitorConfig:
    section = dict(config.get("monitor", {}))
    overrides = {
        "decision_mode": {"knn": "knn", "deviation": "baseline_deviation"}[args.mode]
        if args.mode
        else None,
    }
    return _build_from_section(pipeline.MonitorConfig, section, overrides)


def _synth_profile(args: argparse.Namespace, config: dict) -> synthgen.SynthProfile:
    section = dict(config.get("synth", {}))
    overrides = {"seed": args.seed}
    return _build_from_section(synthgen.SynthProfile, section, overrides)


def _cmd_features(args: argparse.Namespace, config: dict) -> int:
    records = []
    skipped = 0
    for frame in read_landmarks(args.infile):
        v = features.try_compute_features(frame)
        if v is None:
            skipped += 1
            continue
        records.append(features.FeatureRecord(frame.frame_index, frame.t_ms, v))
    fmt = args.format or ("csv" if str(args.out or "").endswith(".csv") else "jsonl")
    with _out_stream(args.out) as fh:
        n = features.write_features(records, fh, fmt=fmt)
    log.info("wrote %d feature rows (%d frames skipped)", n, skipped)
    return 0


def _cmd_baseline(args: argparse.Namespace, config: dict) -> int:
    vecs = []
    for frame in read_landmarks(args.infile):
        v = features.try_compute_features(frame)
        if v is not None:
            vecs.append(v)
        if len(vecs) >= features.BASELINE_FRAMES:
            break
    stats = features.fit_baseline(vecs, args.subject)
    with _out_stream(args.out) as fh:
        json.dump(stats.to_dict(), fh, indent=2)
        fh.write("\n")
    log.info("baseline for %s fit on %d frames", args.subject, stats.n_frames)
    return 0


def _format_report(report: classifier.MetricsReport) -> str:
    d = report.to_dict()
    lines = ["metric      value", "-----------------"]
    for name in ("accuracy", "precision", "recall", "f1"):
        lines.append(f"{name:<10}  {d[name]:.4f}")
    for name in ("tp", "fp", "fn", "tn"):
        lines.append(f"{name:<10}  {d[name]}")
    return "\n".join(lines)


def _cmd_train(args: argparse.Namespace, config: dict) -> int:
    manifest = dataset.load_manifest(args.manifest)
    bundle = dataset.build_dataset(
        manifest, _split_spec(args, config),
        include_low_vigilant=args.include_low,
    )
    for w in bundle.warnings:
        log.warning("%s", w)
    mask = classifier.parse_mask(args.mask)
    model = classifier.train(
        bundle.train.vectors, bundle.train.labels, mask, k=args.k or classifier.DEFAULT_K
    )
    classifier.save_model(model, args.out)
    report = classifier.evaluate(model, bundle.test.vectors, bundle.test.labels)
    log.info(
        "trained k=%d mask=%s on %d rows, tested on %d",
        model.k, classifier.mask_label(mask), len(bundle.train), len(bundle.test),
    )
    print(_format_report(report))
    return 0


def _cmd_predict(args: argparse.Namespace, config: dict) -> int:
    model = classifier.load_model(args.model)
    records = features.read_features(args.infile)
    baseline = None
    if args.baseline:
        with open(args.baseline, "r", encoding="utf-8") as fh:
            baseline = features.BaselineStats.from_dict(json.load(fh))
    with _out_stream(args.out) as fh:
        for rec in records:
            v = rec.vector
            if not v.normalized:
                if baseline is None:
                    raise WakeguardError(
                        "raw feature rows need --baseline to normalize"
                    )
                v = features.normalize(v, baseline)
            label, score = classifier.predict(model, v)
            fh.write(
                json.dumps(
                    {
                        "frame": rec.frame_index,
                        "t_ms": rec.t_ms,
                        "label": label.name,
                        "score": score,
                    },
                    separators=(",", ":"),
                )
                + "\n"
            )
    log.info("predicted %d rows", len(records))
    return 0


def _cmd_sweep_k(args: argparse.Namespace, config: dict) -> int:
    manifest = dataset.load_manifest(args.manifest)
    bundle = dataset.build_dataset(
        manifest, _split_spec(args, config),
        include_low_vigilant=args.include_low,
    )
    mask = classifier.parse_mask(args.mask)
    rows, best_k = classifier.sweep_k(
        bundle.train.vectors, bundle.train.labels,
        bundle.test.vectors, bundle.test.labels,
        feature_mask=mask, k_max=args.kmax,
    )
    with _out_stream(args.out) as fh:
        dataset.ksweep_to_csv(rows, fh)
    best = rows[best_k - 1].report
    log.info("swept k=1..%d on mask %s", args.kmax, classifier.mask_label(mask))
    print(f"best k = {best_k} (accuracy {best.accuracy:.4f})")
    return 0


def _cmd_sweep_features(args: argparse.Namespace, config: dict) -> int:
    manifest = dataset.load_manifest(args.manifest)
    bundle = dataset.build_dataset(
        manifest, _split_spec(args, config),
        include_low_vigilant=args.include_low,
    )
    rows = dataset.sweep_features(
        bundle.train, bundle.test, k=args.k or classifier.DEFAULT_K
    )
    with _out_stream(args.out) as fh:
        dataset.sweep_to_csv(rows, fh)
    best = max(rows, key=lambda r: r.report.accuracy)
    log.info("swept %d feature masks", len(rows))
    print(
        f"best mask = {classifier.mask_label(best.mask)} "
        f"(accuracy {best.report.accuracy:.4f})"
    )
    return 0


def _cmd_stats(args: argparse.Namespace, config: dict) -> int:
    manifest = dataset.load_manifest(args.manifest)
    raw = dataset.extract_raw_by_label(
        manifest, include_low_vigilant=args.include_low
    )
    stats = dataset.state_statistics(raw)
    with _out_stream(args.out) as fh:
        dataset.stats_to_csv(stats, fh)
    for s in stats:
        log.info(
            "%s: alert %.4f drowsy %.4f (%+.1f%%)",
            s.feature.upper(), s.alert_mean, s.drowsy_mean, s.delta_pct,
        )
    return 0


def _cmd_detection_rate(args: argparse.Namespace, config: dict) -> int:
    if args.manifest:
        manifest = dataset.load_manifest(args.manifest)
        total = []
        for entry in manifest.entries:
            frames = list(read_landmarks(manifest.path_for(entry)))
            rate = dataset.detection_rate(frames)
            total.extend(frames)
            print(f"{entry.subject_id}/{entry.session_id} {rate:.4f}")
        print(f"overall {dataset.detection_rate(total):.4f}")
    else:
        frames = list(read_landmarks(args.infile))
        print(f"{dataset.detection_rate(frames):.4f}")
    return 0


def _cmd_monitor(args: argparse.Namespace, config: dict) -> int:
    cfg = _monitor_config(args, config)
    model = classifier.load_model(args.model) if args.model else None
    frames = read_landmarks(args.infile)
    n = 0
    with _out_stream(args.events) as fh:
        for event in pipeline.run_monitor(frames, cfg, model=model):
            fh.write(pipeline.event_to_json(event) + "\n")
            n += 1
    log.info("monitor emitted %d events", n)
    return 0


def _cmd_synth(args: argparse.Namespace, config: dict) -> int:
    profile = _synth_profile(args, config)
    manifest = synthgen.generate_corpus(
        args.out, n_per_class=args.n_per_class,
        seed=args.seed if args.seed is not None else 0, base=profile,
    )
    log.info(
        "generated %d sessions under %s", len(manifest.entries), args.out
    )
    print(str(Path(args.out) / "manifest.json"))
    return 0


def _cmd_split(args: argparse.Namespace, config: dict) -> int:
    manifest = dataset.load_manifest(args.manifest)
    spec = _split_spec(args, config)
    bundle = dataset.build_dataset(
        manifest, spec, include_low_vigilant=args.include_low
    )
    obj: dict = {
        "mode": spec.mode,
        "seed": spec.seed,
        "train_fraction": spec.train_fraction,
        "train_rows": len(bundle.train),
        "test_rows": len(bundle.test),
    }
    if spec.mode == "subject_level":
        obj["train_subjects"] = sorted(set(bundle.train.subjects))
        obj["test_subjects"] = sorted(set(bundle.test.subjects))
    with _out_stream(args.out) as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wakeguard",
        description="Traveler alertness monitoring from landmark streams",
    )
    parser.add_argument("--config", help="TOML-style config overlay")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        return p

    p = add("features", "per-frame feature dump from landmark JSONL")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=["jsonl", "csv"])

    p = add("baseline", "fit calibration baseline from a recording")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out")
    p.add_argument("--subject", default="live")

    p = add("train", "train a classifier from a corpus manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--mask", default="EAR,MAR,PUC,MOE")
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--split", choices=["frame", "subject"])
    p.add_argument("--fraction", type=float)
    p.add_argument("--include-low", action="store_true",
                   help="fold low-vigilant sessions into drowsy")

    p = add("predict", "classify rows of a feature dump")
    p.add_argument("--model", required=True)
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--baseline", help="baseline JSON for raw feature rows")
    p.add_argument("--out")

    p = add("sweep-k", "evaluate every k from 1 to --kmax")
    p.add_argument("--manifest", required=True)
    p.add_argument("--kmax", type=int, default=45)
    p.add_argument("--mask", default="EAR,MAR,PUC,MOE")
    p.add_argument("--seed", type=int)
    p.add_argument("--split", choices=["frame", "subject"])
    p.add_argument("--fraction", type=float)
    p.add_argument("--include-low", action="store_true")
    p.add_argument("--out")

    p = add("sweep-features", "evaluate all 15 feature combinations")
    p.add_argument("--manifest", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--split", choices=["frame", "subject"])
    p.add_argument("--fraction", type=float)
    p.add_argument("--include-low", action="store_true")
    p.add_argument("--out")

    p = add("stats", "alert vs drowsy raw feature statistics")
    p.add_argument("--manifest", required=True)
    p.add_argument("--include-low", action="store_true")
    p.add_argument("--out")

    p = add("detection-rate", "face/landmark validity rate of sessions")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--in", dest="infile")
    group.add_argument("--manifest")

    p = add("monitor", "run the streaming monitor over landmark JSONL")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--model")
    p.add_argument("--events", help="output event JSONL (default stdout)")
    p.add_argument("--mode", choices=["knn", "deviation"])

    p = add("synth", "generate a synthetic labeled corpus")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--n-per-class", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)

    p = add("split", "report the train/test assignment for a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--split", choices=["frame", "subject"])
    p.add_argument("--fraction", type=float)
    p.add_argument("--include-low", action="store_true")
    p.add_argument("--out")

    return parser


_COMMANDS = {
    "features": _cmd_features,
    "baseline": _cmd_baseline,
    "train": _cmd_train,
    "predict": _cmd_predict,
    "sweep-k": _cmd_sweep_k,
    "sweep-features": _cmd_sweep_features,
    "stats": _cmd_stats,
    "detection-rate": _cmd_detection_rate,
    "monitor": _cmd_monitor,
    "synth": _cmd_synth,
    "split": _cmd_split,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config) if args.config else {}
        return _COMMANDS[args.command](args, config)
    except (WakeguardError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
