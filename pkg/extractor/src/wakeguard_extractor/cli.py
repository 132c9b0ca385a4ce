"""Command line entry point for the extractor."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .errors import ExtractorError
from .pipeline import ExtractorConfig, extract

log = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wakeguard-extract",
        description="Convert a video source into a landmark JSONL stream.",
    )
    parser.add_argument("--source", required=True,
                        help="video file path, or cam:<index> for a camera")
    parser.add_argument("--out", required=True, type=Path,
                        help="output JSONL path")
    parser.add_argument("--fps", type=float, default=None,
                        help="resample to this frame rate before extraction")
    parser.add_argument("--no-contrast", action="store_true",
                        help="skip histogram equalization")
    parser.add_argument("--detector", choices=("hog", "cascade"), default=None,
                        help="force a detector backend (default: auto)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    config = ExtractorConfig(
        source=args.source,
        output_path=args.out,
        target_fps=args.fps,
        contrast_enhancement=not args.no_contrast,
        detector=args.detector,
    )
    try:
        summary = extract(config)
    except (ExtractorError, OSError, ValueError) as exc:
        log.error("%s", exc)
        return 1
    print(json.dumps({
        "frames": summary.frames,
        "detected": summary.detected,
        "detection_rate": summary.detection_rate,
        "detector": summary.detector,
        "output": str(summary.output_path),
    }))
    return 0


if __name__ == "__main__":
    sys.exit(main())
