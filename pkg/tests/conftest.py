"""Shared fixtures: a small synthetic corpus reused across test modules."""
from __future__ import annotations

from pathlib import Path

import pytest

from wakeguard import synthgen
from wakeguard.dataset import DatasetManifest


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory) -> DatasetManifest:
    """3 subjects, shorter sessions; cheap enough for wiring tests."""
    out = tmp_path_factory.mktemp("corpus_small")
    base = synthgen.SynthProfile(duration_s=80.0)
    return synthgen.generate_corpus(out, n_per_class=3, seed=7, base=base)


@pytest.fixture(scope="session")
def small_manifest_path(small_corpus: DatasetManifest) -> Path:
    return small_corpus.root / "manifest.json"
