from __future__ import annotations

import json
from pathlib import Path

import pytest

from fidlkit import synth
from fidlkit.compose import load_manifest

GOLDEN_DIR = Path(__file__).parent / "golden"


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory) -> Path:
    """A small separable corpus shared by the read-only tests."""
    root = tmp_path_factory.mktemp("corpus")
    synth.build_separable_corpus(root, 12, size=64, seed=3)
    return root


@pytest.fixture(scope="session")
def corpus_records(corpus_dir):
    _, records = load_manifest(corpus_dir / "manifest.jsonl")
    return records


@pytest.fixture()
def mock_config(tmp_path) -> Path:
    """Mock backend config scoring odd-numbered stems as tampered."""
    cfg = {
        "scores": {f"s{i:02d}": (0.9 if i % 2 else 0.1) for i in range(12)},
        "default": 0.5,
    }
    path = tmp_path / "mock.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


def golden(name: str) -> Path:
    return GOLDEN_DIR / name
