"""fidlkit: a model-agnostic evaluation and data-composition harness
for fake-image detection and localization.

Pieces: constrained-vocabulary detection scoring (vocab), a frozen
question/answer template table (templates), detection and mask metrics
plus training losses (metrics), a 7x5 perturbation grid with twin
numpy/numba kernels (perturb), staged data-mixture machinery
(compose), an NDJSON wire protocol to pluggable inference backends
(protocol, backends), an evaluation orchestrator (runner), and
publication-style table rendering (report).
"""
from __future__ import annotations

from . import (
    backends,
    compose,
    metrics,
    perturb,
    protocol,
    report,
    rng,
    runner,
    synth,
    templates,
    vocab,
)
from .errors import FidlkitError
from .metrics import MaskPair, ScoredLabel, accuracy, iou, pixel_f1, roc_auc
from .protocol import DecodeParams
from .runner import BenchmarkDef, EvalReport, load_benchmarks, run, supervision_delta
from .templates import list_templates, render, sample_template
from .vocab import DetectionScore, score, score_batch

__version__ = "0.1.0"

__all__ = [
    "BenchmarkDef",
    "DecodeParams",
    "DetectionScore",
    "EvalReport",
    "FidlkitError",
    "MaskPair",
    "ScoredLabel",
    "accuracy",
    "backends",
    "compose",
    "iou",
    "list_templates",
    "load_benchmarks",
    "metrics",
    "perturb",
    "pixel_f1",
    "protocol",
    "render",
    "report",
    "rng",
    "roc_auc",
    "run",
    "runner",
    "sample_template",
    "score",
    "score_batch",
    "supervision_delta",
    "synth",
    "templates",
    "vocab",
]
