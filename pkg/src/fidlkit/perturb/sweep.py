"""Robustness sweeps: detection accuracy across a perturbation grid.

For every grid cell the sweep perturbs each manifest image into a
temporary file (preserving the source file's stem so score-table
backends key consistently), dispatches detect requests through the
backend, and scores accuracy in sample-id order.  Per-kind averages
over the grid strengths are the sweep's headline numbers.
"""
from __future__ import annotations

import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..errors import EmptySetError, FidlkitError, PartialSweepError
from ..imgio import load_image, save_image
from ..metrics import ScoredLabel, accuracy
from ..protocol import (
    MSG_ERROR,
    DecodeParams,
    make_detect_request,
    validate_response,
)
from ..templates import list_templates
from ..vocab import score
from .core import KINDS, PerturbationSpec, apply


@dataclass(frozen=True)
class SweepCell:
    kind: str
    strength: float
    accuracy: float
    n_samples: int
    n_failed: int

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "strength": self.strength,
            "accuracy": self.accuracy,
            "n_samples": self.n_samples,
            "n_failed": self.n_failed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SweepCell":
        return cls(kind=d["kind"], strength=float(d["strength"]),
                   accuracy=float(d["accuracy"]), n_samples=int(d["n_samples"]),
                   n_failed=int(d["n_failed"]))


@dataclass
class RobustnessReport:
    cells: list[SweepCell]
    metadata: dict = field(default_factory=dict)

    def kinds(self) -> list[str]:
        seen = {c.kind for c in self.cells}
        return [k for k in KINDS if k in seen]

    def kind_avgs(self) -> dict[str, float]:
        """Mean accuracy over each kind's present cells, in cell order."""
        avgs: dict[str, float] = {}
        for kind in self.kinds():
            values = [c.accuracy for c in self.cells if c.kind == kind]
            avgs[kind] = sum(values) / len(values)
        return avgs

    def to_dict(self) -> dict:
        return {
            "cells": [c.to_dict() for c in self.cells],
            "kind_avgs": self.kind_avgs(),
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RobustnessReport":
        return cls(cells=[SweepCell.from_dict(c) for c in d["cells"]],
                   metadata=dict(d.get("metadata", {})))


def _score_cell(records, backend, spec: PerturbationSpec, question: str,
                decode: DecodeParams, threshold: float, cell_dir: Path) -> SweepCell:
    requests = []
    for rec in records:
        img = load_image(rec.image_ref)
        out = apply(img, spec)
        dst = cell_dir / (Path(rec.image_ref).stem + ".png")
        save_image(out, dst)
        requests.append(make_detect_request(rec.id, str(dst), question, decode))
    responses = backend.detect_many(requests)
    by_id = {}
    for resp in responses:
        validate_response(resp)
        if resp["type"] != MSG_ERROR:
            by_id[resp["request_id"]] = resp
    scored = []
    n_failed = 0
    for rec in records:
        resp = by_id.get(rec.id)
        if resp is None:
            n_failed += 1
            continue
        scored.append(ScoredLabel(score=score(resp["logits"]).s_tamper, label=rec.label))
    if not scored:
        raise EmptySetError(
            f"no sample of cell {spec.label()} produced a scoreable response")
    return SweepCell(kind=spec.kind, strength=spec.strength,
                     accuracy=accuracy(scored, threshold),
                     n_samples=len(scored), n_failed=n_failed)


def robustness_sweep(records: Sequence, backend,
                     grid: Sequence[PerturbationSpec], *,
                     template_id: int = 0,
                     decode: DecodeParams | None = None,
                     threshold: float = 0.5,
                     backend_label: str | None = None,
                     workdir: str | Path | None = None) -> RobustnessReport:
    """Accuracy per grid cell; a mid-grid backend failure preserves
    completed cells inside the raised PartialSweepError."""
    decode = decode or DecodeParams()
    question = list_templates()[template_id].question
    ordered = sorted(records, key=lambda r: r.id)
    cells: list[SweepCell] = []

    def run_cells(root: Path) -> None:
        for i, spec in enumerate(grid):
            cell_dir = root / f"cell_{i:03d}"
            cell_dir.mkdir(parents=True, exist_ok=True)
            try:
                cells.append(_score_cell(ordered, backend, spec, question,
                                         decode, threshold, cell_dir))
            except FidlkitError as exc:
                raise PartialSweepError(
                    f"sweep failed at cell {spec.label()}: {exc}",
                    completed_cells=cells) from exc

    if workdir is None:
        with tempfile.TemporaryDirectory(prefix="fidlkit-sweep-") as tmp:
            run_cells(Path(tmp))
    else:
        run_cells(Path(workdir))

    metadata = {
        "backend": backend_label if backend_label is not None else "backend",
        "template_id": template_id,
        "seed": decode.seed,
        "temperature": decode.temperature,
        "threshold": threshold,
        "n_records": len(ordered),
    }
    return RobustnessReport(cells=cells, metadata=metadata)
