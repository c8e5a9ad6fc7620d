"""End-to-end evaluation orchestration.

run() renders the detection question from a template, dispatches one
request per manifest record through a backend handle, scores responses
with the constrained-vocabulary rule, computes each benchmark's metric,
and macro-averages benchmarks into per-domain numbers (mean of
benchmark scalars, never pooled samples).

Determinism contract: records are processed in sample-id order,
benchmarks in definition order, and reports are serialized as
canonical JSON carrying no wall-clock data, so identical inputs yield
byte-identical report files.

Failure policy: a backend error response excludes that sample (counts
and ids reported per benchmark); a benchmark that fails entirely is
marked absent with a warning and leaves its domain average to the
surviving benchmarks.  For pixel_f1 benchmarks a per-sample row is
"correct" when its F1 reaches 0.5; detection rows compare the 0.5
decision against the label.
"""
from __future__ import annotations

import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import rng
from .compose import SampleRecord, load_manifest
from .errors import (
    BenchmarkAlignmentError,
    DegenerateClassesError,
    EmptySetError,
    FidlkitError,
    ManifestIntegrityError,
    ManifestParseError,
)
from .imgio import image_size, load_image, load_mask, save_image
from .jsonutil import document_dumps, document_load
from .metrics import MaskPair, ScoredLabel, accuracy, pixel_f1, roc_auc
from .perturb import PerturbationSpec, apply
from .protocol import (
    MSG_ERROR,
    PROTOCOL_VERSION,
    DecodeParams,
    make_detect_request,
    make_segment_request,
)
from .templates import list_templates
from .vocab import score

METRICS = ("auc", "accuracy", "pixel_f1")
DEFAULT_THRESHOLD = 0.5


@dataclass(frozen=True)
class BenchmarkDef:
    name: str
    manifest: str
    metric: str
    domain: str

    def __post_init__(self) -> None:
        if self.metric not in METRICS:
            raise ManifestParseError(
                f"benchmark {self.name}: metric must be one of {METRICS}")


def load_benchmarks(path: str | Path) -> list[BenchmarkDef]:
    """Benchmark definitions from a JSON file; manifest paths are
    resolved relative to the file's directory."""
    p = Path(path)
    doc = document_load(p)
    items = doc["benchmarks"] if isinstance(doc, dict) else doc
    defs = []
    for item in items:
        try:
            manifest = str((p.parent / item["manifest"]).resolve())
            defs.append(BenchmarkDef(name=item["name"], manifest=manifest,
                                     metric=item["metric"], domain=item["domain"]))
        except KeyError as exc:
            raise ManifestParseError(
                f"benchmark entry missing field {exc.args[0]!r}") from exc
    names = [d.name for d in defs]
    if len(set(names)) != len(names):
        raise ManifestIntegrityError("duplicate benchmark names")
    return defs


@dataclass
class BenchmarkResult:
    name: str
    domain: str
    metric: str
    value: float | None
    n_samples: int
    n_failed: int
    failed_ids: list[str] = field(default_factory=list)
    warning: str | None = None

    @property
    def absent(self) -> bool:
        return self.value is None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "domain": self.domain,
            "metric": self.metric,
            "value": self.value,
            "n_samples": self.n_samples,
            "n_failed": self.n_failed,
            "failed_ids": list(self.failed_ids),
            "absent": self.absent,
            "warning": self.warning,
        }


@dataclass
class EvalReport:
    metadata: dict
    benchmarks: list[BenchmarkResult]
    per_sample: list[dict]

    def domain_averages(self) -> dict[str, dict]:
        grouped: dict[str, list[float]] = {}
        for b in self.benchmarks:
            if b.absent:
                continue
            grouped.setdefault(b.domain, []).append(b.value)
        return {
            d: {"value": sum(vs) / len(vs), "n_benchmarks": len(vs)}
            for d, vs in sorted(grouped.items())
        }

    def benchmark_values(self) -> dict[str, float]:
        return {b.name: b.value for b in self.benchmarks if not b.absent}

    def to_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "benchmarks": [b.to_dict() for b in self.benchmarks],
            "domains": self.domain_averages(),
            "per_sample": self.per_sample,
        }

    def dumps(self) -> str:
        return document_dumps(self.to_dict())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def from_dict(cls, d: Mapping) -> "EvalReport":
        benchmarks = [
            BenchmarkResult(
                name=b["name"], domain=b["domain"], metric=b["metric"],
                value=b["value"], n_samples=b["n_samples"], n_failed=b["n_failed"],
                failed_ids=list(b.get("failed_ids", [])), warning=b.get("warning"),
            )
            for b in d["benchmarks"]
        ]
        return cls(metadata=dict(d["metadata"]), benchmarks=benchmarks,
                   per_sample=list(d["per_sample"]))

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        return cls.from_dict(document_load(path))


def _prepare_image(rec: SampleRecord, perturb_spec: PerturbationSpec | None,
                   bench_dir: Path | None) -> str:
    if perturb_spec is None:
        return rec.image_ref
    img = apply(load_image(rec.image_ref), perturb_spec)
    dst = bench_dir / (Path(rec.image_ref).stem + ".png")
    save_image(img, dst)
    return str(dst)


def _detection_rows(bench: BenchmarkDef, records, backend, question: str,
                    decode: DecodeParams, threshold: float,
                    perturb_spec, bench_dir) -> tuple[list[dict], list[str]]:
    requests = [
        make_detect_request(rec.id, _prepare_image(rec, perturb_spec, bench_dir),
                            question, decode)
        for rec in records
    ]
    responses = backend.detect_many(requests)
    by_id = {r["request_id"]: r for r in responses if r["type"] != MSG_ERROR}
    rows, failed = [], []
    for rec in records:
        resp = by_id.get(rec.id)
        if resp is None:
            failed.append(rec.id)
            continue
        ds = score(resp["logits"])
        decision = 1 if ds.s_tamper > threshold else 0
        rows.append({
            "id": rec.id,
            "benchmark": bench.name,
            "domain": rec.domain,
            "operation": rec.operation,
            "label": rec.label,
            "s_tamper": ds.s_tamper,
            "decision": ds.decision,
            "correct": decision == rec.label,
        })
    return rows, failed


def _localization_rows(bench: BenchmarkDef, records, backend, question: str,
                       bin_threshold: float) -> tuple[list[dict], list[str]]:
    for rec in records:
        if rec.label == 1 and rec.mask_ref is None:
            raise ManifestIntegrityError(
                f"benchmark {bench.name}: tampered record {rec.id} has no mask_ref")
    requests = [make_segment_request(rec.id, rec.image_ref, question)
                for rec in records]
    responses = backend.segment_many(requests)
    by_id = {r["request_id"]: r for r in responses if r["type"] != MSG_ERROR}
    rows, failed = [], []
    for rec in records:
        resp = by_id.get(rec.id)
        if resp is None:
            failed.append(rec.id)
            continue
        try:
            predicted = load_mask(resp["mask_ref"]).astype(np.float64) / 255.0
            if rec.mask_ref is not None:
                truth = (load_mask(rec.mask_ref) > 127).astype(np.float64)
            else:
                truth = np.zeros(image_size(rec.image_ref), dtype=np.float64)
            f1 = pixel_f1(MaskPair(predicted=predicted, truth=truth), bin_threshold)
        except FidlkitError:
            failed.append(rec.id)
            continue
        rows.append({
            "id": rec.id,
            "benchmark": bench.name,
            "domain": rec.domain,
            "operation": rec.operation,
            "label": rec.label,
            "pixel_f1": f1,
            "correct": f1 >= 0.5,
        })
    return rows, failed


def _benchmark_value(bench: BenchmarkDef, rows: list[dict], threshold: float) -> float:
    if not rows:
        raise EmptySetError(f"benchmark {bench.name}: no scoreable samples")
    if bench.metric == "auc":
        samples = [ScoredLabel(score=r["s_tamper"], label=r["label"]) for r in rows]
        return roc_auc(samples)
    if bench.metric == "accuracy":
        samples = [ScoredLabel(score=r["s_tamper"], label=r["label"]) for r in rows]
        return accuracy(samples, threshold)
    values = [r["pixel_f1"] for r in rows]
    return sum(values) / len(values)


def run(benchmarks: Sequence[BenchmarkDef], backend, *,
        template_id: int = 0,
        decode: DecodeParams | None = None,
        threshold: float = DEFAULT_THRESHOLD,
        bin_threshold: float = DEFAULT_THRESHOLD,
        perturb_spec: PerturbationSpec | None = None,
        backend_label: str = "backend",
        workdir: str | Path | None = None) -> EvalReport:
    """Evaluate all benchmarks against one live backend handle."""
    decode = decode or DecodeParams()
    question = list_templates()[template_id].question
    results: list[BenchmarkResult] = []
    all_rows: list[dict] = []

    def run_one(bench: BenchmarkDef, bench_dir: Path | None) -> None:
        try:
            _, records = load_manifest(bench.manifest)
            records = sorted(records, key=lambda r: r.id)
            if bench.metric == "pixel_f1":
                rows, failed = _localization_rows(bench, records, backend,
                                                  question, bin_threshold)
            else:
                rows, failed = _detection_rows(bench, records, backend, question,
                                               decode, threshold,
                                               perturb_spec, bench_dir)
            value = _benchmark_value(bench, rows, threshold)
        except (FidlkitError, OSError) as exc:
            results.append(BenchmarkResult(
                name=bench.name, domain=bench.domain, metric=bench.metric,
                value=None, n_samples=0, n_failed=0,
                warning=f"benchmark failed: {exc}"))
            return
        all_rows.extend(rows)
        results.append(BenchmarkResult(
            name=bench.name, domain=bench.domain, metric=bench.metric,
            value=value, n_samples=len(rows), n_failed=len(failed),
            failed_ids=failed))

    needs_dir = perturb_spec is not None
    if needs_dir and workdir is None:
        with tempfile.TemporaryDirectory(prefix="fidlkit-eval-") as tmp:
            for i, bench in enumerate(benchmarks):
                bench_dir = Path(tmp) / f"b{i:03d}"
                bench_dir.mkdir(parents=True, exist_ok=True)
                run_one(bench, bench_dir)
    else:
        for i, bench in enumerate(benchmarks):
            bench_dir = None
            if needs_dir:
                bench_dir = Path(workdir) / f"b{i:03d}"
                bench_dir.mkdir(parents=True, exist_ok=True)
            run_one(bench, bench_dir)

    metadata = {
        "backend": backend_label,
        "template_id": template_id,
        "seed": decode.seed,
        "temperature": decode.temperature,
        "threshold": threshold,
        "bin_threshold": bin_threshold,
        "perturbation": (
            {"kind": perturb_spec.kind, "strength": perturb_spec.strength,
             "rng_seed": perturb_spec.rng_seed}
            if perturb_spec else None),
        "protocol_version": PROTOCOL_VERSION,
    }
    return EvalReport(metadata=metadata, benchmarks=results, per_sample=all_rows)


def run_localization(benchmarks: Sequence[BenchmarkDef], backend, *,
                     template_id: int = 0,
                     bin_threshold: float = DEFAULT_THRESHOLD,
                     backend_label: str = "backend") -> EvalReport:
    """run() restricted to pixel_f1 benchmarks."""
    for bench in benchmarks:
        if bench.metric != "pixel_f1":
            raise ManifestParseError(
                f"benchmark {bench.name}: run_localization needs metric pixel_f1")
    return run(benchmarks, backend, template_id=template_id,
               bin_threshold=bin_threshold, backend_label=backend_label)


@dataclass(frozen=True)
class GainTable:
    """Per-benchmark percentage-point gains between two reports."""
    rows: tuple[tuple[str, float], ...]
    avg_points: float

    def to_dict(self) -> dict:
        return {"rows": [{"benchmark": n, "gain_points": g} for n, g in self.rows],
                "avg_points": self.avg_points}


def supervision_delta(report_a: EvalReport, report_b: EvalReport) -> GainTable:
    """Gains of report_b over report_a in percentage points."""
    a = report_a.benchmark_values()
    b = report_b.benchmark_values()
    if set(a) != set(b):
        raise BenchmarkAlignmentError(
            "benchmark sets differ between reports",
            only_left=set(a) - set(b), only_right=set(b) - set(a))
    names = [r.name for r in report_a.benchmarks if not r.absent]
    rows = tuple((name, (b[name] - a[name]) * 100.0) for name in names)
    if not rows:
        raise EmptySetError("no common benchmarks to compare")
    avg = sum(g for _, g in rows) / len(rows)
    return GainTable(rows=rows, avg_points=avg)


def render_pairs(records: Sequence[SampleRecord], *,
                 template_id: int | None = None, seed: int = 0) -> list[dict]:
    """Instruction-style (question, answer) rows for a record list.

    With template_id fixed every row uses that template; otherwise
    record i draws template rng.value(seed, i) % 10.
    """
    out = []
    ordered = sorted(records, key=lambda r: r.id)
    for i, rec in enumerate(ordered):
        tid = template_id if template_id is not None else rng.value(seed, i) % 10
        pair = list_templates()[tid]
        answer = pair.positive_answer if rec.label == 1 else pair.negative_answer
        out.append({
            "id": rec.id,
            "template_id": tid,
            "label": rec.label,
            "question": pair.question,
            "answer": answer,
        })
    return out


def validate_report_invariants(report_dict: Mapping) -> None:
    """Assert the on-file invariant: every domain average equals the
    arithmetic mean of its present benchmarks to 1e-12."""
    grouped: dict[str, list[float]] = {}
    for b in report_dict["benchmarks"]:
        if not b["absent"]:
            grouped.setdefault(b["domain"], []).append(b["value"])
    domains = report_dict["domains"]
    if set(grouped) != set(domains):
        raise ManifestIntegrityError("domain averages cover the wrong domain set")
    for d, vs in grouped.items():
        expected = sum(vs) / len(vs)
        if abs(domains[d]["value"] - expected) > 1e-12:
            raise ManifestIntegrityError(
                f"domain {d}: stored average {domains[d]['value']!r} "
                f"!= recomputed {expected!r}")
