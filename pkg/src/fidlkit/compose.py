"""Dataset mixture machinery: manifests, sampling, recomposition,
scaling ledger, and bad-case mining.

Two manifest file forms exist, both loadable through load_manifest():

  - Record manifests (JSONL): one SampleRecord object per line.  The
    mixture view is derived by grouping records on (source, domain)
    with proportional weights.  Desk-scale corpora carry real files.
  - Declared mixtures (JSON object): counts and weights only, no
    records.  Corpora of millions of samples are represented as
    metadata shapes; the harness never embeds image bytes.

Weights always live on the unit simplex (nonnegative, sum 1 within
1e-9).  All sampling is driven by the repo PRNG so draws reproduce
across ports.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import rng
from .errors import (
    DuplicateRunError,
    InsufficientDetailError,
    LedgerConsistencyError,
    ManifestIntegrityError,
    ManifestParseError,
    RecomposeDegenerateError,
    UnsatisfiableMixtureError,
)
from .imgio import load_mask

DOMAINS: tuple[str, ...] = ("deepfake", "aigc", "document", "nature")

OPERATIONS: tuple[str, ...] = (
    "splice", "copy_move", "removal", "inpaint", "generative_edit",
    "face_swap", "face_reenact", "text_edit", "seal_edit", "full_synthesis",
)

WEIGHT_TOLERANCE = 1e-9
GAIN_TOLERANCE = 1e-9

# Boost factors are capped by flooring the metric at this value so a
# zero metric cannot demand unbounded weight.
_METRIC_FLOOR = 0.05


@dataclass(frozen=True)
class SampleRecord:
    id: str
    image_ref: str
    label: int
    domain: str
    source: str
    mask_ref: str | None = None
    operation: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ManifestParseError("record id must be a nonempty string")
        if self.label not in (0, 1):
            raise ManifestParseError(f"record {self.id}: label must be 0 or 1")
        if self.domain not in DOMAINS:
            raise ManifestParseError(
                f"record {self.id}: domain {self.domain!r} not in {DOMAINS}")
        if self.operation is not None and self.operation not in OPERATIONS:
            raise ManifestParseError(
                f"record {self.id}: operation {self.operation!r} not in vocabulary")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "image_ref": self.image_ref,
            "label": self.label,
            "mask_ref": self.mask_ref,
            "domain": self.domain,
            "operation": self.operation,
            "source": self.source,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "SampleRecord":
        known = {"id", "image_ref", "label", "mask_ref", "domain", "operation", "source"}
        unknown = set(d) - known
        if unknown:
            raise ManifestParseError(f"unknown record fields: {sorted(unknown)}")
        try:
            return cls(
                id=d["id"], image_ref=d["image_ref"], label=d["label"],
                domain=d["domain"], source=d["source"],
                mask_ref=d.get("mask_ref"), operation=d.get("operation"),
            )
        except KeyError as exc:
            raise ManifestParseError(f"record missing field {exc.args[0]!r}") from exc


@dataclass(frozen=True)
class MixtureEntry:
    source: str
    domain: str
    count: int
    weight: float


@dataclass
class MixtureManifest:
    name: str
    entries: list[MixtureEntry]
    total: int
    metadata: dict = field(default_factory=dict)

    def validate(self) -> None:
        if any(e.count < 0 or e.weight < 0 for e in self.entries):
            raise ManifestIntegrityError(f"mixture {self.name}: negative count or weight")
        if self.entries:
            s = sum(e.weight for e in self.entries)
            if abs(s - 1.0) > WEIGHT_TOLERANCE:
                raise ManifestIntegrityError(
                    f"mixture {self.name}: weights sum to {s!r}, expected 1")
        count_sum = sum(e.count for e in self.entries)
        if count_sum != self.total:
            raise ManifestIntegrityError(
                f"mixture {self.name}: total {self.total} != sum of counts {count_sum}")

    def domain_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for e in self.entries:
            counts[e.domain] = counts.get(e.domain, 0) + e.count
        return counts

    def domain_weights(self) -> dict[str, float]:
        weights: dict[str, float] = {}
        for e in self.entries:
            weights[e.domain] = weights.get(e.domain, 0.0) + e.weight
        return weights

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "total": self.total,
            "entries": [
                {"source": e.source, "domain": e.domain,
                 "count": e.count, "weight": e.weight}
                for e in self.entries
            ],
        }
        if self.metadata:
            d["metadata"] = self.metadata
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "MixtureManifest":
        try:
            entries = [
                MixtureEntry(source=e["source"], domain=e["domain"],
                             count=int(e["count"]), weight=float(e["weight"]))
                for e in d["entries"]
            ]
            m = cls(name=d["name"], entries=entries, total=int(d["total"]),
                    metadata=dict(d.get("metadata", {})))
        except (KeyError, TypeError, ValueError) as exc:
            raise ManifestParseError(f"malformed mixture document: {exc}") from exc
        m.validate()
        return m


def derive_mixture(name: str, records: Sequence[SampleRecord]) -> MixtureManifest:
    """Mixture view of a record list: group by (source, domain),
    weight proportional to count."""
    groups: dict[tuple[str, str], int] = {}
    for rec in records:
        key = (rec.source, rec.domain)
        groups[key] = groups.get(key, 0) + 1
    total = len(records)
    entries = [
        MixtureEntry(source=src, domain=dom, count=n, weight=n / total)
        for (src, dom), n in sorted(groups.items())
    ]
    return MixtureManifest(name=name, entries=entries, total=total)


def _verify_authentic_mask(rec: SampleRecord) -> None:
    if rec.label != 0 or rec.mask_ref is None:
        return
    path = Path(rec.mask_ref)
    if not path.exists():
        raise ManifestIntegrityError(
            f"record {rec.id}: authentic with mask_ref {rec.mask_ref} "
            "that cannot be verified (file missing)")
    mask = load_mask(path)
    if mask.any():
        raise ManifestIntegrityError(
            f"record {rec.id}: authentic label with a nonzero mask")


def load_manifest(path: str | Path) -> tuple[MixtureManifest, list[SampleRecord]]:
    """Load either manifest form; loading is atomic (all-or-nothing).

    JSONL record files return (derived mixture, records); declared
    mixture documents return (mixture, []).
    """
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    # Sniff the form: a declared mixture is one JSON object (possibly
    # pretty-printed) carrying an "entries" key; anything else is JSONL.
    if text.lstrip().startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError:
            doc = None
        if isinstance(doc, dict) and "entries" in doc:
            return MixtureManifest.from_dict(doc), []

    records: list[SampleRecord] = []
    seen_ids: set[str] = set()
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestParseError(
                f"{p}:{line_no}: invalid JSON: {exc}", line_number=line_no) from exc
        if not isinstance(obj, dict):
            raise ManifestParseError(
                f"{p}:{line_no}: record must be an object", line_number=line_no)
        try:
            rec = SampleRecord.from_dict(obj)
        except ManifestParseError as exc:
            raise ManifestParseError(f"{p}:{line_no}: {exc}", line_number=line_no) from exc
        if rec.id in seen_ids:
            raise ManifestIntegrityError(f"{p}:{line_no}: duplicate record id {rec.id!r}")
        seen_ids.add(rec.id)
        records.append(rec)
    for rec in records:
        _verify_authentic_mask(rec)
    mixture = derive_mixture(p.stem, records) if records else MixtureManifest(
        name=p.stem, entries=[], total=0)
    return mixture, records


def dump_records(records: Iterable[SampleRecord], path: str | Path) -> None:
    lines = [json.dumps(rec.to_dict(), sort_keys=True, ensure_ascii=False)
             for rec in records]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def uniform_weights(domains: Iterable[str] = DOMAINS) -> dict[str, float]:
    """Uniform preset over the given domains."""
    ds = list(domains)
    return {d: 1.0 / len(ds) for d in ds}


def balanced_sample(records: Sequence[SampleRecord],
                    weights: Mapping[str, float],
                    n: int, seed: int) -> list[SampleRecord]:
    """n draws with replacement; domain picked by weight, record
    uniformly within the domain.  Draw i consumes counters 2i (domain)
    and 2i+1 (index)."""
    total = sum(weights.values())
    if abs(total - 1.0) > WEIGHT_TOLERANCE:
        raise UnsatisfiableMixtureError(f"weights sum to {total!r}, expected 1")
    if any(w < 0 for w in weights.values()):
        raise UnsatisfiableMixtureError("weights must be nonnegative")
    active = [(d, w) for d, w in sorted(weights.items()) if w > 0]
    pools: dict[str, list[SampleRecord]] = {d: [] for d, _ in active}
    for rec in sorted(records, key=lambda r: r.id):
        if rec.domain in pools:
            pools[rec.domain].append(rec)
    for d, _ in active:
        if not pools[d]:
            raise UnsatisfiableMixtureError(f"weighted domain {d!r} has no records")

    out: list[SampleRecord] = []
    for i in range(n):
        u_domain = rng.uniform(seed, 2 * i)
        u_index = rng.uniform(seed, 2 * i + 1)
        cum = 0.0
        chosen = active[-1][0]
        for d, w in active:
            cum += w
            if u_domain < cum:
                chosen = d
                break
        pool = pools[chosen]
        idx = min(int(u_index * len(pool)), len(pool) - 1)
        out.append(pool[idx])
    return out


def recompose(base: MixtureManifest, per_domain_metric: Mapping[str, float],
              floor: float) -> MixtureManifest:
    """Boost weak domains (metric < floor) by floor/metric, renormalize,
    and never let any domain fall below 50% of its base weight.

    Boost factors are computed against max(metric, 0.05) so degenerate
    metrics stay bounded.  If no domain is weak the mixture is returned
    unchanged (weights bit-identical).
    """
    base.validate()
    if not 0.0 < floor < 1.0:
        raise RecomposeDegenerateError(f"floor must be in (0, 1), got {floor}")
    for d, m in per_domain_metric.items():
        if not 0.0 <= m <= 1.0:
            raise RecomposeDegenerateError(f"metric for {d!r} is {m!r}, outside [0, 1]")

    domain_w = base.domain_weights()
    weak = {d for d, m in per_domain_metric.items()
            if d in domain_w and m < floor and domain_w[d] > 0}
    if not weak:
        return MixtureManifest(name=base.name, entries=list(base.entries),
                               total=base.total, metadata=dict(base.metadata))

    boost = {
        d: (floor / max(per_domain_metric[d], _METRIC_FLOOR) if d in weak else 1.0)
        for d in domain_w
    }
    raw = {d: domain_w[d] * boost[d] for d in domain_w}
    mass = sum(raw.values())
    if mass <= 0.0:
        raise RecomposeDegenerateError("no weight mass to recompose")
    new_w = {d: raw[d] / mass for d in domain_w}

    # Clamp shrunken domains at half their base weight, redistributing
    # the remaining mass over the others proportionally to raw weight.
    floors = {d: 0.5 * domain_w[d] for d in domain_w}
    clamped: set[str] = set()
    while True:
        newly = {d for d in domain_w
                 if d not in clamped and new_w[d] < floors[d] - 1e-15}
        if not newly:
            break
        clamped |= newly
        fixed_mass = sum(floors[d] for d in clamped)
        free = [d for d in domain_w if d not in clamped]
        free_raw = sum(raw[d] for d in free)
        if free_raw <= 0.0 or fixed_mass >= 1.0:
            raise RecomposeDegenerateError("recomposition floors absorb all mass")
        for d in domain_w:
            new_w[d] = floors[d] if d in clamped else raw[d] * (1.0 - fixed_mass) / free_raw

    factor = {d: (new_w[d] / domain_w[d] if domain_w[d] > 0 else 0.0) for d in domain_w}
    entries = [
        MixtureEntry(source=e.source, domain=e.domain, count=e.count,
                     weight=e.weight * factor[e.domain])
        for e in base.entries
    ]
    out = MixtureManifest(name=f"{base.name}+recomposed", entries=entries,
                          total=base.total, metadata=dict(base.metadata))
    out.validate()
    return out


@dataclass(frozen=True)
class ScalingRun:
    """One data-scaling experiment: a base mixture plus added data in
    one domain, with per-domain metrics before and after."""
    run_id: str
    base_manifest: str
    added_domain: str
    added_count: int
    base_metric: dict
    per_domain_metric: dict
    relative_gain: dict

    def to_dict(self) -> dict:
        return {
            "run_id": self.run_id,
            "base_manifest": self.base_manifest,
            "added": {"domain": self.added_domain, "count": self.added_count},
            "base_metric": dict(self.base_metric),
            "per_domain_metric": dict(self.per_domain_metric),
            "relative_gain": dict(self.relative_gain),
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "ScalingRun":
        try:
            return cls(
                run_id=d["run_id"], base_manifest=d["base_manifest"],
                added_domain=d["added"]["domain"], added_count=int(d["added"]["count"]),
                base_metric=dict(d["base_metric"]),
                per_domain_metric=dict(d["per_domain_metric"]),
                relative_gain=dict(d["relative_gain"]),
            )
        except (KeyError, TypeError) as exc:
            raise ManifestParseError(f"malformed scaling run: {exc}") from exc


def compute_relative_gains(base_metric: Mapping[str, float],
                           new_metric: Mapping[str, float]) -> dict[str, float]:
    """Percent gain per domain: 100 * (new - base) / base."""
    if set(base_metric) != set(new_metric):
        raise LedgerConsistencyError(
            f"metric domains differ: {sorted(base_metric)} vs {sorted(new_metric)}")
    gains: dict[str, float] = {}
    for d in sorted(base_metric):
        base = float(base_metric[d])
        if base == 0.0:
            raise LedgerConsistencyError(f"base metric for {d!r} is zero")
        gains[d] = 100.0 * (float(new_metric[d]) - base) / base
    return gains


def make_scaling_run(run_id: str, base_manifest: str, added_domain: str,
                     added_count: int, base_metric: Mapping[str, float],
                     per_domain_metric: Mapping[str, float]) -> ScalingRun:
    """ScalingRun with its relative gains computed from the metrics."""
    if added_count <= 0:
        raise ManifestParseError(f"added count must be positive, got {added_count}")
    gains = compute_relative_gains(base_metric, per_domain_metric)
    return ScalingRun(run_id=run_id, base_manifest=base_manifest,
                      added_domain=added_domain, added_count=added_count,
                      base_metric=dict(base_metric),
                      per_domain_metric=dict(per_domain_metric),
                      relative_gain=gains)


def _verify_run_gains(run: ScalingRun) -> None:
    recomputed = compute_relative_gains(run.base_metric, run.per_domain_metric)
    if set(recomputed) != set(run.relative_gain):
        raise LedgerConsistencyError(
            f"run {run.run_id}: gain domains disagree with metrics")
    for d, g in recomputed.items():
        if abs(g - float(run.relative_gain[d])) > GAIN_TOLERANCE:
            raise LedgerConsistencyError(
                f"run {run.run_id}: stored gain {run.relative_gain[d]!r} for {d!r} "
                f"disagrees with recomputed {g!r}")


def load_ledger(path: str | Path) -> list[ScalingRun]:
    """All ledger entries, gains re-verified on load."""
    p = Path(path)
    if not p.exists():
        return []
    runs: list[ScalingRun] = []
    seen: set[str] = set()
    for line_no, line in enumerate(p.read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestParseError(
                f"{p}:{line_no}: invalid JSON: {exc}", line_number=line_no) from exc
        run = ScalingRun.from_dict(obj)
        if run.run_id in seen:
            raise DuplicateRunError(f"{p}:{line_no}: duplicate run_id {run.run_id!r}")
        seen.add(run.run_id)
        _verify_run_gains(run)
        runs.append(run)
    return runs


def ledger_record(run: ScalingRun, path: str | Path) -> None:
    """Append one verified run to the append-only JSONL ledger."""
    _verify_run_gains(run)
    existing = load_ledger(path)
    if any(r.run_id == run.run_id for r in existing):
        raise DuplicateRunError(f"run_id {run.run_id!r} already in ledger")
    line = json.dumps(run.to_dict(), sort_keys=True, ensure_ascii=False)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(line + "\n")


@dataclass(frozen=True)
class SupplementPlan:
    target_domain: str
    target_operations: tuple[str, ...]
    rationale: str
    requested_count: int

    def __post_init__(self) -> None:
        if self.requested_count <= 0:
            raise ManifestParseError("requested_count must be positive")
        for op in self.target_operations:
            if op not in OPERATIONS:
                raise ManifestParseError(f"operation {op!r} not in vocabulary")

    def to_dict(self) -> dict:
        return {
            "target_domain": self.target_domain,
            "target_operations": list(self.target_operations),
            "rationale": self.rationale,
            "requested_count": self.requested_count,
        }


def mine_badcases(report, k: int) -> list[SupplementPlan]:
    """Group misclassified samples by (domain, operation) and emit one
    plan per group, worst first (ties lexicographic), truncated to k.
    Each plan requests 2x the group's error count.

    The report may be an EvalReport or its dict form; per-sample rows
    must carry domain tags (operation may be absent).
    """
    rows = report.get("per_sample") if isinstance(report, dict) else getattr(
        report, "per_sample", None)
    if rows is None:
        raise InsufficientDetailError("report has no per-sample rows")
    rows = list(rows)
    if rows and not isinstance(rows[0], dict):
        rows = [r.to_dict() for r in rows]
    groups: dict[tuple[str, str], int] = {}
    for row in rows:
        if "correct" not in row or "domain" not in row:
            raise InsufficientDetailError(
                "per-sample rows need correct and domain fields")
        if row["correct"]:
            continue
        op = row.get("operation") or ""
        key = (row["domain"], op)
        groups[key] = groups.get(key, 0) + 1
    ordered = sorted(groups.items(), key=lambda kv: (-kv[1], kv[0]))
    plans: list[SupplementPlan] = []
    for (domain, op), n_err in ordered[:k]:
        ops = (op,) if op else ()
        plans.append(SupplementPlan(
            target_domain=domain,
            target_operations=ops,
            rationale=(f"{n_err} misclassified {domain}"
                       + (f"/{op}" if op else "") + " samples"),
            requested_count=2 * n_err,
        ))
    return plans


def category_counts(total: int, weights: Mapping[str, float]) -> dict[str, int]:
    """Integer per-category counts for a weighted total via largest
    remainder; remainder ties break lexicographically."""
    if total < 0:
        raise ManifestParseError(f"total must be nonnegative, got {total}")
    s = sum(weights.values())
    if abs(s - 1.0) > WEIGHT_TOLERANCE:
        raise ManifestParseError(f"weights sum to {s!r}, expected 1")
    exact = {c: total * w for c, w in weights.items()}
    counts = {c: int(np.floor(v)) for c, v in exact.items()}
    leftover = total - sum(counts.values())
    by_remainder = sorted(weights, key=lambda c: (-(exact[c] - counts[c]), c))
    for c in by_remainder[:leftover]:
        counts[c] += 1
    return counts
