"""Publication-shaped table rendering.

Frozen formatting rule: fractional metrics are shown as percentages
with exactly one decimal digit, rounded half-to-even, computed in
decimal arithmetic on the float's shortest repr so binary noise below
the repr level can never flip a printed digit.

Comparison marks: within a row compared across columns, every cell
tied for the best value is wrapped ``*v*`` and every cell tied for the
second-best distinct value is wrapped ``_v_``.  Marks need at least
two columns, and second marks need at least two distinct values.

Rendered tables carry no timestamps so identical inputs produce
byte-identical files.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Mapping, Sequence

from .compose import ScalingRun
from .errors import BenchmarkAlignmentError, EmptySetError
from .perturb import KINDS, grid_strengths
from .perturb.sweep import RobustnessReport
from .runner import EvalReport, GainTable

MISSING_CELL = "--"


def format_percent(value: float) -> str:
    """0.915 -> '91.5' (one decimal, half-even, decimal arithmetic)."""
    scaled = Decimal(repr(float(value))) * Decimal(100)
    return str(scaled.quantize(Decimal("0.1"), rounding=ROUND_HALF_EVEN))


def format_points(value: float, *, signed: bool = True) -> str:
    """Percentage points with one half-even decimal, '+3.3' style."""
    q = Decimal(repr(float(value))).quantize(Decimal("0.1"),
                                             rounding=ROUND_HALF_EVEN)
    text = str(q)
    if signed and not text.startswith("-"):
        text = "+" + text
    return text


@dataclass
class Table:
    columns: list[str]
    rows: list[list[str]]
    title: str = ""
    footnotes: list[str] = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(self.columns)
        writer.writerows(self.rows)
        return buf.getvalue()

    def to_text(self) -> str:
        widths = [len(c) for c in self.columns]
        for row in self.rows:
            for i, cell in enumerate(row):
                widths[i] = max(widths[i], len(cell))
        lines = []
        if self.title:
            lines.append(self.title)
        header = "  ".join(c.ljust(w) for c, w in zip(self.columns, widths))
        lines.append(header.rstrip())
        lines.append("  ".join("-" * w for w in widths))
        for row in self.rows:
            cells = [row[0].ljust(widths[0])]
            cells += [cell.rjust(w) for cell, w in zip(row[1:], widths[1:])]
            lines.append("  ".join(cells).rstrip())
        for note in self.footnotes:
            lines.append(f"[note] {note}")
        return "\n".join(lines) + "\n"


def _mark_row(values: Sequence[float | None], formatted: list[str]) -> list[str]:
    present = sorted({v for v in values if v is not None}, reverse=True)
    if sum(1 for v in values if v is not None) < 2 or not present:
        return formatted
    best = present[0]
    second = present[1] if len(present) >= 2 else None
    out = []
    for v, text in zip(values, formatted):
        if v is None:
            out.append(text)
        elif v == best:
            out.append(f"*{text}*")
        elif second is not None and v == second:
            out.append(f"_{text}_")
        else:
            out.append(text)
    return out


def render_detection_table(reports: Sequence[EvalReport | Mapping], *,
                           labels: Sequence[str] | None = None) -> Table:
    """Benchmarks x backends accuracy/AUC table with per-domain averages."""
    if not reports:
        raise EmptySetError("no reports to render")
    reports = [r if isinstance(r, EvalReport) else EvalReport.from_dict(r)
               for r in reports]
    if labels is None:
        labels = [r.metadata.get("backend", f"col{i}")
                  for i, r in enumerate(reports)]
    if len(labels) != len(reports):
        raise BenchmarkAlignmentError("labels do not match reports")

    base_names = [b.name for b in reports[0].benchmarks]
    for other in reports[1:]:
        names = [b.name for b in other.benchmarks]
        if set(names) != set(base_names):
            raise BenchmarkAlignmentError(
                "reports cover different benchmark sets",
                only_left=set(base_names) - set(names),
                only_right=set(names) - set(base_names))

    by_name = [{b.name: b for b in r.benchmarks} for r in reports]
    rows = []
    for name in base_names:
        meta = by_name[0][name]
        values = [col[name].value for col in by_name]
        formatted = [MISSING_CELL if v is None else format_percent(v)
                     for v in values]
        rows.append([name, meta.domain, meta.metric] + _mark_row(values, formatted))

    domain_avgs = [r.domain_averages() for r in reports]
    all_domains = sorted({d for avgs in domain_avgs for d in avgs})
    for domain in all_domains:
        values = [avgs.get(domain, {}).get("value") for avgs in domain_avgs]
        formatted = [MISSING_CELL if v is None else format_percent(v)
                     for v in values]
        rows.append([f"Avg ({domain})", domain, "avg"]
                    + _mark_row(values, formatted))

    footnotes = []
    n_absent = sum(1 for col in by_name for b in col.values() if b.value is None)
    if n_absent:
        footnotes.append(f"{n_absent} benchmark result(s) absent; "
                         "domain averages cover present benchmarks only.")
    return Table(columns=["benchmark", "domain", "metric"] + list(labels),
                 rows=rows, title="Detection results (%)", footnotes=footnotes)


def render_robustness_table(report: RobustnessReport | Mapping) -> Table:
    """Full perturbation grid: one row per (kind, strength) plus a
    per-kind average row; missing cells print '--' and are excluded
    from averages, with a footnote counting them."""
    if not isinstance(report, RobustnessReport):
        report = RobustnessReport.from_dict(report)
    cell_map = {(c.kind, c.strength): c for c in report.cells}
    avgs = report.kind_avgs()
    rows = []
    n_missing = 0
    for kind in KINDS:
        for strength in grid_strengths(kind):
            cell = cell_map.get((kind, strength))
            if cell is None:
                rows.append([kind, str(strength), MISSING_CELL])
                n_missing += 1
            else:
                rows.append([kind, str(strength), format_percent(cell.accuracy)])
        avg = avgs.get(kind)
        rows.append([kind, "Avg",
                     MISSING_CELL if avg is None else format_percent(avg)])
    footnotes = []
    if n_missing:
        footnotes.append(f"{n_missing} grid cell(s) missing; kind averages "
                         "cover completed cells only.")
    return Table(columns=["kind", "strength", "accuracy"], rows=rows,
                 title="Robustness to perturbations (%)", footnotes=footnotes)


def render_gain_table(gains: GainTable) -> Table:
    rows = [[name, format_points(g)] for name, g in gains.rows]
    rows.append(["Avg", format_points(gains.avg_points)])
    return Table(columns=["benchmark", "gain (points)"], rows=rows,
                 title="Gains from localization supervision")


def emit_series(runs: Sequence[ScalingRun]) -> str:
    """Machine-readable scaling series (CSV).

    One row per (run, domain); data_size is the added sample count on
    the supplemented domain and 0 elsewhere; gains keep full float
    precision via repr so the series round-trips exactly.
    """
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["stage", "domain", "data_size", "relative_gain"])
    for run in runs:
        for domain in sorted(run.relative_gain):
            data_size = run.added_count if domain == run.added_domain else 0
            writer.writerow([run.run_id, domain, data_size,
                             repr(run.relative_gain[domain])])
    return buf.getvalue()
