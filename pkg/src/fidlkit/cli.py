"""Command-line front end.

Every command is deterministic for fixed inputs: outputs carry no
wall-clock data and file writes use canonical JSON/CSV encodings, so
repeating a command byte-reproduces its artifacts.
"""
from __future__ import annotations

import sys
from pathlib import Path

import click

from . import compose as compose_mod
from . import report as report_mod
from . import runner as runner_mod
from . import synth as synth_mod
from .backends import (
    DEFAULT_TIMEOUT,
    BaselineBackend,
    MockBackend,
    open_backend,
    serve_stdio,
    serve_tcp,
)
from .errors import FidlkitError
from .imgio import load_image, save_image
from .jsonutil import document_dumps, document_load
from .perturb import parse_spec, robustness_sweep, standard_grid
from .perturb.sweep import RobustnessReport
from .protocol import DEFAULT_SEED, DEFAULT_TEMPERATURE, DecodeParams


def _write_text(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


@click.group()
def main() -> None:
    """Evaluation harness for fake-image detection and localization."""


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--kind", required=True)
@click.option("--strength", required=True)
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--out", required=True)
def perturb(in_path: str, kind: str, strength: str, seed: int, out: str) -> None:
    """Apply one perturbation to one image."""
    spec = parse_spec(f"{kind}:{strength}", rng_seed=seed)
    from .perturb import apply
    save_image(apply(load_image(in_path), spec), out)
    click.echo(f"wrote {out} ({spec.label()})")


@main.group()
def eval() -> None:
    """Benchmark evaluation against a live backend."""


def _decode_options(fn):
    fn = click.option("--seed", default=DEFAULT_SEED, type=int,
                      show_default=True)(fn)
    fn = click.option("--temperature", default=DEFAULT_TEMPERATURE, type=float,
                      show_default=True)(fn)
    fn = click.option("--template", "template_id", default=0, type=int,
                      show_default=True)(fn)
    fn = click.option("--backend-label", default=None,
                      help="Label recorded in report metadata "
                           "(defaults to the backend spec).")(fn)
    fn = click.option("--timeout", default=DEFAULT_TIMEOUT, type=float,
                      show_default=True)(fn)
    return fn


@eval.command("run")
@click.option("--benchmarks", "benchmarks_path", required=True,
              type=click.Path(exists=True))
@click.option("--backend", "backend_spec", required=True,
              help="'baseline', 'mock:<config.json>', 'tcp:<host>:<port>', "
                   "or a subprocess command line.")
@click.option("--perturb", "perturb_str", default=None,
              help="Optional 'kind:strength' applied to every image.")
@_decode_options
@click.option("--out", required=True)
def eval_run(benchmarks_path: str, backend_spec: str, perturb_str: str | None,
             seed: int, temperature: float, template_id: int,
             backend_label: str | None, timeout: float, out: str) -> None:
    """Evaluate every benchmark in a definition file."""
    benchmarks = runner_mod.load_benchmarks(benchmarks_path)
    decode = DecodeParams(seed=seed, temperature=temperature)
    spec = parse_spec(perturb_str) if perturb_str else None
    label = backend_label if backend_label is not None else backend_spec
    with open_backend(backend_spec, timeout=timeout) as backend:
        rep = runner_mod.run(benchmarks, backend, template_id=template_id,
                             decode=decode, perturb_spec=spec,
                             backend_label=label)
    rep.save(out)
    present = [b for b in rep.benchmarks if not b.absent]
    click.echo(f"wrote {out} ({len(present)}/{len(rep.benchmarks)} benchmarks)")
    for b in rep.benchmarks:
        status = ("absent: " + (b.warning or "?")) if b.absent \
            else report_mod.format_percent(b.value)
        click.echo(f"  {b.name} [{b.metric}] {status}")


@eval.command("sweep")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True))
@click.option("--backend", "backend_spec", required=True)
@_decode_options
@click.option("--out", required=True)
def eval_sweep(manifest_path: str, backend_spec: str, seed: int,
               temperature: float, template_id: int,
               backend_label: str | None, timeout: float, out: str) -> None:
    """Run the full 7x5 robustness grid on one manifest."""
    _, records = compose_mod.load_manifest(manifest_path)
    decode = DecodeParams(seed=seed, temperature=temperature)
    label = backend_label if backend_label is not None else backend_spec
    with open_backend(backend_spec, timeout=timeout) as backend:
        rep = robustness_sweep(records, backend, standard_grid(),
                               template_id=template_id, decode=decode,
                               backend_label=label)
    _write_text(document_dumps(rep.to_dict()), out)
    click.echo(f"wrote {out} ({len(rep.cells)} cells)")


@eval.command("render-pairs")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True))
@click.option("--template", "template_id", default=None, type=int,
              help="Fixed template id; omit to rotate by seed.")
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--out", required=True)
def eval_render_pairs(manifest_path: str, template_id: int | None,
                      seed: int, out: str) -> None:
    """Export question/answer rows for a manifest."""
    _, records = compose_mod.load_manifest(manifest_path)
    rows = runner_mod.render_pairs(records, template_id=template_id, seed=seed)
    from .protocol import encode_line
    text = "".join(encode_line(row) for row in rows)
    _write_text(text, out)
    click.echo(f"wrote {out} ({len(rows)} pairs)")


@eval.command("delta")
@click.option("--a", "path_a", required=True, type=click.Path(exists=True),
              help="Report without the extra supervision.")
@click.option("--b", "path_b", required=True, type=click.Path(exists=True),
              help="Report with it.")
@click.option("--out", default="-", show_default=True)
def eval_delta(path_a: str, path_b: str, out: str) -> None:
    """Per-benchmark gains of report B over report A, in points."""
    gains = runner_mod.supervision_delta(runner_mod.EvalReport.load(path_a),
                                         runner_mod.EvalReport.load(path_b))
    _write_text(report_mod.render_gain_table(gains).to_text(), out)


@main.group()
def compose() -> None:
    """Data mixtures: sampling, recomposition, ledger, mining."""


@compose.command("sample")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True))
@click.option("--count", required=True, type=int)
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--weights", "weights_path", default=None,
              type=click.Path(exists=True),
              help="JSON {domain: weight}; defaults to uniform.")
@click.option("--out", required=True)
def compose_sample(manifest_path: str, count: int, seed: int,
                   weights_path: str | None, out: str) -> None:
    """Draw a domain-balanced sample from a manifest."""
    _, records = compose_mod.load_manifest(manifest_path)
    weights = (document_load(weights_path) if weights_path
               else compose_mod.uniform_weights())
    picked = compose_mod.balanced_sample(records, weights, count, seed=seed)
    compose_mod.dump_records(picked, out)
    click.echo(f"wrote {out} ({len(picked)} records)")


@compose.command("recompose")
@click.option("--manifest", "manifest_path", required=True,
              type=click.Path(exists=True))
@click.option("--metrics", "metrics_path", required=True,
              type=click.Path(exists=True),
              help="JSON {domain: metric in [0,1]}.")
@click.option("--floor", default=0.5, type=float, show_default=True)
@click.option("--out", required=True)
def compose_recompose(manifest_path: str, metrics_path: str, floor: float,
                      out: str) -> None:
    """Reweight a declared mixture toward weak domains."""
    mixture, _ = compose_mod.load_manifest(manifest_path)
    metrics = document_load(metrics_path)
    result = compose_mod.recompose(mixture, metrics, floor)
    _write_text(document_dumps(result.to_dict()), out)
    click.echo(f"wrote {out}")


@compose.command("ledger")
@click.option("--run", "run_path", required=True, type=click.Path(exists=True),
              help="JSON scaling-run document.")
@click.option("--ledger", "ledger_path", required=True)
def compose_ledger(run_path: str, ledger_path: str) -> None:
    """Verify a scaling run and append it to the ledger."""
    run = compose_mod.ScalingRun.from_dict(document_load(run_path))
    compose_mod.ledger_record(run, ledger_path)
    click.echo(f"recorded {run.run_id} in {ledger_path}")


@compose.command("mine")
@click.option("--report", "report_path", required=True,
              type=click.Path(exists=True))
@click.option("--k", default=5, type=int, show_default=True)
@click.option("--out", default="-", show_default=True)
def compose_mine(report_path: str, k: int, out: str) -> None:
    """Targeted supplement plans from a report's misclassifications."""
    plans = compose_mod.mine_badcases(document_load(report_path), k)
    _write_text(document_dumps([p.to_dict() for p in plans]), out)


@main.group()
def backend() -> None:
    """Built-in reference backends speaking the wire protocol."""


@backend.command("baseline")
@click.option("--tcp", "tcp_port", default=None, type=int,
              help="Serve one TCP session on this port instead of stdio.")
def backend_baseline(tcp_port: int | None) -> None:
    """High-frequency-residual detector (no model download)."""
    be = BaselineBackend()
    if tcp_port is not None:
        serve_tcp(be, "127.0.0.1", tcp_port)
    else:
        serve_stdio(be)


@backend.command("mock")
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True))
@click.option("--tcp", "tcp_port", default=None, type=int)
def backend_mock(config_path: str, tcp_port: int | None) -> None:
    """Score-table backend for tests and protocol work."""
    be = MockBackend.from_config(config_path)
    if tcp_port is not None:
        serve_tcp(be, "127.0.0.1", tcp_port)
    else:
        serve_stdio(be)


@main.group()
def report() -> None:
    """Render reports into publication-shaped tables."""


@report.command("detection")
@click.option("--reports", "report_paths", required=True, multiple=True,
              type=click.Path(exists=True))
@click.option("--labels", default=None,
              help="Comma-separated column labels (defaults to metadata).")
@click.option("--csv", "as_csv", is_flag=True)
@click.option("--out", default="-", show_default=True)
def report_detection(report_paths: tuple[str, ...], labels: str | None,
                     as_csv: bool, out: str) -> None:
    """Benchmarks x backends table with best/second marks."""
    reports = [runner_mod.EvalReport.load(p) for p in report_paths]
    label_list = labels.split(",") if labels else None
    table = report_mod.render_detection_table(reports, labels=label_list)
    _write_text(table.to_csv() if as_csv else table.to_text(), out)


@report.command("robustness")
@click.option("--report", "report_path", required=True,
              type=click.Path(exists=True))
@click.option("--csv", "as_csv", is_flag=True)
@click.option("--out", default="-", show_default=True)
def report_robustness(report_path: str, as_csv: bool, out: str) -> None:
    """Full 7x(5+Avg) perturbation grid table."""
    rep = RobustnessReport.from_dict(document_load(report_path))
    table = report_mod.render_robustness_table(rep)
    _write_text(table.to_csv() if as_csv else table.to_text(), out)


@report.command("series")
@click.option("--ledger", "ledger_path", required=True,
              type=click.Path(exists=True))
@click.option("--out", default="-", show_default=True)
def report_series(ledger_path: str, out: str) -> None:
    """Machine-readable scaling series from a verified ledger."""
    runs = compose_mod.load_ledger(ledger_path)
    _write_text(report_mod.emit_series(runs), out)


@report.command("gains")
@click.option("--a", "path_a", required=True, type=click.Path(exists=True))
@click.option("--b", "path_b", required=True, type=click.Path(exists=True))
@click.option("--csv", "as_csv", is_flag=True)
@click.option("--out", default="-", show_default=True)
def report_gains(path_a: str, path_b: str, as_csv: bool, out: str) -> None:
    """Gain table of report B over report A."""
    gains = runner_mod.supervision_delta(runner_mod.EvalReport.load(path_a),
                                         runner_mod.EvalReport.load(path_b))
    table = report_mod.render_gain_table(gains)
    _write_text(table.to_csv() if as_csv else table.to_text(), out)


@main.command()
@click.option("--out", "out_dir", required=True)
@click.option("--count", default=16, type=int, show_default=True)
@click.option("--seed", default=0, type=int, show_default=True)
@click.option("--size", default=64, type=int, show_default=True)
def synth(out_dir: str, count: int, seed: int, size: int) -> None:
    """Generate a small separable synthetic corpus with masks."""
    manifest = synth_mod.build_separable_corpus(out_dir, count, size=size,
                                                seed=seed)
    click.echo(f"wrote {manifest}")


def run_main() -> int:
    try:
        main(standalone_mode=False)
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except click.Abort:
        return 130
    except FidlkitError as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    return 0


def script_main() -> None:
    """Console-script entry: harness errors exit 2 with a clean message."""
    sys.exit(run_main())
