from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from fidlkit.cli import main, run_main
from fidlkit.compose import ScalingRun, load_manifest
from fidlkit.imgio import load_image
from fidlkit.jsonutil import document_dumps
from fidlkit.perturb import KINDS, grid_strengths
from fidlkit.perturb.sweep import SweepCell, RobustnessReport
from fidlkit.protocol import parse_line
from fidlkit.runner import BenchmarkResult, EvalReport


@pytest.fixture()
def runner() -> CliRunner:
    return CliRunner()


def invoke(runner, args, **kw):
    result = runner.invoke(main, args, catch_exceptions=False, **kw)
    assert result.exit_code == 0, result.output
    return result


def write_benchmarks_file(tmp_path: Path, manifest: Path) -> Path:
    doc = {"benchmarks": [
        {"name": "synthetic-auc", "manifest": str(manifest),
         "metric": "auc", "domain": "nature"},
        {"name": "synthetic-acc", "manifest": str(manifest),
         "metric": "accuracy", "domain": "nature"},
    ]}
    path = tmp_path / "benchmarks.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def save_report(path: Path, values: dict[str, float]) -> None:
    report = EvalReport(
        metadata={"backend": "x"},
        benchmarks=[BenchmarkResult(name=n, domain="nature", metric="auc",
                                    value=v, n_samples=4, n_failed=0)
                    for n, v in values.items()],
        per_sample=[])
    report.save(path)


class TestSynthCommand:
    def test_writes_manifest_and_images(self, runner, tmp_path):
        out = tmp_path / "corpus"
        result = invoke(runner, ["synth", "--out", str(out), "--count", "6",
                                 "--seed", "1", "--size", "32"])
        assert "manifest.jsonl" in result.output
        _, records = load_manifest(out / "manifest.jsonl")
        assert len(records) == 6
        assert all(Path(r.image_ref).exists() for r in records)


class TestPerturbCommand:
    def test_identity_contrast(self, runner, tmp_path):
        corpus = tmp_path / "c"
        invoke(runner, ["synth", "--out", str(corpus), "--count", "2",
                        "--size", "32"])
        src = corpus / "images" / "s0.png"
        dst = tmp_path / "out.png"
        invoke(runner, ["perturb", "--in", str(src), "--kind", "contrast",
                        "--strength", "1.0", "--out", str(dst)])
        assert np.array_equal(load_image(src), load_image(dst))

    def test_bad_strength_exits_2(self, tmp_path, monkeypatch, capsys):
        corpus = tmp_path / "c"
        CliRunner().invoke(main, ["synth", "--out", str(corpus), "--count", "2",
                                  "--size", "32"], catch_exceptions=False)
        src = corpus / "images" / "s0.png"
        monkeypatch.setattr(sys, "argv", [
            "fidlkit", "perturb", "--in", str(src), "--kind", "jpeg",
            "--strength", "0", "--out", str(tmp_path / "x.png")])
        assert run_main() == 2
        assert "error:" in capsys.readouterr().err


class TestEvalRun:
    def test_run_with_mock_backend(self, runner, tmp_path, corpus_dir,
                                   mock_config):
        benches = write_benchmarks_file(tmp_path, corpus_dir / "manifest.jsonl")
        out = tmp_path / "report.json"
        result = invoke(runner, [
            "eval", "run", "--benchmarks", str(benches),
            "--backend", f"mock:{mock_config}", "--out", str(out)])
        assert "2/2 benchmarks" in result.output
        report = EvalReport.load(out)
        assert report.benchmark_values()["synthetic-auc"] == pytest.approx(1.0)
        assert report.benchmark_values()["synthetic-acc"] == pytest.approx(1.0)

    def test_repeat_runs_byte_identical(self, runner, tmp_path, corpus_dir,
                                        mock_config):
        benches = write_benchmarks_file(tmp_path, corpus_dir / "manifest.jsonl")
        outs = []
        for name in ("r1.json", "r2.json"):
            out = tmp_path / name
            invoke(runner, ["eval", "run", "--benchmarks", str(benches),
                            "--backend", f"mock:{mock_config}",
                            "--backend-label", "mock", "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_perturbed_run(self, runner, tmp_path, corpus_dir, mock_config):
        benches = write_benchmarks_file(tmp_path, corpus_dir / "manifest.jsonl")
        out = tmp_path / "report.json"
        invoke(runner, ["eval", "run", "--benchmarks", str(benches),
                        "--backend", f"mock:{mock_config}",
                        "--perturb", "brightness:1.5", "--out", str(out)])
        report = EvalReport.load(out)
        assert report.metadata["perturbation"] == {
            "kind": "brightness", "strength": 1.5, "rng_seed": 0}

    def test_decode_options_recorded(self, runner, tmp_path, corpus_dir,
                                     mock_config):
        benches = write_benchmarks_file(tmp_path, corpus_dir / "manifest.jsonl")
        out = tmp_path / "report.json"
        invoke(runner, ["eval", "run", "--benchmarks", str(benches),
                        "--backend", f"mock:{mock_config}",
                        "--seed", "7", "--temperature", "0.3",
                        "--template", "2", "--out", str(out)])
        report = EvalReport.load(out)
        assert report.metadata["seed"] == 7
        assert report.metadata["temperature"] == 0.3
        assert report.metadata["template_id"] == 2


class TestRenderPairs:
    def test_fixed_template_ndjson(self, runner, tmp_path, corpus_dir):
        out = tmp_path / "pairs.ndjson"
        invoke(runner, ["eval", "render-pairs",
                        "--manifest", str(corpus_dir / "manifest.jsonl"),
                        "--template", "3", "--out", str(out)])
        rows = [parse_line(l) for l in out.read_text(encoding="utf-8").splitlines()]
        assert len(rows) == 12
        assert all(r["template_id"] == 3 for r in rows)

    def test_rotation_default(self, runner, tmp_path, corpus_dir):
        out = tmp_path / "pairs.ndjson"
        invoke(runner, ["eval", "render-pairs",
                        "--manifest", str(corpus_dir / "manifest.jsonl"),
                        "--seed", "4", "--out", str(out)])
        rows = [parse_line(l) for l in out.read_text(encoding="utf-8").splitlines()]
        tids = {r["template_id"] for r in rows}
        assert tids <= set(range(10))
        assert len(tids) > 1  # rotation actually varies


class TestEvalDelta:
    def test_delta_table_to_stdout(self, runner, tmp_path):
        save_report(tmp_path / "a.json", {"b1": 0.80, "b2": 0.90})
        save_report(tmp_path / "b.json", {"b1": 0.90, "b2": 0.91})
        result = invoke(runner, ["eval", "delta", "--a",
                                 str(tmp_path / "a.json"),
                                 "--b", str(tmp_path / "b.json")])
        assert "+10.0" in result.output
        assert "+1.0" in result.output
        assert "Avg" in result.output

    def test_mismatched_reports_exit_2(self, tmp_path, monkeypatch, capsys):
        save_report(tmp_path / "a.json", {"b1": 0.8})
        save_report(tmp_path / "b.json", {"b2": 0.8})
        monkeypatch.setattr(sys, "argv", [
            "fidlkit", "eval", "delta", "--a", str(tmp_path / "a.json"),
            "--b", str(tmp_path / "b.json")])
        assert run_main() == 2
        assert "error:" in capsys.readouterr().err


class TestComposeCommands:
    def test_sample(self, runner, tmp_path, corpus_dir):
        out = tmp_path / "sample.jsonl"
        result = invoke(runner, ["compose", "sample",
                                 "--manifest", str(corpus_dir / "manifest.jsonl"),
                                 "--count", "8", "--seed", "0",
                                 "--out", str(out)])
        assert "8 records" in result.output
        # sampling draws with replacement, so parse lines directly
        lines = out.read_text(encoding="utf-8").splitlines()
        assert len(lines) == 8
        assert all(json.loads(l)["id"].startswith("s") for l in lines)

    def test_sample_deterministic(self, runner, tmp_path, corpus_dir):
        outs = []
        for name in ("s1.jsonl", "s2.jsonl"):
            out = tmp_path / name
            invoke(runner, ["compose", "sample",
                            "--manifest", str(corpus_dir / "manifest.jsonl"),
                            "--count", "6", "--seed", "5", "--out", str(out)])
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_recompose(self, runner, tmp_path):
        mixture = {
            "name": "toy", "total": 100,
            "entries": [
                {"source": "a", "domain": "deepfake", "count": 25, "weight": 0.25},
                {"source": "b", "domain": "aigc", "count": 25, "weight": 0.25},
                {"source": "c", "domain": "document", "count": 25, "weight": 0.25},
                {"source": "d", "domain": "nature", "count": 25, "weight": 0.25},
            ],
        }
        mpath = tmp_path / "mixture.json"
        mpath.write_text(json.dumps(mixture), encoding="utf-8")
        metrics = tmp_path / "metrics.json"
        metrics.write_text(json.dumps({"deepfake": 0.25, "aigc": 0.9,
                                       "document": 0.9, "nature": 0.9}),
                           encoding="utf-8")
        out = tmp_path / "recomposed.json"
        invoke(runner, ["compose", "recompose", "--manifest", str(mpath),
                        "--metrics", str(metrics), "--out", str(out)])
        doc = json.loads(out.read_text(encoding="utf-8"))
        weights = {e["domain"]: e["weight"] for e in doc["entries"]}
        assert sum(weights.values()) == pytest.approx(1.0, abs=1e-12)
        assert weights["deepfake"] > weights["aigc"]

    def test_ledger_and_series(self, runner, tmp_path):
        run = ScalingRun(
            run_id="toy-run", base_manifest="base.json",
            added_domain="deepfake", added_count=1000,
            base_metric={"deepfake": 0.8, "aigc": 0.8},
            per_domain_metric={"deepfake": 0.9, "aigc": 0.8},
            relative_gain={"deepfake": 12.499999999999998, "aigc": 0.0})
        run_path = tmp_path / "run.json"
        run_path.write_text(document_dumps(run.to_dict()), encoding="utf-8")
        ledger = tmp_path / "ledger.jsonl"
        result = invoke(runner, ["compose", "ledger", "--run", str(run_path),
                                 "--ledger", str(ledger)])
        assert "toy-run" in result.output
        series = invoke(runner, ["report", "series", "--ledger", str(ledger)])
        assert "stage,domain,data_size,relative_gain" in series.output
        assert "toy-run,deepfake,1000,12.499999999999998" in series.output
        assert "toy-run,aigc,0,0.0" in series.output

    def test_mine(self, runner, tmp_path):
        report = {"per_sample": [
            {"domain": "deepfake", "operation": "face_swap", "correct": False},
            {"domain": "deepfake", "operation": "face_swap", "correct": False},
            {"domain": "aigc", "operation": None, "correct": False},
            {"domain": "nature", "operation": None, "correct": True},
        ]}
        path = tmp_path / "report.json"
        path.write_text(json.dumps(report), encoding="utf-8")
        result = invoke(runner, ["compose", "mine", "--report", str(path),
                                 "--k", "2"])
        plans = json.loads(result.output)
        assert plans[0]["target_domain"] == "deepfake"
        assert plans[0]["requested_count"] == 4  # 2x the error count


class TestReportCommands:
    def test_detection_text_and_csv(self, runner, tmp_path):
        save_report(tmp_path / "a.json", {"b1": 0.9, "b2": 0.8})
        save_report(tmp_path / "b.json", {"b1": 0.85, "b2": 0.95})
        result = invoke(runner, [
            "report", "detection", "--reports", str(tmp_path / "a.json"),
            "--reports", str(tmp_path / "b.json"), "--labels", "left,right"])
        assert "*90.0*" in result.output
        assert "left" in result.output and "right" in result.output
        csv_out = tmp_path / "table.csv"
        invoke(runner, ["report", "detection",
                        "--reports", str(tmp_path / "a.json"),
                        "--reports", str(tmp_path / "b.json"),
                        "--csv", "--out", str(csv_out)])
        raw = csv_out.read_bytes()  # read_text would fold the CRLFs
        assert b"\r\n" in raw
        assert raw.splitlines()[0].startswith(b"benchmark,domain,metric")

    def test_robustness(self, runner, tmp_path):
        cells = [SweepCell(kind=k, strength=s, accuracy=0.9,
                           n_samples=4, n_failed=0)
                 for k in KINDS for s in grid_strengths(k)]
        doc = RobustnessReport(cells=cells).to_dict()
        path = tmp_path / "sweep.json"
        path.write_text(document_dumps(doc), encoding="utf-8")
        result = invoke(runner, ["report", "robustness", "--report", str(path)])
        body = [l for l in result.output.splitlines()
                if l and not l.startswith(("kind", "-", "Robustness"))]
        assert len(body) == 42

    def test_gains_csv(self, runner, tmp_path):
        save_report(tmp_path / "a.json", {"b1": 0.80})
        save_report(tmp_path / "b.json", {"b1": 0.913})
        result = invoke(runner, ["report", "gains",
                                 "--a", str(tmp_path / "a.json"),
                                 "--b", str(tmp_path / "b.json"), "--csv"])
        assert "b1,+11.3" in result.output


class TestBackendCommand:
    def test_mock_serves_stdio_session(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"scores": {"z": 0.75}}), encoding="utf-8")
        session = ('{"hello":1}\n'
                   '{"type":"detect","request_id":"r","image_ref":"a/z.png",'
                   '"question":"q?","decode":{"seed":42,"temperature":0.1}}\n'
                   '{"type":"shutdown"}\n')
        result = invoke(runner, ["backend", "mock", "--config", str(cfg)],
                        input=session)
        lines = [parse_line(l) for l in result.output.splitlines() if l]
        assert lines[0]["hello"] == 1
        assert lines[1]["type"] == "detect"

    def test_baseline_serves_stdio_session(self, runner):
        result = invoke(runner, ["backend", "baseline"],
                        input='{"hello":1}\n{"type":"shutdown"}\n')
        assert parse_line(result.output.splitlines()[0])["capabilities"] == ["detect"]


class TestExitCodes:
    def test_success_returns_0(self, tmp_path, monkeypatch):
        monkeypatch.setattr(sys, "argv", [
            "fidlkit", "synth", "--out", str(tmp_path / "c"), "--count", "2",
            "--size", "16"])
        assert run_main() == 0

    def test_usage_error_nonzero(self, monkeypatch, capsys):
        monkeypatch.setattr(sys, "argv", ["fidlkit", "eval", "run"])
        code = run_main()
        assert code != 0
        captured = capsys.readouterr()
        assert "Missing option" in captured.err + captured.out
