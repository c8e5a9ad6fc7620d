#!/usr/bin/env python3
"""Independent re-computation of a detection report's numbers.

Deliberately imports nothing from the package under test: images are
read with PIL, the manifest with the json module, and every formula is
restated here from first principles.  Used by the acceptance suite to
cross-check end-to-end reports.

Usage: e2e_oracle.py --manifest M.jsonl [--report R.json] [--threshold T]

Prints {"auc": ..., "accuracy": ...} computed from the images alone.
With --report it exits 1 unless the report's auc/accuracy benchmark
values match to 1e-6.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
from PIL import Image

# detector constants, restated independently of the implementation
ENERGY_MIDPOINT = 0.005
ENERGY_WIDTH = 0.002
SCORE_CLAMP = 1e-12
THRESHOLD = 0.5


def read_manifest(path: Path) -> list[dict]:
    rows = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if line.strip():
            rows.append(json.loads(line))
    return rows


def residual_energy(img: np.ndarray) -> float:
    """Mean absolute difference to the 3x3 edge-padded box blur, in
    [0, 1] units."""
    f = img.astype(np.float64)
    pad = np.pad(f, ((1, 1), (1, 1), (0, 0)), mode="edge")
    acc = np.zeros_like(f)
    for dy in range(3):
        for dx in range(3):
            acc += pad[dy:dy + f.shape[0], dx:dx + f.shape[1], :]
    return float(np.mean(np.abs(f - acc / 9.0))) / 255.0


def detector_score(img: np.ndarray) -> float:
    e = residual_energy(img)
    s = 1.0 / (1.0 + math.exp(-(e - ENERGY_MIDPOINT) / ENERGY_WIDTH))
    return min(max(s, SCORE_CLAMP), 1.0 - SCORE_CLAMP)


def pair_counting_auc(scores: list[float], labels: list[int]) -> float:
    """Probability a random positive outranks a random negative, ties
    worth half, by explicit pair enumeration."""
    pos = [s for s, l in zip(scores, labels) if l == 1]
    neg = [s for s, l in zip(scores, labels) if l == 0]
    if not pos or not neg:
        raise SystemExit("oracle: need both classes for AUC")
    wins = 0.0
    for p in pos:
        for n in neg:
            if p > n:
                wins += 1.0
            elif p == n:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def threshold_accuracy(scores: list[float], labels: list[int],
                       threshold: float) -> float:
    correct = sum(1 for s, l in zip(scores, labels)
                  if (1 if s > threshold else 0) == l)
    return correct / len(scores)


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--manifest", required=True)
    ap.add_argument("--report", default=None)
    ap.add_argument("--threshold", type=float, default=THRESHOLD)
    ap.add_argument("--tolerance", type=float, default=1e-6)
    args = ap.parse_args()

    records = sorted(read_manifest(Path(args.manifest)), key=lambda r: r["id"])
    scores, labels = [], []
    for rec in records:
        with Image.open(rec["image_ref"]) as im:
            img = np.asarray(im.convert("RGB"), dtype=np.uint8)
        scores.append(detector_score(img))
        labels.append(int(rec["label"]))

    computed = {
        "auc": pair_counting_auc(scores, labels),
        "accuracy": threshold_accuracy(scores, labels, args.threshold),
    }
    print(json.dumps(computed, sort_keys=True))

    if args.report is None:
        return 0
    report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    failures = []
    for bench in report["benchmarks"]:
        metric = bench["metric"]
        if metric not in computed or bench["value"] is None:
            continue
        if abs(bench["value"] - computed[metric]) > args.tolerance:
            failures.append(
                f"{bench['name']}: report {bench['value']!r} vs "
                f"oracle {computed[metric]!r}")
    if failures:
        for f in failures:
            print(f"MISMATCH {f}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
