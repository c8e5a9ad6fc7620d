"""Time the twin kernel backends (numpy vs numba) on realistic images.

Run:  python3 benchmarks/bench_kernels.py [--size 512] [--repeats 5]

Each kernel is timed with both backends on the same input; the numba
path gets one untimed warm-up call per kernel so JIT compilation never
counts against it.  Parity is asserted (byte-identical outputs) before
any timing is reported.
"""
from __future__ import annotations

import argparse
import os
import statistics
import sys
import time

import numpy as np

from fidlkit.perturb import kernels


def make_image(size: int, seed: int = 1234) -> np.ndarray:
    r = np.random.default_rng(seed)
    return r.integers(0, 256, size=(size, size, 3), dtype=np.uint8)


def run_cases(size: int):
    img = make_image(size)
    return [
        ("gaussian_blur(sigma=2)", lambda: kernels.gaussian_blur(img, 2.0)),
        ("brightness(0.6)", lambda: kernels.brightness(img, 0.6)),
        ("contrast(1.4)", lambda: kernels.contrast(img, 1.4)),
        ("saturation(0.5)", lambda: kernels.saturation(img, 0.5)),
        ("add_noise(sigma=0.10)", lambda: kernels.add_noise(img, 0.10, 7)),
        (f"resize({size}->{size // 2})",
         lambda: kernels.resize_bilinear(img, size // 2, size // 2)),
    ]


def time_backend(backend: str, size: int, repeats: int) -> dict[str, float]:
    os.environ[kernels.KERNELS_ENV] = backend
    results: dict[str, float] = {}
    for name, fn in run_cases(size):
        fn()  # warm-up: triggers JIT compilation on the numba path
        samples = []
        for _ in range(repeats):
            t0 = time.perf_counter()
            fn()
            samples.append(time.perf_counter() - t0)
        results[name] = statistics.median(samples)
    return results


def check_parity(size: int) -> None:
    img = make_image(size, seed=99)
    probes = [
        lambda: kernels.gaussian_blur(img, 1.5),
        lambda: kernels.brightness(img, 0.8),
        lambda: kernels.contrast(img, 1.2),
        lambda: kernels.saturation(img, 1.5),
        lambda: kernels.add_noise(img, 0.05, 3),
        lambda: kernels.resize_bilinear(img, size // 2, size // 2),
    ]
    for probe in probes:
        os.environ[kernels.KERNELS_ENV] = "numpy"
        a = probe()
        os.environ[kernels.KERNELS_ENV] = "numba"
        b = probe()
        if not np.array_equal(a, b):
            raise AssertionError("backend outputs diverge; refusing to time")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=512,
                        help="square image side in pixels (default: 512)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timed runs per kernel; median reported")
    args = parser.parse_args(argv)

    if not kernels.numba_available():
        print("numba is not importable; nothing to compare", file=sys.stderr)
        return 1

    saved = os.environ.get(kernels.KERNELS_ENV)
    try:
        check_parity(min(args.size, 128))
        numpy_t = time_backend("numpy", args.size, args.repeats)
        numba_t = time_backend("numba", args.size, args.repeats)
    finally:
        if saved is None:
            os.environ.pop(kernels.KERNELS_ENV, None)
        else:
            os.environ[kernels.KERNELS_ENV] = saved

    width = max(len(k) for k in numpy_t)
    print(f"image {args.size}x{args.size}x3 uint8, median of "
          f"{args.repeats} runs (numba warm-up excluded)\n")
    print(f"{'kernel':<{width}}  {'numpy':>10}  {'numba':>10}  {'speedup':>8}")
    for name in numpy_t:
        a, b = numpy_t[name], numba_t[name]
        ratio = a / b if b > 0 else float("inf")
        print(f"{name:<{width}}  {a * 1e3:>8.2f}ms  {b * 1e3:>8.2f}ms  "
              f"{ratio:>7.2f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
