"""Pixel kernels for the perturbation pipeline, in twin implementations.

Two interchangeable backends compute every kernel: a pure-numpy path
and a numba @njit path.  FIDLKIT_KERNELS selects one ("numpy" or
"numba"); the default is numba when importable, numpy otherwise.  The
two paths perform the identical per-element float64 operation sequence
and quantize once at the end (round half-even, clamp to [0, 255]), so
their outputs are byte-identical -- tests assert this, and the
benchmark in benchmarks/bench_kernels.py compares their speed.

Transcendentals are kept out of the twin code paths: Gaussian weights
and Box-Muller noise deviates come from shared helpers so both paths
consume bit-identical inputs.
"""
from __future__ import annotations

import math
import os

import numpy as np

from .. import rng
from ..errors import BackendConfigError

KERNELS_ENV = "FIDLKIT_KERNELS"

try:
    from . import _numba_impl
    _NUMBA_OK = True
except ImportError:  # numba missing or broken; numpy path still works
    _numba_impl = None
    _NUMBA_OK = False


def numba_available() -> bool:
    return _NUMBA_OK


def active_backend() -> str:
    """Kernel backend selected by the environment, resolved per call."""
    choice = os.environ.get(KERNELS_ENV, "").strip().lower()
    if choice == "":
        return "numba" if _NUMBA_OK else "numpy"
    if choice not in ("numpy", "numba"):
        raise BackendConfigError(
            f"{KERNELS_ENV} must be 'numpy' or 'numba', got {choice!r}")
    if choice == "numba" and not _NUMBA_OK:
        raise BackendConfigError(f"{KERNELS_ENV}=numba but numba is not importable")
    return choice


def _quantize(f: np.ndarray) -> np.ndarray:
    return np.clip(np.rint(f), 0.0, 255.0).astype(np.uint8)


def gauss_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian taps with radius ceil(3*sigma)."""
    r = math.ceil(3.0 * sigma)
    xs = np.arange(-r, r + 1, dtype=np.float64)
    k = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    return k / k.sum()


def noise_deviates(shape: tuple[int, ...], seed: int) -> np.ndarray:
    """Standard normals addressed by flat pixel index (row-major, RGB last)."""
    n = 1
    for d in shape:
        n *= d
    return rng.normals_array(seed, n).reshape(shape)


# -- numpy implementations ------------------------------------------------

def _blur_numpy(img: np.ndarray, sigma: float) -> np.ndarray:
    k = gauss_kernel(sigma)
    r = (k.size - 1) // 2
    f = img.astype(np.float64)
    h, w, _ = f.shape
    padx = np.pad(f, ((0, 0), (r, r), (0, 0)), mode="edge")
    tmp = np.zeros_like(f)
    for i in range(k.size):
        tmp += k[i] * padx[:, i:i + w, :]
    pady = np.pad(tmp, ((r, r), (0, 0), (0, 0)), mode="edge")
    out = np.zeros_like(f)
    for i in range(k.size):
        out += k[i] * pady[i:i + h, :, :]
    return _quantize(out)


def _brightness_numpy(img: np.ndarray, factor: float) -> np.ndarray:
    return _quantize(img.astype(np.float64) * factor)


def _contrast_numpy(img: np.ndarray, factor: float) -> np.ndarray:
    return _quantize((img.astype(np.float64) - 128.0) * factor + 128.0)


def _saturation_numpy(img: np.ndarray, factor: float) -> np.ndarray:
    f = img.astype(np.float64)
    gray = 0.299 * f[:, :, 0] + 0.587 * f[:, :, 1] + 0.114 * f[:, :, 2]
    out = np.empty_like(f)
    for ch in range(3):
        out[:, :, ch] = gray + (f[:, :, ch] - gray) * factor
    return _quantize(out)


def _noise_numpy(img: np.ndarray, z: np.ndarray, amplitude: float) -> np.ndarray:
    return _quantize(img.astype(np.float64) + z * amplitude)


def _resize_numpy(img: np.ndarray, th: int, tw: int) -> np.ndarray:
    f = img.astype(np.float64)
    h, w, _ = f.shape
    sy = h / th
    sx = w / tw
    fy = (np.arange(th, dtype=np.float64) + 0.5) * sy - 0.5
    fx = (np.arange(tw, dtype=np.float64) + 0.5) * sx - 0.5
    y0 = np.floor(fy)
    x0 = np.floor(fx)
    wy = (fy - y0)[:, None, None]
    wx = (fx - x0)[None, :, None]
    y0c = np.clip(y0.astype(np.int64), 0, h - 1)
    y1c = np.clip(y0.astype(np.int64) + 1, 0, h - 1)
    x0c = np.clip(x0.astype(np.int64), 0, w - 1)
    x1c = np.clip(x0.astype(np.int64) + 1, 0, w - 1)
    v00 = f[y0c[:, None], x0c[None, :], :]
    v01 = f[y0c[:, None], x1c[None, :], :]
    v10 = f[y1c[:, None], x0c[None, :], :]
    v11 = f[y1c[:, None], x1c[None, :], :]
    top = v00 + (v01 - v00) * wx
    bot = v10 + (v11 - v10) * wx
    return _quantize(top + (bot - top) * wy)


# -- dispatch --------------------------------------------------------------

def gaussian_blur(img: np.ndarray, sigma: float) -> np.ndarray:
    if active_backend() == "numba":
        return _numba_impl.blur(img, gauss_kernel(sigma))
    return _blur_numpy(img, sigma)


def brightness(img: np.ndarray, factor: float) -> np.ndarray:
    if active_backend() == "numba":
        return _numba_impl.brightness(img, factor)
    return _brightness_numpy(img, factor)


def contrast(img: np.ndarray, factor: float) -> np.ndarray:
    if active_backend() == "numba":
        return _numba_impl.contrast(img, factor)
    return _contrast_numpy(img, factor)


def saturation(img: np.ndarray, factor: float) -> np.ndarray:
    if active_backend() == "numba":
        return _numba_impl.saturation(img, factor)
    return _saturation_numpy(img, factor)


def add_noise(img: np.ndarray, sigma: float, seed: int) -> np.ndarray:
    z = noise_deviates(img.shape, seed)
    amplitude = sigma * 255.0
    if active_backend() == "numba":
        return _numba_impl.add_noise(img, z, amplitude)
    return _noise_numpy(img, z, amplitude)


def resize_bilinear(img: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    if active_backend() == "numba":
        return _numba_impl.resize_bilinear(img, target_h, target_w)
    return _resize_numpy(img, target_h, target_w)
