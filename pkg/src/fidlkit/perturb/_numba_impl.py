"""Numba-jitted twins of the numpy pixel kernels.

Each function mirrors its numpy counterpart operation-for-operation in
float64 (same accumulation order, same single quantization step) so
outputs are byte-identical across backends.  No fastmath: reassociation
would break the parity guarantee.
"""
from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _clamp_quantize(v: float) -> np.uint8:
    r = np.rint(v)
    if r < 0.0:
        r = 0.0
    elif r > 255.0:
        r = 255.0
    return np.uint8(r)


@njit(cache=True)
def blur(img: np.ndarray, k: np.ndarray) -> np.ndarray:
    h, w, c = img.shape
    r = (k.size - 1) // 2
    tmp = np.empty((h, w, c), dtype=np.float64)
    for y in range(h):
        for x in range(w):
            for ch in range(c):
                acc = 0.0
                for t in range(k.size):
                    xx = x + t - r
                    if xx < 0:
                        xx = 0
                    elif xx >= w:
                        xx = w - 1
                    acc += k[t] * np.float64(img[y, xx, ch])
                tmp[y, x, ch] = acc
    out = np.empty((h, w, c), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            for ch in range(c):
                acc = 0.0
                for t in range(k.size):
                    yy = y + t - r
                    if yy < 0:
                        yy = 0
                    elif yy >= h:
                        yy = h - 1
                    acc += k[t] * tmp[yy, x, ch]
                out[y, x, ch] = _clamp_quantize(acc)
    return out


@njit(cache=True)
def brightness(img: np.ndarray, factor: float) -> np.ndarray:
    h, w, c = img.shape
    out = np.empty((h, w, c), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            for ch in range(c):
                out[y, x, ch] = _clamp_quantize(np.float64(img[y, x, ch]) * factor)
    return out


@njit(cache=True)
def contrast(img: np.ndarray, factor: float) -> np.ndarray:
    h, w, c = img.shape
    out = np.empty((h, w, c), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            for ch in range(c):
                v = (np.float64(img[y, x, ch]) - 128.0) * factor + 128.0
                out[y, x, ch] = _clamp_quantize(v)
    return out


@njit(cache=True)
def saturation(img: np.ndarray, factor: float) -> np.ndarray:
    h, w, c = img.shape
    out = np.empty((h, w, c), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            gray = (0.299 * np.float64(img[y, x, 0])
                    + 0.587 * np.float64(img[y, x, 1])
                    + 0.114 * np.float64(img[y, x, 2]))
            for ch in range(c):
                v = gray + (np.float64(img[y, x, ch]) - gray) * factor
                out[y, x, ch] = _clamp_quantize(v)
    return out


@njit(cache=True)
def add_noise(img: np.ndarray, z: np.ndarray, amplitude: float) -> np.ndarray:
    h, w, c = img.shape
    out = np.empty((h, w, c), dtype=np.uint8)
    for y in range(h):
        for x in range(w):
            for ch in range(c):
                v = np.float64(img[y, x, ch]) + z[y, x, ch] * amplitude
                out[y, x, ch] = _clamp_quantize(v)
    return out


@njit(cache=True)
def resize_bilinear(img: np.ndarray, th: int, tw: int) -> np.ndarray:
    h, w, c = img.shape
    sy = h / th
    sx = w / tw
    out = np.empty((th, tw, c), dtype=np.uint8)
    for ty in range(th):
        fy = (np.float64(ty) + 0.5) * sy - 0.5
        y0 = np.floor(fy)
        wy = fy - y0
        y0i = int(y0)
        y0c = min(max(y0i, 0), h - 1)
        y1c = min(max(y0i + 1, 0), h - 1)
        for tx in range(tw):
            fx = (np.float64(tx) + 0.5) * sx - 0.5
            x0 = np.floor(fx)
            wx = fx - x0
            x0i = int(x0)
            x0c = min(max(x0i, 0), w - 1)
            x1c = min(max(x0i + 1, 0), w - 1)
            for ch in range(c):
                v00 = np.float64(img[y0c, x0c, ch])
                v01 = np.float64(img[y0c, x1c, ch])
                v10 = np.float64(img[y1c, x0c, ch])
                v11 = np.float64(img[y1c, x1c, ch])
                top = v00 + (v01 - v00) * wx
                bot = v10 + (v11 - v10) * wx
                out[ty, tx, ch] = _clamp_quantize(top + (bot - top) * wy)
    return out
