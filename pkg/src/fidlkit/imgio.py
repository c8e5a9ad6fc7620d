"""Image file I/O and buffer validation.

Images are numpy uint8 arrays of shape (height, width, 3) in RGB
order.  Masks are single-channel uint8 arrays where 0 marks authentic
pixels and 255 marks forged pixels; mask files are 8-bit grayscale
PNG.  Pillow handles the codecs.
"""
from __future__ import annotations

import io
import math
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import CodecError, ImageReadError

MASK_FORGED = 255
MASK_AUTHENTIC = 0


def validate_image(arr: np.ndarray) -> np.ndarray:
    a = np.asarray(arr)
    if a.ndim != 3 or a.shape[2] != 3 or a.shape[0] < 1 or a.shape[1] < 1:
        raise CodecError(f"expected (H, W, 3) image array, got shape {a.shape}")
    if a.dtype != np.uint8:
        raise CodecError(f"expected uint8 image data, got {a.dtype}")
    return a


def load_image(path: str | Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("RGB"))
    except (OSError, ValueError) as exc:
        raise ImageReadError(f"cannot read image {path}: {exc}") from exc


def save_image(arr: np.ndarray, path: str | Path, *, jpeg_quality: int = 95) -> None:
    a = validate_image(arr)
    p = Path(path)
    try:
        im = Image.fromarray(a)
        if p.suffix.lower() in (".jpg", ".jpeg"):
            im.save(p, format="JPEG", quality=jpeg_quality, subsampling=2)
        else:
            im.save(p, format="PNG")
    except (OSError, ValueError) as exc:
        raise CodecError(f"cannot write image {p}: {exc}") from exc


def jpeg_roundtrip(arr: np.ndarray, quality: int) -> np.ndarray:
    """Encode to baseline JPEG (4:2:0 chroma) in memory and decode back."""
    a = validate_image(arr)
    try:
        buf = io.BytesIO()
        Image.fromarray(a).save(buf, format="JPEG", quality=quality, subsampling=2)
        buf.seek(0)
        with Image.open(buf) as im:
            return np.asarray(im.convert("RGB"))
    except (OSError, ValueError) as exc:
        raise CodecError(f"jpeg round-trip failed at quality {quality}: {exc}") from exc


def load_mask(path: str | Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"))
    except (OSError, ValueError) as exc:
        raise ImageReadError(f"cannot read mask {path}: {exc}") from exc


def save_mask(arr: np.ndarray, path: str | Path) -> None:
    a = np.asarray(arr)
    if a.ndim != 2 or a.dtype != np.uint8:
        raise CodecError(f"expected uint8 (H, W) mask array, got {a.dtype} {a.shape}")
    try:
        Image.fromarray(a, mode="L").save(Path(path), format="PNG")
    except (OSError, ValueError) as exc:
        raise CodecError(f"cannot write mask {path}: {exc}") from exc


def image_size(path: str | Path) -> tuple[int, int]:
    """(height, width) of an image file without decoding pixel data."""
    try:
        with Image.open(path) as im:
            return im.height, im.width
    except (OSError, ValueError) as exc:
        raise ImageReadError(f"cannot read image header {path}: {exc}") from exc


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB between two uint8 images."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise CodecError(f"psnr shapes differ: {x.shape} vs {y.shape}")
    mse = float(np.mean((x - y) ** 2))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)
