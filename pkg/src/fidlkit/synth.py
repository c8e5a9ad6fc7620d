"""Synthetic image corpora for tests, demos, and sanity checks.

Authentic samples are smooth images (linear gradients plus broad
Gaussian blobs) whose 3x3-box-blur residual energy is tiny; tampered
samples carry a rectangular patch of seeded Gaussian noise covering a
quarter of the image, which pushes residual energy two decades higher.
The two populations are therefore cleanly separable by the baseline
backend, by construction rather than by tuning.

All randomness flows through the repo PRNG, keyed on a per-image seed,
so corpora are bit-reproducible across machines.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from . import rng
from .compose import DOMAINS, SampleRecord, dump_records
from .imgio import MASK_FORGED, save_image, save_mask

_NOISE_LEVELS = (0.10, 0.15, 0.20)


def smooth_image(seed: int, size: int = 64) -> np.ndarray:
    """Deterministic smooth RGB image: oriented gradient + 3 blobs."""
    u = [rng.uniform(seed, k) for k in range(12)]
    y, x = np.mgrid[0:size, 0:size].astype(np.float64)
    gx = u[0] * 2.0 - 1.0
    gy = u[1] * 2.0 - 1.0
    base = (gx * x + gy * y) / size * 80.0 + 60.0 + u[2] * 80.0
    img = np.stack([base, base * (0.8 + 0.4 * u[3]), base * (0.8 + 0.4 * u[4])], axis=-1)
    for b in range(3):
        cx = u[5] * size if b == 0 else rng.uniform(seed, 12 + 2 * b) * size
        cy = u[6] * size if b == 0 else rng.uniform(seed, 13 + 2 * b) * size
        spread = (0.15 + 0.25 * u[7 + b]) * size
        amp = 30.0 + 50.0 * u[10 if b < 2 else 11]
        blob = amp * np.exp(-((x - cx) ** 2 + (y - cy) ** 2) / (2.0 * spread * spread))
        img += blob[..., None]
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def noise_patch_image(seed: int, size: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """(tampered image, truth mask): smooth base + quarter-area noise patch."""
    img = smooth_image(seed, size).astype(np.float64)
    ph = pw = size // 2
    oy = int(rng.uniform(seed, 100) * (size - ph))
    ox = int(rng.uniform(seed, 101) * (size - pw))
    sigma = _NOISE_LEVELS[rng.value(seed, 102) % len(_NOISE_LEVELS)]
    z = rng.normals_array(seed, ph * pw * 3, counter_base=200).reshape(ph, pw, 3)
    img[oy:oy + ph, ox:ox + pw, :] += z * sigma * 255.0
    mask = np.zeros((size, size), dtype=np.uint8)
    mask[oy:oy + ph, ox:ox + pw] = MASK_FORGED
    return np.clip(np.rint(img), 0, 255).astype(np.uint8), mask


def white_noise_image(seed: int, size: int = 64) -> np.ndarray:
    counters = np.arange(size * size * 3, dtype=np.uint64)
    vals = rng.values_array(seed, counters) % np.uint64(256)
    return vals.astype(np.uint8).reshape(size, size, 3)


def build_separable_corpus(out_dir: str | Path, n: int, *, size: int = 64,
                           seed: int = 0, with_masks: bool = True) -> Path:
    """Write an n-sample corpus (half authentic, half tampered) and its
    record manifest; returns the manifest path.

    Sample ids are zero-padded so lexicographic order equals build
    order; image files are named by id so score-table backends can key
    on the file stem.
    """
    out = Path(out_dir)
    images = out / "images"
    masks = out / "masks"
    images.mkdir(parents=True, exist_ok=True)
    if with_masks:
        masks.mkdir(parents=True, exist_ok=True)

    records = []
    width = len(str(max(n - 1, 1)))
    for i in range(n):
        sid = f"s{i:0{width}d}"
        img_seed = seed * 1_000_003 + i
        tampered = i % 2 == 1
        img_path = images / f"{sid}.png"
        mask_ref = None
        if tampered:
            img, mask = noise_patch_image(img_seed, size)
            if with_masks:
                mask_path = masks / f"{sid}.png"
                save_mask(mask, mask_path)
                mask_ref = str(mask_path)
        else:
            img = smooth_image(img_seed, size)
        save_image(img, img_path)
        records.append(SampleRecord(
            id=sid, image_ref=str(img_path), label=int(tampered),
            domain=DOMAINS[i % len(DOMAINS)],
            operation="splice" if tampered else None,
            source="synthetic", mask_ref=mask_ref,
        ))
    manifest = out / "manifest.jsonl"
    dump_records(records, manifest)
    return manifest
