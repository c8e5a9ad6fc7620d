"""Deterministic image perturbations: the 7-kind x 5-strength grid.

Kinds and grid strengths (in standard order):

    gaussian_blur  sigma   0.5, 1.0, 1.5, 2.0, 2.5
    brightness     factor  0.5, 1.0, 1.5, 2.0, 2.5
    contrast       factor  0.5, 1.0, 1.5, 2.0, 2.5
    jpeg           quality 75, 80, 85, 90, 95
    noise          sigma   0.05, 0.10, 0.15, 0.20, 0.25
    resize         target  128, 256, 384, 512, 640
    saturation     factor  0.5, 1.0, 1.5, 2.0, 2.5

Definitions frozen for reproducibility: blur is a separable Gaussian
with radius ceil(3*sigma), renormalized taps and clamp-to-edge borders;
brightness multiplies, contrast pivots at 128, saturation interpolates
against the Rec.601 luma gray; noise adds seeded Gaussian deviates with
sigma in normalized [0,1] intensity units; jpeg is a baseline 4:2:0
encode/decode round trip; resize is bilinear to a square target.
apply() is a pure function of (image, spec) including the noise seed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError
from ..imgio import jpeg_roundtrip, validate_image
from . import kernels

KINDS: tuple[str, ...] = (
    "gaussian_blur", "brightness", "contrast", "jpeg", "noise", "resize", "saturation",
)

_GRID_STRENGTHS: dict[str, tuple[float, ...]] = {
    "gaussian_blur": (0.5, 1.0, 1.5, 2.0, 2.5),
    "brightness": (0.5, 1.0, 1.5, 2.0, 2.5),
    "contrast": (0.5, 1.0, 1.5, 2.0, 2.5),
    "jpeg": (75, 80, 85, 90, 95),
    "noise": (0.05, 0.10, 0.15, 0.20, 0.25),
    "resize": (128, 256, 384, 512, 640),
    "saturation": (0.5, 1.0, 1.5, 2.0, 2.5),
}

# Legal parameter ranges, a superset of the grid.
_LEGAL = {
    "gaussian_blur": "sigma in (0, 10]",
    "brightness": "factor in (0, 4]",
    "contrast": "factor in (0, 4]",
    "saturation": "factor in (0, 4]",
    "jpeg": "quality integer in [1, 100]",
    "noise": "sigma in [0, 1]",
    "resize": "target integer in [16, 4096]",
}


def _check_strength(kind: str, strength: float) -> float:
    if kind not in KINDS:
        raise ParameterError(f"unknown perturbation kind {kind!r}", kind=kind)
    legal = _LEGAL[kind]
    value = float(strength)
    if not np.isfinite(value):
        raise ParameterError(f"{kind} strength must be finite", kind=kind, legal_range=legal)
    ok = {
        "gaussian_blur": 0.0 < value <= 10.0,
        "brightness": 0.0 < value <= 4.0,
        "contrast": 0.0 < value <= 4.0,
        "saturation": 0.0 < value <= 4.0,
        "jpeg": value == int(value) and 1 <= value <= 100,
        "noise": 0.0 <= value <= 1.0,
        "resize": value == int(value) and 16 <= value <= 4096,
    }[kind]
    if not ok:
        raise ParameterError(
            f"{kind} strength {strength!r} outside legal range ({legal})",
            kind=kind, legal_range=legal)
    return value


@dataclass(frozen=True)
class PerturbationSpec:
    kind: str
    strength: float
    rng_seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "strength", _check_strength(self.kind, self.strength))

    def label(self) -> str:
        if self.kind in ("jpeg", "resize"):
            return f"{self.kind}:{int(self.strength)}"
        return f"{self.kind}:{self.strength}"


def parse_spec(text: str, *, rng_seed: int = 0) -> PerturbationSpec:
    """Parse a 'kind:strength' string as used by the CLI."""
    kind, sep, strength = text.partition(":")
    if not sep:
        raise ParameterError(f"expected kind:strength, got {text!r}")
    try:
        value = float(strength)
    except ValueError as exc:
        raise ParameterError(f"strength {strength!r} is not a number") from exc
    return PerturbationSpec(kind=kind.strip(), strength=value, rng_seed=rng_seed)


def apply(image: np.ndarray, spec: PerturbationSpec) -> np.ndarray:
    """Perturbed copy of the image; pure in (image, spec)."""
    img = validate_image(image)
    kind, s = spec.kind, spec.strength
    if kind == "gaussian_blur":
        return kernels.gaussian_blur(img, s)
    if kind == "brightness":
        return kernels.brightness(img, s)
    if kind == "contrast":
        return kernels.contrast(img, s)
    if kind == "saturation":
        return kernels.saturation(img, s)
    if kind == "noise":
        return kernels.add_noise(img, s, spec.rng_seed)
    if kind == "jpeg":
        return jpeg_roundtrip(img, int(s))
    if kind == "resize":
        t = int(s)
        return kernels.resize_bilinear(img, t, t)
    raise ParameterError(f"unknown perturbation kind {kind!r}", kind=kind)


def grid_strengths(kind: str) -> tuple[float, ...]:
    if kind not in _GRID_STRENGTHS:
        raise ParameterError(f"unknown perturbation kind {kind!r}", kind=kind)
    return _GRID_STRENGTHS[kind]


def standard_grid(*, rng_seed: int = 0) -> list[PerturbationSpec]:
    """The 35 grid cells in standard order (5 strengths per kind)."""
    return [
        PerturbationSpec(kind=kind, strength=s, rng_seed=rng_seed)
        for kind in KINDS
        for s in _GRID_STRENGTHS[kind]
    ]
