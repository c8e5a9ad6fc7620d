"""Detection and localization metrics plus forward loss values.

Scalar conventions frozen here:
  - ROC-AUC is the Mann-Whitney statistic with half credit for ties.
  - Decision accuracy uses score > threshold, so an exact tie counts
    as authentic.
  - Both-empty mask pairs score F1 = IoU = 1.0 (an authentic image
    with a correctly empty prediction is a perfect answer).
  - BCE clamps probabilities to [1e-7, 1 - 1e-7]; Dice uses soft
    probabilities with smoothing 1.0 in numerator and denominator.

All reductions run in the caller-supplied order (sample-id order by
convention) so repeated runs are bit-stable.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DegenerateClassesError,
    DomainError,
    EmptySetError,
    ShapeMismatchError,
)

BCE_EPSILON = 1e-7
DICE_SMOOTHING = 1.0
DEFAULT_BIN_THRESHOLD = 0.5


@dataclass(frozen=True)
class ScoredLabel:
    score: float
    label: int

    def __post_init__(self) -> None:
        if not np.isfinite(self.score) or not 0.0 <= self.score <= 1.0:
            raise DomainError(f"score {self.score!r} outside [0, 1]")
        if self.label not in (0, 1):
            raise DomainError(f"label {self.label!r} not binary")


@dataclass(frozen=True)
class MaskPair:
    predicted: np.ndarray
    truth: np.ndarray

    def __post_init__(self) -> None:
        pred = np.asarray(self.predicted, dtype=np.float64)
        truth = np.asarray(self.truth, dtype=np.float64)
        if pred.ndim != 2 or truth.ndim != 2 or pred.shape != truth.shape:
            raise ShapeMismatchError(
                f"mask shapes differ: predicted {pred.shape}, truth {truth.shape}",
                predicted_shape=pred.shape, truth_shape=truth.shape)
        if not np.isfinite(pred).all() or pred.min() < 0.0 or pred.max() > 1.0:
            raise DomainError("predicted mask entries must lie in [0, 1]")
        if not np.isin(truth, (0.0, 1.0)).all():
            raise DomainError("truth mask entries must be 0 or 1")
        object.__setattr__(self, "predicted", pred)
        object.__setattr__(self, "truth", truth)


@dataclass(frozen=True)
class LossWeights:
    lambda_txt: float
    lambda_seg: float

    def __post_init__(self) -> None:
        for name, v in (("lambda_txt", self.lambda_txt), ("lambda_seg", self.lambda_seg)):
            if not np.isfinite(v) or v < 0.0:
                raise DomainError(f"{name} must be finite and nonnegative, got {v!r}")


def _as_score_arrays(samples: Iterable[ScoredLabel]) -> tuple[np.ndarray, np.ndarray]:
    items = list(samples)
    scores = np.array([s.score for s in items], dtype=np.float64)
    labels = np.array([s.label for s in items], dtype=np.int64)
    return scores, labels


def roc_auc(samples: Sequence[ScoredLabel]) -> float:
    """Mann-Whitney AUC with half-credit ties, via average ranks."""
    scores, labels = _as_score_arrays(samples)
    if len(scores) == 0:
        raise EmptySetError("AUC of zero samples is undefined")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise DegenerateClassesError(
            f"need both classes, got {n_pos} positive / {n_neg} negative")
    # Average 1-based rank per tie group: a group starting at 0-based
    # position s with c members occupies ranks s+1 .. s+c.
    _, inverse, counts = np.unique(scores, return_inverse=True, return_counts=True)
    starts = np.concatenate(([0], np.cumsum(counts)[:-1]))
    ranks = (starts + (counts + 1) / 2.0)[inverse]
    rank_sum_pos = float(ranks[labels == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def accuracy(samples: Sequence[ScoredLabel], threshold: float) -> float:
    """Fraction of samples whose thresholded decision matches the label."""
    scores, labels = _as_score_arrays(samples)
    if len(scores) == 0:
        raise EmptySetError("accuracy of zero samples is undefined")
    decisions = (scores > threshold).astype(np.int64)
    return float((decisions == labels).sum()) / len(scores)


def _binary_counts(pair: MaskPair, bin_threshold: float) -> tuple[int, int, int]:
    pred = pair.predicted > bin_threshold
    truth = pair.truth > 0.5
    tp = int(np.logical_and(pred, truth).sum())
    fp = int(np.logical_and(pred, ~truth).sum())
    fn = int(np.logical_and(~pred, truth).sum())
    return tp, fp, fn


def pixel_f1(pair: MaskPair, bin_threshold: float = DEFAULT_BIN_THRESHOLD) -> float:
    tp, fp, fn = _binary_counts(pair, bin_threshold)
    if tp + fp + fn == 0:
        return 1.0
    return 2.0 * tp / (2.0 * tp + fp + fn)


def iou(pair: MaskPair, bin_threshold: float = DEFAULT_BIN_THRESHOLD) -> float:
    tp, fp, fn = _binary_counts(pair, bin_threshold)
    union = tp + fp + fn
    if union == 0:
        return 1.0
    return tp / union


def bce_loss(pair: MaskPair) -> float:
    p = np.clip(pair.predicted, BCE_EPSILON, 1.0 - BCE_EPSILON)
    y = pair.truth
    per_pixel = -(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))
    return float(per_pixel.mean())


def dice_loss(pair: MaskPair) -> float:
    p = pair.predicted
    y = pair.truth
    inter = float((p * y).sum())
    total = float(p.sum()) + float(y.sum())
    return 1.0 - (2.0 * inter + DICE_SMOOTHING) / (total + DICE_SMOOTHING)


def seg_loss(pair: MaskPair) -> float:
    return bce_loss(pair) + dice_loss(pair)


def sft_loss(txt_nll: float, seg: float, weights: LossWeights) -> float:
    """Weighted sum of caller-supplied text NLL and segmentation loss."""
    if not np.isfinite(txt_nll) or txt_nll < 0.0:
        raise DomainError(f"txt_nll must be finite and nonnegative, got {txt_nll!r}")
    if not np.isfinite(seg) or seg < 0.0:
        raise DomainError(f"seg must be finite and nonnegative, got {seg!r}")
    return weights.lambda_txt * txt_nll + weights.lambda_seg * seg
