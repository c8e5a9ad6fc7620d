"""Constrained-vocabulary detection scoring.

A backend answers a yes/no forensic question with first-token logits
over a fixed eight-word vocabulary: four positive words asserting
tampering and four negative words asserting authenticity.  The wire
order is frozen (positives then negatives) so a logit vector is
unambiguous across languages and backends.

Scores come from a numerically stabilized softmax over the eight
logits; s_tamper is the summed probability of the positive half,
s_real of the negative half, and the decision threshold sits at
exactly 0.5 with ties resolved to authentic.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidLogitsError

POSITIVE_WORDS: tuple[str, ...] = ("Yes", "Yeah", "True", "Sure")
NEGATIVE_WORDS: tuple[str, ...] = ("No", "Not", "Never", "None")
VOCAB_WORDS: tuple[str, ...] = POSITIVE_WORDS + NEGATIVE_WORDS
VOCAB_SIZE = 8

TAMPERED = "tampered"
AUTHENTIC = "authentic"

DECISION_THRESHOLD = 0.5


@dataclass(frozen=True)
class DetectionScore:
    s_tamper: float
    s_real: float
    decision: str


def validate_logits(logits: Sequence[float], *, batch_index: int | None = None) -> np.ndarray:
    """Return the logits as a float64 vector of length 8 or raise."""
    arr = np.asarray(logits, dtype=np.float64)
    if arr.shape != (VOCAB_SIZE,):
        n = arr.shape[0] if arr.ndim == 1 else arr.shape
        raise InvalidLogitsError(
            f"expected {VOCAB_SIZE} logits, got {n}", batch_index=batch_index)
    finite = np.isfinite(arr)
    if not finite.all():
        idx = int(np.argmin(finite))
        raise InvalidLogitsError(
            f"non-finite logit at index {idx}", index=idx, batch_index=batch_index)
    return arr


def softmax_constrained(logits: Sequence[float]) -> np.ndarray:
    """Stabilized softmax over the eight vocabulary logits."""
    arr = validate_logits(logits)
    shifted = arr - arr.max()
    e = np.exp(shifted)
    return e / e.sum()


def _decide(s_tamper: float) -> str:
    # Tie at exactly 0.5 resolves to authentic.
    return TAMPERED if s_tamper > DECISION_THRESHOLD else AUTHENTIC


def score(logits: Sequence[float]) -> DetectionScore:
    """Aggregate positive/negative word probabilities into a decision."""
    p = softmax_constrained(logits)
    s_tamper = float(p[:4].sum())
    s_real = float(p[4:].sum())
    return DetectionScore(s_tamper=s_tamper, s_real=s_real, decision=_decide(s_tamper))


def score_batch(batch: Iterable[Sequence[float]]) -> list[DetectionScore]:
    """Vectorized scoring; output order equals input order."""
    rows = list(batch)
    if not rows:
        return []
    arr = np.empty((len(rows), VOCAB_SIZE), dtype=np.float64)
    for i, row in enumerate(rows):
        arr[i] = validate_logits(row, batch_index=i)
    shifted = arr - arr.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    p = e / e.sum(axis=1, keepdims=True)
    tampers = p[:, :4].sum(axis=1)
    reals = p[:, 4:].sum(axis=1)
    return [
        DetectionScore(s_tamper=float(t), s_real=float(r), decision=_decide(float(t)))
        for t, r in zip(tampers, reals)
    ]
