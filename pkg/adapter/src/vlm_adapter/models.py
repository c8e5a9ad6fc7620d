"""Model wrappers behind a minimal inference interface.

Every model answers detect_logits() with 8 floats in wire logit order
(see wire.LOGIT_WORDS).  The stub models here are deterministic and
need no downloads, so the adapter's protocol behavior can be tested
end-to-end; a real vision-language model wrapper would implement the
same interface (prompt formatting, tokenizer reduction, and decode
parameter handling included) and plug in via its identifier.

Stub identifiers:
  fixed:<score>   every image scores <score> in (0, 1)
  table:<path>    JSON {"scores": {stem: score}, "default": score};
                  lookup tries the image file stem, then the request
                  id, then falls back to the default (the same
                  convention the harness's score-table backend uses)
  hash            score derived from the image file stem's SHA-256
  probe           logits 0..7, for asserting logit-order preservation
"""
from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

from .errors import AdapterError, ModelLoadError
from .wire import LOGIT_WORDS


def score_logits(score: float) -> list[float]:
    """8 logits whose constrained softmax recovers the given score."""
    if not 0.0 < score < 1.0:
        raise AdapterError(f"score must lie strictly in (0, 1), got {score}")
    pos = math.log(score)
    neg = math.log(1.0 - score)
    return [pos] * 4 + [neg] * 4


class StubModel:
    """Shared plumbing for the deterministic stubs."""

    def detect_logits(self, question: str, image_ref: str, *,
                      request_id: str, decode: dict | None) -> list[float]:
        raise NotImplementedError


class FixedModel(StubModel):
    def __init__(self, score: float) -> None:
        self.score = score
        score_logits(score)  # validate eagerly

    def detect_logits(self, question, image_ref, *, request_id, decode):
        return score_logits(self.score)


class TableModel(StubModel):
    def __init__(self, scores: dict[str, float], default: float) -> None:
        self.scores = dict(scores)
        self.default = default
        for s in (*self.scores.values(), default):
            score_logits(s)  # validate eagerly

    @classmethod
    def from_path(cls, path: str) -> "TableModel":
        try:
            cfg = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ModelLoadError(f"cannot load score table {path}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ModelLoadError("score table must be a JSON object")
        try:
            return cls(scores=cfg.get("scores") or {},
                       default=cfg.get("default", 0.5))
        except ModelLoadError:
            raise
        except (AdapterError, TypeError, ValueError) as exc:
            raise ModelLoadError(f"invalid score table {path}: {exc}") from exc

    def detect_logits(self, question, image_ref, *, request_id, decode):
        stem = Path(image_ref).stem
        if stem in self.scores:
            score = self.scores[stem]
        elif request_id in self.scores:
            score = self.scores[request_id]
        else:
            score = self.default
        return score_logits(float(score))


class HashModel(StubModel):
    """Deterministic pseudo-scores keyed on the image file stem."""

    def detect_logits(self, question, image_ref, *, request_id, decode):
        digest = hashlib.sha256(Path(image_ref).stem.encode("utf-8")).digest()
        unit = int.from_bytes(digest[:8], "big") / 2**64
        return score_logits(0.01 + 0.98 * unit)


class ProbeModel(StubModel):
    """Distinct logit per slot so order preservation is assertable."""

    def detect_logits(self, question, image_ref, *, request_id, decode):
        return [float(i) for i in range(len(LOGIT_WORDS))]


def load_model(identifier: str) -> StubModel:
    """Resolve a model identifier; ModelLoadError carries the reason."""
    if identifier.startswith("fixed:"):
        raw = identifier[len("fixed:"):]
        try:
            score = float(raw)
        except ValueError as exc:
            raise ModelLoadError(f"fixed model needs a number, got {raw!r}") from exc
        try:
            return FixedModel(score)
        except AdapterError as exc:
            raise ModelLoadError(str(exc)) from exc
    if identifier.startswith("table:"):
        return TableModel.from_path(identifier[len("table:"):])
    if identifier == "hash":
        return HashModel()
    if identifier == "probe":
        return ProbeModel()
    raise ModelLoadError(
        f"unknown model identifier {identifier!r}; expected fixed:<score>, "
        f"table:<path>, hash, or probe")
