"""Adapter exposing vision-language models over the NDJSON line protocol."""
from __future__ import annotations

from .config import TOKEN_REDUCTIONS, AdapterConfig
from .errors import AdapterError, ConfigError, ModelLoadError, WireError
from .models import load_model, score_logits
from .serve import serve
from .wire import (
    LOGIT_WORDS,
    NEGATIVE_WORDS,
    POSITIVE_WORDS,
    PROTOCOL_VERSION,
    encode_line,
    parse_line,
)

__version__ = "0.1.0"

__all__ = [
    "AdapterConfig",
    "AdapterError",
    "ConfigError",
    "LOGIT_WORDS",
    "ModelLoadError",
    "NEGATIVE_WORDS",
    "POSITIVE_WORDS",
    "PROTOCOL_VERSION",
    "TOKEN_REDUCTIONS",
    "WireError",
    "encode_line",
    "load_model",
    "parse_line",
    "score_logits",
    "serve",
]
