"""Wire protocol between the harness and inference backends.

Transport is newline-delimited JSON over a backend subprocess's stdin
and stdout (or a TCP socket with identical framing).  Every message is
one line of canonical JSON: keys sorted, separators "," and ":", UTF-8,
no embedded newlines.  Canonical form makes golden files byte-exact:
serialize(parse(line)) == line.

Session shape:

    harness -> backend   {"hello": 1}
    backend -> harness   {"capabilities": [...], "hello": 1}
    harness -> backend   {"decode": {...}, "image_ref": ..., "question": ...,
                          "request_id": ..., "type": "detect"}
    backend -> harness   {"logits": [8 floats], "request_id": ..., "type": "detect"}
    ...                  segment / error messages analogous
    harness -> backend   {"type": "shutdown"}

Responses may arrive out of order; the harness pairs them by
request_id.  Detection logits follow the frozen vocabulary order
(Yes, Yeah, True, Sure, No, Not, Never, None).  Masks travel as file
references to 8-bit grayscale PNGs (0 = authentic, 255 = forged), never
as inline bytes.  A backend that cannot serve a request answers with an
error message for that request_id only; the session survives.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import ProtocolError
from .vocab import VOCAB_SIZE

PROTOCOL_VERSION = 1

MSG_DETECT = "detect"
MSG_SEGMENT = "segment"
MSG_ERROR = "error"
MSG_SHUTDOWN = "shutdown"

CAP_DETECT = "detect"
CAP_SEGMENT = "segment"

DEFAULT_SEED = 42
DEFAULT_TEMPERATURE = 0.1


@dataclass(frozen=True)
class DecodeParams:
    seed: int = DEFAULT_SEED
    temperature: float = DEFAULT_TEMPERATURE

    def __post_init__(self) -> None:
        if self.temperature <= 0:
            raise ProtocolError(f"temperature must be positive, got {self.temperature}")


def serialize(msg: dict) -> str:
    """Canonical single-line JSON (sorted keys, compact separators)."""
    return json.dumps(msg, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def encode_line(msg: dict) -> str:
    return serialize(msg) + "\n"


def parse_line(line: str) -> dict:
    """Parse one wire line; malformed input keeps the raw line attached."""
    stripped = line.rstrip("\r\n")
    try:
        msg = json.loads(stripped)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed protocol line: {exc}", raw_line=stripped) from exc
    if not isinstance(msg, dict):
        raise ProtocolError(
            f"protocol message must be an object, got {type(msg).__name__}",
            raw_line=stripped)
    return msg


def make_hello() -> dict:
    return {"hello": PROTOCOL_VERSION}


def make_hello_reply(capabilities: list[str]) -> dict:
    return {"hello": PROTOCOL_VERSION, "capabilities": list(capabilities)}


def make_detect_request(request_id: str, image_ref: str, question: str,
                        decode: DecodeParams) -> dict:
    return {
        "type": MSG_DETECT,
        "request_id": request_id,
        "image_ref": image_ref,
        "question": question,
        "decode": {"seed": decode.seed, "temperature": decode.temperature},
    }


def make_detect_response(request_id: str, logits: list[float]) -> dict:
    return {"type": MSG_DETECT, "request_id": request_id, "logits": list(logits)}


def make_segment_request(request_id: str, image_ref: str, question: str) -> dict:
    return {"type": MSG_SEGMENT, "request_id": request_id, "image_ref": image_ref,
            "question": question}


def make_segment_response(request_id: str, mask_ref: str) -> dict:
    return {"type": MSG_SEGMENT, "request_id": request_id, "mask_ref": mask_ref}


def make_error(request_id: str | None, message: str) -> dict:
    return {"type": MSG_ERROR, "request_id": request_id, "message": message}


def make_shutdown() -> dict:
    return {"type": MSG_SHUTDOWN}


def validate_hello_reply(msg: dict, *, raw_line: str | None = None) -> list[str]:
    """Capabilities from a handshake reply, or a protocol error."""
    if msg.get("hello") != PROTOCOL_VERSION:
        raise ProtocolError(
            f"handshake reply must carry hello={PROTOCOL_VERSION}, got {msg.get('hello')!r}",
            raw_line=raw_line)
    caps = msg.get("capabilities")
    if not isinstance(caps, list) or not all(isinstance(c, str) for c in caps):
        raise ProtocolError("handshake capabilities must be a list of strings",
                            raw_line=raw_line)
    return caps


def validate_response(msg: dict, *, raw_line: str | None = None) -> dict:
    """Schema-check a backend response (detect, segment, or error)."""
    mtype = msg.get("type")
    if mtype == MSG_ERROR:
        if not isinstance(msg.get("message"), str):
            raise ProtocolError("error response missing message", raw_line=raw_line)
        return msg
    if mtype == MSG_DETECT:
        if not isinstance(msg.get("request_id"), str):
            raise ProtocolError("detect response missing request_id", raw_line=raw_line)
        logits = msg.get("logits")
        if not isinstance(logits, list) or len(logits) != VOCAB_SIZE:
            n = len(logits) if isinstance(logits, list) else type(logits).__name__
            raise ProtocolError(
                f"expected {VOCAB_SIZE} logits, got {n}", raw_line=raw_line)
        for i, v in enumerate(logits):
            if not isinstance(v, (int, float)) or isinstance(v, bool) or not math.isfinite(v):
                raise ProtocolError(
                    f"logit {i} is not a finite number: {v!r}", raw_line=raw_line)
        return msg
    if mtype == MSG_SEGMENT:
        if not isinstance(msg.get("request_id"), str):
            raise ProtocolError("segment response missing request_id", raw_line=raw_line)
        if not isinstance(msg.get("mask_ref"), str):
            raise ProtocolError("segment response missing mask_ref", raw_line=raw_line)
        return msg
    raise ProtocolError(f"unknown response type {mtype!r}", raw_line=raw_line)
