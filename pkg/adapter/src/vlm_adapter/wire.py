"""Wire protocol codec: newline-delimited JSON, one message per line.

This is the adapter's own implementation of the protocol it speaks to
the evaluation harness; it deliberately shares no code with the
harness.  Lines use canonical encoding (sorted keys, compact
separators, raw UTF-8) so identical messages are byte-identical.

Logit order is a protocol-level contract: detect responses carry 8
first-token logits, positive answer words first, each half in the
fixed order below.
"""
from __future__ import annotations

import json

from .errors import WireError

PROTOCOL_VERSION = 1

POSITIVE_WORDS = ("Yes", "Yeah", "True", "Sure")
NEGATIVE_WORDS = ("No", "Not", "Never", "None")
LOGIT_WORDS = POSITIVE_WORDS + NEGATIVE_WORDS

MSG_DETECT = "detect"
MSG_SEGMENT = "segment"
MSG_ERROR = "error"
MSG_SHUTDOWN = "shutdown"


def encode_line(msg: dict) -> str:
    return json.dumps(msg, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False) + "\n"


def parse_line(line: str) -> dict:
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise WireError(f"malformed protocol line: {exc}") from exc
    if not isinstance(msg, dict):
        raise WireError("protocol line must be a JSON object")
    return msg


def make_hello_reply(capabilities: list[str]) -> dict:
    return {"hello": PROTOCOL_VERSION, "capabilities": list(capabilities)}


def make_detect_response(request_id: str, logits: list[float]) -> dict:
    if len(logits) != len(LOGIT_WORDS):
        raise WireError(f"expected {len(LOGIT_WORDS)} logits, got {len(logits)}")
    return {"type": MSG_DETECT, "request_id": request_id,
            "logits": [float(v) for v in logits]}


def make_segment_response(request_id: str, mask_ref: str) -> dict:
    return {"type": MSG_SEGMENT, "request_id": request_id, "mask_ref": mask_ref}


def make_error(request_id: str | None, message: str) -> dict:
    return {"type": MSG_ERROR, "request_id": request_id, "message": message}
