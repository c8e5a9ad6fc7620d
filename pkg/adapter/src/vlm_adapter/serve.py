"""Line-protocol session loop binding a model to stdin/stdout."""
from __future__ import annotations

import sys
import tempfile
from pathlib import Path
from typing import IO

from PIL import Image

from .config import AdapterConfig
from .errors import AdapterError, ModelLoadError, WireError
from .models import StubModel, load_model
from .wire import (
    MSG_DETECT,
    MSG_SEGMENT,
    MSG_SHUTDOWN,
    PROTOCOL_VERSION,
    encode_line,
    make_detect_response,
    make_error,
    make_hello_reply,
    make_segment_response,
    parse_line,
)


def _emit(out: IO[str], message: dict) -> None:
    out.write(encode_line(message))
    out.flush()


def _zero_mask(image_ref: str, mask_dir: Path, request_id: str) -> str:
    with Image.open(image_ref) as img:
        size = img.size
    mask = Image.new("L", size, 0)
    path = mask_dir / f"{request_id}_mask.png"
    mask.save(path, format="PNG")
    return str(path)


def _handle_detect(model: StubModel, msg: dict) -> dict:
    rid = str(msg["request_id"])
    logits = model.detect_logits(
        str(msg.get("question", "")),
        str(msg["image_ref"]),
        request_id=rid,
        decode=msg.get("decode"),
    )
    return make_detect_response(rid, logits)


def _handle_segment(msg: dict, mask_dir: Path) -> dict:
    rid = str(msg["request_id"])
    mask_ref = _zero_mask(str(msg["image_ref"]), mask_dir, rid)
    return make_segment_response(rid, mask_ref)


def serve(config: AdapterConfig, stdin: IO[str] | None = None,
          stdout: IO[str] | None = None) -> int:
    """Run one session; return the process exit code.

    A model that fails to load still answers the client's hello — with a
    session-level error naming the reason — so the failure is observable
    on the wire instead of a silent pipe close.
    """
    inp = stdin if stdin is not None else sys.stdin
    out = stdout if stdout is not None else sys.stdout

    try:
        model = load_model(config.model)
    except ModelLoadError as exc:
        inp.readline()  # consume the hello the client is blocked on
        _emit(out, make_error(None, f"model load failed: {exc}"))
        return 1

    mask_dir = Path(config.mask_output_dir) if config.mask_output_dir \
        else Path(tempfile.mkdtemp(prefix="vlm_adapter_masks_"))
    mask_dir.mkdir(parents=True, exist_ok=True)

    greeted = False
    for raw in inp:
        if not raw.strip():
            continue
        try:
            msg = parse_line(raw)
        except WireError as exc:
            _emit(out, make_error(None, str(exc)))
            continue
        mtype = msg.get("type")
        if not greeted:
            if msg.get("hello") != PROTOCOL_VERSION:
                _emit(out, make_error(
                    None, f"expected hello {PROTOCOL_VERSION} first"))
                continue
            greeted = True
            _emit(out, make_hello_reply(config.capabilities))
            continue
        if mtype == MSG_SHUTDOWN:
            break
        try:
            if mtype == MSG_DETECT:
                _emit(out, _handle_detect(model, msg))
            elif mtype == MSG_SEGMENT:
                _emit(out, _handle_segment(msg, mask_dir))
            else:
                rid = msg.get("request_id")
                _emit(out, make_error(
                    rid if rid is None else str(rid),
                    f"unsupported message type {mtype!r}"))
        except (AdapterError, OSError, KeyError, TypeError, ValueError) as exc:
            rid = msg.get("request_id")
            _emit(out, make_error(
                rid if rid is None else str(rid),
                f"{type(exc).__name__}: {exc}"))
    return 0
