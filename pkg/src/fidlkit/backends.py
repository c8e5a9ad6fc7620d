"""Built-in backends and client-side backend handles.

Two in-repo backends make the harness fully testable without an ML
runtime:

  - MockBackend answers from a per-id score table.  Logits are built
    by the inverse-softmax construction ln(s) on the four positive
    words and ln(1-s) on the four negatives, so score() recovers the
    configured s_tamper exactly.  Lookup key is the stem of the
    request's image_ref, falling back to the request_id, then to the
    configured default of 0.5.  Decode fields are ignored.
  - BaselineBackend detects from pixel statistics: the mean absolute
    residual of the image against its 3x3 box blur (normalized to
    [0, 1]) passed through a logistic centered at E0 with width W.
    The constants were calibrated once on synthetic corpora (smooth
    images land near 0.001, quarter-area noise patches above 0.02)
    and are fixed here.

Client handles expose detect_many/segment_many, preserving request
order in the returned responses while allowing pipelined, out-of-order
wire traffic underneath.
"""
from __future__ import annotations

import json
import math
import queue
import shlex
import socket
import subprocess
import sys
import tempfile
import threading
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from . import protocol
from .errors import (
    BackendConfigError,
    BackendTimeoutError,
    HandshakeError,
    ImageReadError,
    ProtocolError,
)
from .imgio import image_size, load_image, save_mask
from .vocab import VOCAB_SIZE

BASELINE_E0 = 0.005
BASELINE_WIDTH = 0.002
_SCORE_CLAMP = 1e-12

DEFAULT_TIMEOUT = 60.0
DEFAULT_WINDOW = 8


def score_to_logits(s_tamper: float) -> list[float]:
    """Inverse-softmax logit construction for a target s_tamper."""
    if not 0.0 < s_tamper < 1.0:
        raise BackendConfigError(f"score must lie strictly in (0, 1), got {s_tamper}")
    pos = math.log(s_tamper)
    neg = math.log(1.0 - s_tamper)
    return [pos] * 4 + [neg] * 4


class MockBackend:
    """Deterministic score-table backend."""

    capabilities = (protocol.CAP_DETECT, protocol.CAP_SEGMENT)

    def __init__(self, scores: dict[str, float] | None = None, *,
                 default: float = 0.5,
                 masks: dict[str, str] | None = None,
                 mask_dir: str | Path | None = None) -> None:
        self.scores = dict(scores or {})
        for key, s in self.scores.items():
            if not isinstance(s, (int, float)) or not 0.0 < float(s) < 1.0:
                raise BackendConfigError(
                    f"configured score for {key!r} must lie in (0, 1), got {s!r}")
        if not 0.0 < default < 1.0:
            raise BackendConfigError(f"default score must lie in (0, 1), got {default}")
        self.default = float(default)
        self.masks = dict(masks or {})
        self._mask_dir = Path(mask_dir) if mask_dir else None

    @classmethod
    def from_config(cls, path: str | Path) -> "MockBackend":
        try:
            cfg = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise BackendConfigError(f"cannot load mock config {path}: {exc}") from exc
        if not isinstance(cfg, dict):
            raise BackendConfigError("mock config must be a JSON object")
        return cls(scores=cfg.get("scores"), default=cfg.get("default", 0.5),
                   masks=cfg.get("masks"), mask_dir=cfg.get("mask_dir"))

    def _mask_output_dir(self) -> Path:
        if self._mask_dir is None:
            self._mask_dir = Path(tempfile.mkdtemp(prefix="fidlkit-mock-masks-"))
        self._mask_dir.mkdir(parents=True, exist_ok=True)
        return self._mask_dir

    def _lookup(self, msg: dict) -> float:
        stem = Path(msg.get("image_ref", "")).stem
        if stem in self.scores:
            return float(self.scores[stem])
        rid = msg.get("request_id")
        if rid in self.scores:
            return float(self.scores[rid])
        return self.default

    def handle(self, msg: dict) -> dict | None:
        mtype = msg.get("type")
        rid = msg.get("request_id")
        if mtype == protocol.MSG_DETECT:
            return protocol.make_detect_response(rid, score_to_logits(self._lookup(msg)))
        if mtype == protocol.MSG_SEGMENT:
            stem = Path(msg.get("image_ref", "")).stem
            if stem in self.masks:
                return protocol.make_segment_response(rid, self.masks[stem])
            try:
                h, w = image_size(msg["image_ref"])
            except (ImageReadError, KeyError) as exc:
                return protocol.make_error(rid, f"cannot size image: {exc}")
            out = self._mask_output_dir() / f"{stem}_mask.png"
            save_mask(np.zeros((h, w), dtype=np.uint8), out)
            return protocol.make_segment_response(rid, str(out))
        if mtype == protocol.MSG_SHUTDOWN:
            return None
        return protocol.make_error(rid, f"unsupported request type {mtype!r}")


class BaselineBackend:
    """Residual-energy detector; detection only."""

    capabilities = (protocol.CAP_DETECT,)

    def __init__(self, e0: float = BASELINE_E0, width: float = BASELINE_WIDTH) -> None:
        self.e0 = e0
        self.width = width

    @staticmethod
    def residual_energy(img: np.ndarray) -> float:
        """Mean |image - box3(image)| in normalized [0, 1] units."""
        f = img.astype(np.float64)
        pad = np.pad(f, ((1, 1), (1, 1), (0, 0)), mode="edge")
        acc = np.zeros_like(f)
        for dy in range(3):
            for dx in range(3):
                acc += pad[dy:dy + f.shape[0], dx:dx + f.shape[1], :]
        blur = acc / 9.0
        return float(np.mean(np.abs(f - blur))) / 255.0

    def score_image(self, img: np.ndarray) -> float:
        e = self.residual_energy(img)
        s = 1.0 / (1.0 + math.exp(-(e - self.e0) / self.width))
        return min(max(s, _SCORE_CLAMP), 1.0 - _SCORE_CLAMP)

    def handle(self, msg: dict) -> dict | None:
        mtype = msg.get("type")
        rid = msg.get("request_id")
        if mtype == protocol.MSG_DETECT:
            try:
                img = load_image(msg["image_ref"])
            except (ImageReadError, KeyError) as exc:
                return protocol.make_error(rid, f"cannot read image: {exc}")
            return protocol.make_detect_response(rid, score_to_logits(self.score_image(img)))
        if mtype == protocol.MSG_SHUTDOWN:
            return None
        return protocol.make_error(rid, f"unsupported request type {mtype!r}")


def serve_lines(backend, lines: Iterable[str], out: IO[str]) -> None:
    """Protocol session loop over text lines; used by stdio and TCP."""
    hello_done = False
    for line in lines:
        if not line.strip():
            continue
        try:
            msg = protocol.parse_line(line)
        except ProtocolError as exc:
            out.write(protocol.encode_line(protocol.make_error(None, str(exc))))
            out.flush()
            continue
        if not hello_done:
            if msg.get("hello") == protocol.PROTOCOL_VERSION:
                out.write(protocol.encode_line(
                    protocol.make_hello_reply(list(backend.capabilities))))
                out.flush()
                hello_done = True
                continue
            out.write(protocol.encode_line(protocol.make_error(
                None, f"expected hello {protocol.PROTOCOL_VERSION} first")))
            out.flush()
            continue
        if msg.get("type") == protocol.MSG_SHUTDOWN:
            return
        reply = backend.handle(msg)
        if reply is not None:
            out.write(protocol.encode_line(reply))
            out.flush()


def serve_stdio(backend) -> None:
    serve_lines(backend, sys.stdin, sys.stdout)


def serve_tcp(backend, host: str, port: int, *, sessions: int = 1) -> None:
    """Serve the given number of TCP sessions sequentially, then exit."""
    with socket.create_server((host, port)) as srv:
        for _ in range(sessions):
            conn, _addr = srv.accept()
            with conn:
                reader = conn.makefile("r", encoding="utf-8", newline="\n")
                writer = conn.makefile("w", encoding="utf-8", newline="\n")
                serve_lines(backend, reader, writer)


class BackendHandle:
    """Client-side view of a live backend session."""

    capabilities: list[str] = []

    def detect_many(self, requests: Sequence[dict]) -> list[dict]:
        raise NotImplementedError

    def segment_many(self, requests: Sequence[dict]) -> list[dict]:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self) -> "BackendHandle":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


class LocalBackend(BackendHandle):
    """In-process handle around a built-in backend object."""

    def __init__(self, backend) -> None:
        self._backend = backend
        self.capabilities = list(backend.capabilities)

    def _run(self, requests: Sequence[dict]) -> list[dict]:
        out = []
        for req in requests:
            reply = self._backend.handle(req)
            out.append(protocol.validate_response(reply))
        return out

    def detect_many(self, requests: Sequence[dict]) -> list[dict]:
        return self._run(requests)

    def segment_many(self, requests: Sequence[dict]) -> list[dict]:
        return self._run(requests)


class _LineStreamClient(BackendHandle):
    """Shared machinery for subprocess and TCP handles: a writer, a
    reader thread, and request/response pairing by id with a bounded
    pipelining window."""

    def __init__(self, *, timeout: float, window: int) -> None:
        self._timeout = timeout
        self._window = max(1, window)
        self._queue: queue.Queue = queue.Queue()
        self._reader: threading.Thread | None = None
        self.capabilities = []

    # transport hooks
    def _write_line(self, text: str) -> None:
        raise NotImplementedError

    def _readline(self) -> str:
        raise NotImplementedError

    def _start(self) -> None:
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self._write_line(protocol.encode_line(protocol.make_hello()))
        first = self._next_line()
        if first is None:
            raise HandshakeError("backend closed the stream before replying to hello")
        msg = protocol.parse_line(first)
        if msg.get("type") == protocol.MSG_ERROR:
            raise HandshakeError(f"backend refused handshake: {msg.get('message')}")
        self.capabilities = protocol.validate_hello_reply(msg, raw_line=first)

    def _pump(self) -> None:
        try:
            while True:
                line = self._readline()
                if line == "":
                    break
                self._queue.put(line)
        except (OSError, ValueError):
            pass
        self._queue.put(None)

    def _next_line(self) -> str | None:
        try:
            return self._queue.get(timeout=self._timeout)
        except queue.Empty:
            raise BackendTimeoutError(
                f"no backend response within {self._timeout} s") from None

    def _request_many(self, requests: Sequence[dict]) -> list[dict]:
        results: dict[str, dict] = {}
        pending: set[str] = set()
        ids = [req["request_id"] for req in requests]
        if len(set(ids)) != len(ids):
            raise ProtocolError("duplicate request_id within a batch")
        next_i = 0
        while len(results) < len(requests):
            while next_i < len(requests) and len(pending) < self._window:
                req = requests[next_i]
                self._write_line(protocol.encode_line(req))
                pending.add(req["request_id"])
                next_i += 1
            line = self._next_line()
            if line is None:
                raise ProtocolError("backend stream closed with requests outstanding")
            msg = protocol.validate_response(
                protocol.parse_line(line), raw_line=line.rstrip("\n"))
            rid = msg.get("request_id")
            if rid is None and msg["type"] == protocol.MSG_ERROR:
                # Session-level error without an id: fail the batch.
                raise ProtocolError(f"backend error: {msg['message']}")
            if rid not in pending:
                raise ProtocolError(f"response for unknown request_id {rid!r}")
            pending.discard(rid)
            results[rid] = msg
        return [results[i] for i in ids]

    def detect_many(self, requests: Sequence[dict]) -> list[dict]:
        return self._request_many(requests)

    def segment_many(self, requests: Sequence[dict]) -> list[dict]:
        return self._request_many(requests)


class SubprocessBackend(_LineStreamClient):
    """Backend launched as a subprocess, speaking NDJSON on its stdio."""

    def __init__(self, command: str | Sequence[str], *,
                 timeout: float = DEFAULT_TIMEOUT, window: int = DEFAULT_WINDOW) -> None:
        super().__init__(timeout=timeout, window=window)
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        try:
            self._proc = subprocess.Popen(
                argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE,
                text=True, bufsize=1)
        except OSError as exc:
            raise HandshakeError(f"cannot launch backend {argv!r}: {exc}") from exc
        try:
            self._start()
        except Exception:
            self._proc.kill()
            raise

    def _write_line(self, text: str) -> None:
        try:
            self._proc.stdin.write(text)
            self._proc.stdin.flush()
        except (OSError, ValueError) as exc:
            raise ProtocolError(f"backend stdin closed: {exc}") from exc

    def _readline(self) -> str:
        return self._proc.stdout.readline()

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._write_line(protocol.encode_line(protocol.make_shutdown()))
            except ProtocolError:
                pass
            try:
                self._proc.wait(timeout=5.0)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()


class TcpBackend(_LineStreamClient):
    """Backend reached over TCP with the same line framing."""

    def __init__(self, host: str, port: int, *,
                 timeout: float = DEFAULT_TIMEOUT, window: int = DEFAULT_WINDOW) -> None:
        super().__init__(timeout=timeout, window=window)
        try:
            self._sock = socket.create_connection((host, port), timeout=timeout)
        except OSError as exc:
            raise HandshakeError(f"cannot connect to {host}:{port}: {exc}") from exc
        self._rfile = self._sock.makefile("r", encoding="utf-8", newline="\n")
        self._wfile = self._sock.makefile("w", encoding="utf-8", newline="\n")
        try:
            self._start()
        except Exception:
            self._sock.close()
            raise

    def _write_line(self, text: str) -> None:
        try:
            self._wfile.write(text)
            self._wfile.flush()
        except OSError as exc:
            raise ProtocolError(f"backend socket closed: {exc}") from exc

    def _readline(self) -> str:
        return self._rfile.readline()

    def close(self) -> None:
        try:
            self._write_line(protocol.encode_line(protocol.make_shutdown()))
        except ProtocolError:
            pass
        self._sock.close()


def open_backend(spec: str, *, timeout: float = DEFAULT_TIMEOUT,
                 window: int = DEFAULT_WINDOW) -> BackendHandle:
    """Open a backend from a CLI spec string.

    "baseline" and "mock:<config.json>" run in-process; "tcp:host:port"
    connects a socket; anything else is a subprocess command line.
    """
    if spec == "baseline":
        return LocalBackend(BaselineBackend())
    if spec.startswith("mock:"):
        return LocalBackend(MockBackend.from_config(spec[len("mock:"):]))
    if spec.startswith("tcp:"):
        rest = spec[len("tcp:"):]
        host, sep, port = rest.rpartition(":")
        if not sep or not port.isdigit():
            raise BackendConfigError(f"tcp backend spec must be tcp:host:port, got {spec!r}")
        return TcpBackend(host or "127.0.0.1", int(port), timeout=timeout, window=window)
    return SubprocessBackend(spec, timeout=timeout, window=window)
