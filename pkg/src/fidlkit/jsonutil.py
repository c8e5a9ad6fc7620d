"""Canonical JSON document serialization for reports and fixtures.

Documents (as opposed to wire messages) are pretty-printed with sorted
keys and a trailing newline.  Full float precision is retained via
Python's shortest-repr float formatting, so identical inputs always
serialize to identical bytes.
"""
from __future__ import annotations

import json
from pathlib import Path


def document_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def document_dump(obj, path: str | Path) -> None:
    Path(path).write_text(document_dumps(obj), encoding="utf-8")


def document_load(path: str | Path):
    return json.loads(Path(path).read_text(encoding="utf-8"))
