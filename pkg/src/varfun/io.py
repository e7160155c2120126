"""Deterministic artifact output: atomic writes, hashing, CSV formatting.

All writers produce byte-identical files for identical data: floats are
rendered with `repr` (shortest round-trip form), line endings are '\n',
encoding is UTF-8, and files appear atomically via a temp-file rename so a
crashed run never leaves a half-written artifact.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
from pathlib import Path

import numpy as np

__all__ = [
    "format_cell",
    "render_csv",
    "atomic_write_text",
    "write_csv",
    "write_json",
    "sha256_of_file",
]


def format_cell(value) -> str:
    """Render one CSV cell: shortest round-trip floats, plain ints/strings."""
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render_csv(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def atomic_write_text(path, text: str) -> Path:
    """Write `text` to `path` through a same-directory temp file + rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8", newline="")
    os.replace(tmp, path)
    return path


def write_csv(path, header, rows) -> Path:
    return atomic_write_text(path, render_csv(header, rows))


def write_json(path, payload) -> Path:
    return atomic_write_text(
        path, json.dumps(payload, indent=2, sort_keys=True) + "\n"
    )


def sha256_of_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
