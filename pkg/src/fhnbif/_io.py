"""Versioned CSV/JSON writers shared by the command-line front end."""

from __future__ import annotations

import enum
import json
import math
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1


def _plain(obj):
    """Convert numpy scalars, arrays, enums and complex numbers for JSON."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": _plain(obj.real), "im": _plain(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path: Path, kind: str, body: dict) -> Path:
    doc = {"schema": f"{kind}/{SCHEMA_VERSION}", **_plain(body)}
    path.write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n")
    return path


def write_csv(path: Path, kind: str, header: list[str], data, meta: dict | None = None) -> Path:
    """CSV with a leading ``#`` line naming the schema (and optional metadata)."""
    arr = np.atleast_2d(np.asarray(data, dtype=float))
    if arr.size == 0:
        arr = np.zeros((0, len(header)))
    tags = [f"schema={kind}/{SCHEMA_VERSION}"] + [f"{k}={_fmt(v)}" for k, v in (meta or {}).items()]
    lines = ["# " + " ".join(tags), ",".join(header)]
    lines += [",".join(_fmt(x) for x in row) for row in arr]
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path: Path) -> tuple[dict[str, str], list[str], np.ndarray]:
    """Inverse of :func:`write_csv`: metadata tags, header and data."""
    lines = Path(path).read_text().splitlines()
    tags = dict(t.split("=", 1) for t in lines[0][1:].split())
    header = lines[1].split(",")
    rows = [[float(x) for x in ln.split(",")] for ln in lines[2:] if ln]
    data = np.array(rows) if rows else np.zeros((0, len(header)))
    return tags, header, data


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x)) if math.isfinite(x) else "nan"
    return str(x)
