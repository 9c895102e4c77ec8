"""Deterministic, atomic output files."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path

SCHEMA_VERSION = 1


def fmt(value) -> str:
    """Shortest round-trip text for a number; strings pass through."""
    if isinstance(value, str):
        return value
    if value is None:
        return ""
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)


def atomic_write(path, text: str) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _clean(obj):
    # JSON has no NaN; map it (and numpy scalars) to plain values
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if hasattr(obj, "item"):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def dumps_json(data: dict) -> str:
    return json.dumps(_clean(data), indent=2, sort_keys=False) + "\n"


def write_json(path, data: dict) -> Path:
    data = {"schema": SCHEMA_VERSION, **{k: v for k, v in data.items() if k != "schema"}}
    return atomic_write(path, dumps_json(data))


def write_table(path, columns: list[str], rows, fmt_name: str = "csv") -> Path:
    """Write rows as CSV, or as JSON ``{"schema", "columns", "rows"}``."""
    rows = [list(r) for r in rows]
    if fmt_name == "json":
        return write_json(path, {"columns": columns, "rows": rows})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return atomic_write(path, buf.getvalue())
