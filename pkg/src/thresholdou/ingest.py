"""CSV reading and writing for sample paths and reports.

Accepted layouts (header row optional):

* ``t,x``: time column plus values; the mesh is read off the time grid;
* ``date,x``: ISO dates plus values; consecutive rows are consecutive
  steps of the configured mesh (default 0.046, i.e. one business day when
  one time unit is a month). Calendar gaps are *not* expanded. FRED-style
  missing markers (``.``, empty, ``NA``) are dropped;
* ``x``: values only; the mesh must be supplied.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import DataError
from .model import SamplePath

DEFAULT_DAILY_MESH = 0.046
MISSING = {".", "", "na", "nan", "null"}
_UNIFORM_TOL = 1e-9


def atomic_write_text(path, text: str) -> None:
    """Write ``text`` to a temporary file next to ``path`` and rename it."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def fmt(value: float) -> str:
    return format(float(value), ".17g")


def path_to_csv(path: SamplePath) -> str:
    lines = ["t,x"]
    h = path.h
    lines.extend(f"{fmt(k * h)},{fmt(v)}" for k, v in enumerate(path.values.tolist()))
    return "\n".join(lines) + "\n"


def write_path_csv(path: SamplePath, destination) -> None:
    atomic_write_text(destination, path_to_csv(path))


def write_rows_csv(destination, header, rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row))
    atomic_write_text(destination, "\n".join(lines) + "\n")


def _is_float(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _parse_date(text: str):
    try:
        return _dt.date.fromisoformat(text.strip())
    except ValueError:
        return None


def file_sha256(file) -> str:
    digest = hashlib.sha256()
    with open(file, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def ingest_csv(file, h: float = None, column: str = None,
               default_daily_mesh: float = DEFAULT_DAILY_MESH) -> SamplePath:
    """Read a sample path from ``file``.

    ``h`` overrides the mesh; for ``t,x`` files it must agree with the time
    grid. ``column`` selects the value column by header name (default: the
    last column).
    """
    with open(file, newline="") as fh:
        rows = [(i, [c.strip() for c in row]) for i, row in enumerate(csv.reader(fh), start=1)
                if row and any(c.strip() for c in row)]
    if not rows:
        raise DataError(f"{file}: no data rows")

    header = None
    first_line, first = rows[0]
    if not _is_float(first[-1]) and first[-1].lower() not in MISSING \
            and _parse_date(first[0]) is None:
        header = [c.lower() for c in first]
        rows = rows[1:]
    if not rows:
        raise DataError(f"{file}: no data rows")

    width = len(rows[0][1])
    value_col = width - 1
    if column is not None:
        if header is None or column.lower() not in header:
            raise DataError(f"{file}: no column named {column!r}")
        value_col = header.index(column.lower())
    kind = "values"
    if width >= 2 and value_col != 0:
        kind = "date" if _parse_date(rows[0][1][0]) is not None else "time"

    times, days, values = [], [], []
    last_day = None
    for line, row in rows:
        if len(row) != width:
            raise DataError(f"expected {width} columns, found {len(row)}", line)
        raw = row[value_col]
        if kind == "date":
            day = _parse_date(row[0])
            if day is None:
                raise DataError(f"cannot parse date {row[0]!r}", line)
            if last_day is not None and day <= last_day:
                raise DataError(f"dates are not strictly increasing ({row[0]})", line)
            last_day = day
            if raw.lower() in MISSING:
                continue
        try:
            x = float(raw)
        except ValueError:
            raise DataError(f"cannot parse value {raw!r}", line) from None
        if not math.isfinite(x):
            raise DataError(f"non-finite value {raw!r}", line)
        if kind == "time":
            try:
                t = float(row[0])
            except ValueError:
                raise DataError(f"cannot parse time {row[0]!r}", line) from None
            if times and t <= times[-1]:
                raise DataError("time column is not strictly increasing", line)
            times.append(t)
        elif kind == "date":
            days.append(day.isoformat())
        values.append(x)

    if len(values) < 2:
        raise DataError(f"{file}: need at least two observations, found {len(values)}")

    dates = None
    if kind == "time":
        t = np.array(times)
        mesh = t[1] - t[0]
        steps = np.diff(t)
        if np.max(np.abs(steps - mesh)) > _UNIFORM_TOL * max(1.0, abs(mesh)):
            raise DataError(f"{file}: time column is not equally spaced")
        if h is not None and abs(h - mesh) > _UNIFORM_TOL * max(1.0, abs(mesh)):
            raise DataError(f"{file}: --h {h} disagrees with time spacing {mesh}")
        h = mesh if h is None else h
    elif kind == "date":
        h = default_daily_mesh if h is None else h
        dates = tuple(days)
    elif h is None:
        raise DataError(f"{file}: a value-only file needs an explicit mesh size h")
    return SamplePath(np.array(values), h, dates=dates)


def to_jsonable(obj):
    """Recursively convert numpy types and map non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), indent=2, allow_nan=False) + "\n"
