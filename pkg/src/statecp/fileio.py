"""CSV ingest and JSON artifact helpers."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import IngestError
from .estimators import TimeSeries

SCHEMA_VERSION = 1
TRANSFORMS = ("log", "difference", "none")


@dataclass
class IngestReport:
    path: str
    column: str
    rows_read: int
    header: list[str] | None
    dropped_non_numeric: list[int] = field(default_factory=list)
    dropped_nonpositive: list[int] = field(default_factory=list)
    transforms: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return dict(self.__dict__, transforms=list(self.transforms))


def _is_number(s: str) -> bool:
    try:
        return math.isfinite(float(s))
    except ValueError:
        return False


def ingest(path, column: str | int | None = None, transforms=(), strict: bool = False) -> tuple[TimeSeries, IngestReport]:
    """Read one numeric column of a CSV file and apply transforms in order.

    A header row is recognised when the selected cell of the first row is
    not numeric.  With several columns and no selector, the second column
    is used (``time,value`` layout).  Unparseable rows, and nonpositive
    rows when ``log`` is requested, are dropped and their 1-based line
    numbers recorded; ``strict`` turns any drop into an error.

    Raises
    ------
    IngestError
        Missing or empty file, unknown column, no usable rows, or a drop in
        strict mode.
    """
    p = Path(path)
    if not p.is_file():
        raise IngestError(f"no such file: {p}")
    with p.open(newline="", encoding="utf-8-sig") as fh:
        rows = [(i + 1, r) for i, r in enumerate(csv.reader(fh)) if any(c.strip() for c in r)]
    if not rows:
        raise IngestError(f"{p} is empty")
    for t in transforms:
        if t not in TRANSFORMS:
            raise IngestError(f"unknown transform {t!r}")

    first = [c.strip() for c in rows[0][1]]
    width = len(first)
    if isinstance(column, str) and not column.isdigit():
        if column not in first:
            raise IngestError(f"column {column!r} not in header {first}")
        idx = first.index(column)
    elif column is not None:
        idx = int(column)
    else:
        idx = 0 if width == 1 else 1
    if idx >= width:
        raise IngestError(f"column index {idx} out of range for {width} columns")
    header = None
    if not _is_number(first[idx]):
        header = first
        rows = rows[1:]
    label = header[idx] if header else str(idx)

    log = "log" in transforms
    values, bad, nonpos = [], [], []
    for line, r in rows:
        cell = r[idx].strip() if idx < len(r) else ""
        if not _is_number(cell):
            bad.append(line)
            continue
        v = float(cell)
        if log and v <= 0:
            nonpos.append(line)
            continue
        values.append(v)
    if strict and (bad or nonpos):
        raise IngestError(f"{len(bad) + len(nonpos)} unusable rows in {p}", bad + nonpos)
    if not values:
        raise IngestError(f"column {label!r} of {p} has no usable numeric values", bad + nonpos)

    series = TimeSeries(np.array(values), name=p.stem)
    for t in transforms:
        if t == "log":
            series = series.log()
        elif t == "difference":
            series = series.difference()
    report = IngestReport(str(p), label, len(rows), header, bad, nonpos, tuple(transforms))
    return series, report


def jsonable(obj):
    """Recursively convert numpy values to plain Python; non-finite floats become ``None``."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def dump_artifact(payload: dict, path=None) -> str:
    """Serialise with the schema tag.

    Floats are written in their shortest round-trip form, so re-reading
    reproduces every value bit for bit.
    """
    text = json.dumps({"schema": SCHEMA_VERSION, **jsonable(payload)}, indent=2, allow_nan=False)
    if path is not None:
        Path(path).write_text(text + "\n", encoding="utf-8")
    return text
