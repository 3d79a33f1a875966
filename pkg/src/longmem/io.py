"""Flat-file I/O: numeric CSV tables and versioned JSON documents."""

from __future__ import annotations

import csv
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
TIMESTAMP_NAMES = ("time", "timestamp", "date", "datetime", "t")


class CsvParseError(ValueError):
    pass


@dataclass
class CsvTable:
    """Header plus a ``T x l`` block of finite reals, with an optional leading label column."""

    header: list
    values: np.ndarray
    index: list | None = None
    index_name: str | None = None

    @property
    def shape(self):
        return self.values.shape


def _open(path, mode):
    if path is None or str(path) == "-":
        return None
    return open(path, mode, newline="", encoding="utf-8")


def _parse_cell(cell: str, line: int, col: int, name: str) -> float:
    try:
        v = float(cell)
    except ValueError:
        raise CsvParseError(f"line {line}, column {col} ({name!r}): non-numeric value {cell!r}") from None
    if not math.isfinite(v):
        raise CsvParseError(f"line {line}, column {col} ({name!r}): non-finite value {cell!r}")
    return v


def read_table(path) -> CsvTable:
    """Parse a comma-separated numeric table with a header row.

    A first column named like a timestamp (``time``, ``date``, ...) is kept
    verbatim as the row index and excluded from the numeric block.
    """
    fh = _open(path, "r")
    src = sys.stdin if fh is None else fh
    try:
        rows = list(csv.reader(src))
    finally:
        if fh is not None:
            fh.close()
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise CsvParseError("line 1: empty file")
    header = [h.strip() for h in rows[0]]
    data = rows[1:]
    if not data:
        raise CsvParseError("empty data")
    has_index = header[0].lower() in TIMESTAMP_NAMES
    first = 1 if has_index else 0
    if len(header) - first < 1:
        raise CsvParseError("line 1: no numeric columns")
    values = np.empty((len(data), len(header) - first))
    index = [] if has_index else None
    for r, row in enumerate(data):
        line = r + 2
        if len(row) != len(header):
            raise CsvParseError(f"line {line}: expected {len(header)} fields, found {len(row)}")
        if has_index:
            index.append(row[0])
        for c in range(first, len(header)):
            values[r, c - first] = _parse_cell(row[c].strip(), line, c + 1, header[c])
    return CsvTable(header[first:], values, index, header[0] if has_index else None)


def read_csv(path) -> np.ndarray:
    """Numeric ``T x l`` matrix from a CSV file (see :func:`read_table`)."""
    return read_table(path).values


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else str(float(v))
    return str(v)


def write_csv(path, table, header=None, index=None, index_name: str = "time") -> None:
    """Write rows using the shortest round-trip decimal form (at most 17 significant
    digits), so finite doubles survive a write/read cycle bit for bit.

    ``table`` may be a :class:`CsvTable`, a 2-D array or a list of row
    sequences (mixed int/float/str cells allowed).
    """
    if isinstance(table, CsvTable):
        header, index, index_name = table.header, table.index, table.index_name or index_name
        table = table.values
    rows = np.atleast_2d(np.asarray(table)) if isinstance(table, np.ndarray) else table
    if isinstance(rows, np.ndarray) and rows.ndim == 2 and rows.shape == (1, 0):
        rows = []
    if header is None:
        ncol = len(rows[0]) if len(rows) else 0
        header = [f"x{i + 1}" for i in range(ncol)]
    fh = _open(path, "w")
    out = sys.stdout if fh is None else fh
    try:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(([index_name] if index is not None else []) + list(header))
        for i, row in enumerate(rows):
            cells = [_fmt(v) for v in row]
            w.writerow(([index[i]] if index is not None else []) + cells)
    finally:
        if fh is not None:
            fh.close()


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps_json(document: dict) -> str:
    doc = {"schema_version": SCHEMA_VERSION}
    doc.update(_jsonable(document))
    return json.dumps(doc, indent=2, allow_nan=False)


def write_json(path, document: dict) -> None:
    """Serialise ``document`` with a ``schema_version`` field; non-finite floats become null."""
    text = dumps_json(document) + "\n"
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
