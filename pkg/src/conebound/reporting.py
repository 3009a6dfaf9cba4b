"""Deterministic JSON reports, point-cloud CSV input and plot-data CSV output."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import MissingSeries, ParseError


def _fmt_float(x):
    if not math.isfinite(x):
        return "null"
    if x == int(x) and abs(x) < 1e16:
        return repr(float(x))
    return "%.17g" % x


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(obj[k], indent, level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
               for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent=2):
    """JSON text with sorted keys and floats at 17 significant digits."""
    return _encode(obj, indent, 0) + "\n"


def write_json(obj, path):
    Path(path).write_text(dumps(obj), encoding="utf-8")


def read_point_cloud(path, dim=None):
    """Read one point per row; an optional first row starting with ``#`` is a header.

    Raises :class:`ParseError` (with the line number) on a non-numeric field
    or a row whose arity differs from the first data row or from `dim`.
    """
    rows = []
    width = dim
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if lineno == 1 and row[0].lstrip().startswith("#"):
                continue
            try:
                values = [float(cell) for cell in row]
            except ValueError:
                raise ParseError(f"non-numeric field in {row!r}", lineno) from None
            if width is None:
                width = len(values)
            if len(values) != width:
                raise ParseError(f"expected {width} columns, found {len(values)}", lineno)
            if not all(math.isfinite(v) for v in values):
                raise ParseError("non-finite coordinate", lineno)
            rows.append(values)
    if not rows:
        raise ParseError("no points in file")
    return np.array(rows)


def write_point_cloud(points, path, header=None):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        if header:
            fh.write("# " + header + "\n")
        w = csv.writer(fh)
        for p in np.asarray(points, dtype=float):
            w.writerow(["%.17g" % c for c in p])


def emit_plot_data(report, series, path):
    """Write ``report["series"][series]`` as a two-column CSV with a ``#`` header."""
    data = (report.get("series") or {}).get(series)
    if not data or not data.get("rows"):
        raise MissingSeries(f"report has no data for series {series!r}")
    cols = data["columns"]
    if len(cols) != 2:
        raise MissingSeries(f"series {series!r} is not two-column")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# series: {series} ({cols[0]}, {cols[1]})\n")
        for x, y in data["rows"]:
            fh.write(f"{_fmt_float(float(x))},{_fmt_float(float(y))}\n")
