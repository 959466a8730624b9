"""CSV / JSON artifact writers and readers.

Floats are written with ``repr`` so every value round-trips exactly.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from rotorlab.classical import MomentStats
from rotorlab.errors import UsageError
from rotorlab.quantum import WidthSeries


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if hasattr(obj, "value") and not isinstance(obj, (int, str)):
        return obj.value
    return obj


def write_json(path, data) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")
    return path


def write_quantum_widths(path, series: WidthSeries) -> Path:
    return write_csv(path, ("t", "s1", "s2"), zip(series.t, series.s1, series.s2))


def read_quantum_widths(path) -> WidthSeries:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows or not {"t", "s1", "s2"} <= set(rows[0]):
        raise UsageError(f"{path}: expected columns t, s1, s2")
    return WidthSeries(
        [int(float(r["t"])) for r in rows],
        [float(r["s1"]) for r in rows],
        [float(r["s2"]) for r in rows],
    )


def write_classical_widths(path, series: Sequence[MomentStats]) -> Path:
    return write_csv(
        path,
        ("t", "var_p1", "var_p2", "mean_p1", "mean_p2"),
        ((s.t, s.var_p1, s.var_p2, s.mean_p1, s.mean_p2) for s in series),
    )


def read_classical_widths(path) -> list[MomentStats]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [
        MomentStats(int(r["t"]), float(r["mean_p1"]), float(r["mean_p2"]), float(r["var_p1"]), float(r["var_p2"]))
        for r in rows
    ]


def write_section(path, m1, probability) -> Path:
    return write_csv(path, ("m1", "probability"), zip(m1, probability))


def read_section(path) -> tuple[np.ndarray, np.ndarray]:
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0].astype(int), data[:, 1]


def write_table(path, row_values, col_values, cells: dict, row_name="lambda3", col_name="lambda4") -> Path:
    """Grid table: one row per λ3, one column per λ4; missing cells stay blank."""
    header = [f"{row_name}\\{col_name}"] + [_fmt(c) for c in col_values]
    rows = []
    for r in row_values:
        row = [_fmt(r)]
        for c in col_values:
            v = cells.get((r, c))
            row.append("" if v is None else _fmt(v))
        rows.append(row)
    return write_csv(path, header, rows)


def read_table(path) -> tuple[list[float], list[float], dict]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    cols = [float(c) for c in rows[0][1:]]
    rvals, cells = [], {}
    for row in rows[1:]:
        r = float(row[0])
        rvals.append(r)
        for c, v in zip(cols, row[1:]):
            if v != "":
                cells[(r, c)] = v
    return rvals, cols, cells
