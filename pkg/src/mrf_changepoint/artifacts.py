"""File formats shared by the command-line tools.

Dataset CSV: header ``time,<node_1>,...,<node_p>``, one row per observation
with alphabet codes.  JSON documents carry a ``schema_version`` field and
are written with sorted keys so identical inputs give identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .core import SCHEMA_VERSION, Dataset, MRFError


class DataError(MRFError):
    """Unreadable or malformed input data."""


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def write_json(path, obj: dict) -> Path:
    path = Path(path)
    doc = _clean(obj)
    doc.setdefault("schema_version", SCHEMA_VERSION)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_json(path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from None


def write_dataset_csv(path, data: Dataset) -> Path:
    path = Path(path)
    nodes = data.node_labels or tuple(f"x{j + 1}" for j in range(data.p))
    times = data.time_labels or tuple(str(t + 1) for t in range(data.T))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("time",) + tuple(nodes))
        for label, row in zip(times, data.values):
            w.writerow((label, *row.tolist()))
    return path


def read_dataset_csv(path) -> Dataset:
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from None
    if len(rows) < 3:
        raise DataError(f"{path}: need a header and at least two rows")
    header = rows[0]
    body = [r for r in rows[1:] if r]
    try:
        values = np.array([[int(c) for c in r[1:]] for r in body], dtype=np.int32)
    except ValueError as exc:
        raise DataError(f"{path}: non-integer cell ({exc})") from None
    if values.ndim != 2 or values.shape[1] != len(header) - 1:
        raise DataError(f"{path}: ragged rows")
    try:
        return Dataset(values, tuple(header[1:]), tuple(r[0] for r in body))
    except MRFError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_curve_csv(path, curve, smoothed=None) -> Path:
    """``tau,objective`` rows, with an optional ``smoothed`` column on shared taus."""
    path = Path(path)
    smooth = {} if smoothed is None else {int(t): v for t, v in smoothed}
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("tau", "objective") + (("smoothed",) if smoothed is not None else ()))
        for t, v in curve:
            row = [int(t), repr(float(v))]
            if smoothed is not None:
                s = smooth.get(int(t))
                row.append("" if s is None else repr(float(s)))
            w.writerow(row)
    return path


def write_rows_csv(path, header, rows) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path
