"""On-disk formats: ZKF1 field snapshots, metrics CSV and key-value reports.

ZKF1 layout (all little-endian)::

    4 bytes   magic b"ZKF1"
    3 x u64   Nx, Ny, Nz
    3 x f64   L1, L2, X
    Nx*Ny*Nz x f64   physical values, row-major (x slowest, z fastest)

Every writer goes through :func:`atomic_write`, so an interrupted run leaves
only files ending in ``.partial``.
"""
from __future__ import annotations

import contextlib
import csv
import io
import json
import os
import struct
from pathlib import Path

import numpy as np

from .diagnostics import Identity, identity_residual_series
from .domain import DomainSpec, Field
from .errors import DataError

__all__ = [
    "MAGIC",
    "METRICS_COLUMNS",
    "atomic_write",
    "write_snapshot",
    "read_snapshot",
    "read_snapshot_header",
    "metrics_rows",
    "write_metrics",
    "read_metrics",
    "write_report",
    "read_report",
    "write_json",
]

MAGIC = b"ZKF1"
_HEADER = struct.Struct("<4s3Q3d")

METRICS_COLUMNS = (
    "t",
    "l2",
    "energy",
    "weighted_l2",
    "max_abs",
    "seam_magnitude",
    "l2_identity_residual",
    "weighted_identity_residual",
)
PARTIAL = ".partial"


@contextlib.contextmanager
def atomic_write(path, mode="w"):
    """Write to ``path + '.partial'`` and rename into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + PARTIAL)
    kwargs = {} if "b" in mode else {"encoding": "utf-8", "newline": ""}
    with open(tmp, mode, **kwargs) as fh:
        yield fh
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


# -- snapshots -------------------------------------------------------------------


def write_snapshot(path, f: Field):
    dom = f.dom
    vals = np.ascontiguousarray(f.values(), dtype="<f8")
    with atomic_write(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, dom.Nx, dom.Ny, dom.Nz, dom.L1, dom.L2, dom.X))
        fh.write(vals.tobytes(order="C"))


def read_snapshot_header(path):
    """Return ``(Nx, Ny, Nz, L1, L2, X)`` after checking magic and file size."""
    path = Path(path)
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
    if len(head) < _HEADER.size:
        raise DataError(f"{path}: truncated ZKF1 header")
    magic, nx, ny, nz, l1, l2, x = _HEADER.unpack(head)
    if magic != MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    expected = _HEADER.size + 8 * nx * ny * nz
    size = path.stat().st_size
    if size != expected:
        raise DataError(f"{path}: size {size} does not match header ({expected} bytes)")
    return nx, ny, nz, l1, l2, x


def read_snapshot(path, dealias=True) -> Field:
    nx, ny, nz, l1, l2, x = read_snapshot_header(path)
    dom = DomainSpec(l1, l2, x, nx, ny, nz, dealias)
    data = np.fromfile(path, dtype="<f8", offset=_HEADER.size).reshape(nx, ny, nz)
    if not np.all(np.isfinite(data)):
        raise DataError(f"{path}: snapshot contains non-finite values")
    return Field(dom, physical=data.astype(float))


# -- metrics -----------------------------------------------------------------------


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v))


def metrics_rows(state):
    """Rows of the metrics table for a finished run (list of dicts)."""
    m = state.metrics
    l2_res = identity_residual_series(state, Identity.L2_LINEAR) if len(m) > 1 else [0.0] * len(m)
    has_w = bool(m) and "w_mass" in m[0]
    w_res = (
        identity_residual_series(state, Identity.WEIGHTED_EXP)
        if has_w and len(m) > 1
        else [0.0 if has_w else None] * len(m)
    )
    rows = []
    for rec, r1, r2 in zip(m, l2_res, w_res):
        rows.append({
            "t": rec["t"],
            "l2": rec["mass"] ** 0.5,
            "energy": rec["energy"],
            "weighted_l2": rec["w_mass"] ** 0.5 if has_w else None,
            "max_abs": rec["max_abs"],
            "seam_magnitude": rec["seam"],
            "l2_identity_residual": r1,
            "weighted_identity_residual": r2,
        })
    return rows


def write_metrics(path, rows):
    with atomic_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_COLUMNS)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in METRICS_COLUMNS])


def read_metrics(path):
    """Metrics CSV as a dict of column name to float array (NaN for blanks)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != METRICS_COLUMNS:
            raise DataError(f"{path}: unexpected metrics header {header}")
        cols = {c: [] for c in header}
        for row in reader:
            for c, v in zip(header, row):
                cols[c].append(float(v) if v else float("nan"))
    return {c: np.array(v) for c, v in cols.items()}


# -- reports -------------------------------------------------------------------


def _report_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_report_value(x) for x in v) + "]"
    return str(v)


def write_report(path, items):
    """Write ``key = value`` lines in insertion order."""
    buf = io.StringIO()
    for k, v in items.items():
        buf.write(f"{k} = {_report_value(v)}\n")
    with atomic_write(path) as fh:
        fh.write(buf.getvalue())


def read_report(path):
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition(" = ")
            out[key] = val
    return out


def write_json(path, obj):
    with atomic_write(path) as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
