"""Result export: legacy ASCII VTK unstructured grids and RFC-4180 CSV."""
from __future__ import annotations

import csv
import io as _io
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np

from .fem import elements as el
from .fem.mesh import Mesh


def write_vtk(path, mesh: Mesh, x=None, point_data: Optional[Dict[str, np.ndarray]] = None,
              cell_data: Optional[Dict[str, np.ndarray]] = None, title: str = "surfelast") -> None:
    """Write bulk and surface cells of ``mesh`` at deformed positions ``x``.

    Two-dimensional (axisymmetric) coordinates are written as ``(r, z, 0)``.
    ``cell_data`` arrays have one entry per cell, bulk cells first.
    Vector point data of length ``dim`` is padded to three components.
    """
    pts = mesh.nodes if x is None else np.asarray(x, dtype=float).reshape(mesh.nodes.shape)
    if pts.shape[1] == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    blocks = mesh.bulk + mesh.surface
    ncell = sum(len(b.conn) for b in blocks)
    size = sum(len(b.conn) * (b.conn.shape[1] + 1) for b in blocks)
    out = _io.StringIO()
    out.write(f"# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\n")
    out.write(f"POINTS {len(pts)} double\n")
    np.savetxt(out, pts, fmt="%.12g")
    out.write(f"CELLS {ncell} {size}\n")
    for b in blocks:
        np.savetxt(out, np.column_stack([np.full(len(b.conn), b.conn.shape[1]), b.conn]), fmt="%d")
    out.write(f"CELL_TYPES {ncell}\n")
    for b in blocks:
        np.savetxt(out, np.full(len(b.conn), el.get(b.kind).vtk_id), fmt="%d")
    if cell_data:
        out.write(f"CELL_DATA {ncell}\n")
        for name, v in cell_data.items():
            _write_field(out, name, np.asarray(v, dtype=float), ncell)
    if point_data:
        out.write(f"POINT_DATA {len(pts)}\n")
        for name, v in point_data.items():
            v = np.asarray(v, dtype=float).reshape(len(pts), -1)
            if v.shape[1] == 2:
                v = np.column_stack([v, np.zeros(len(v))])
            _write_field(out, name, v, len(pts))
    Path(path).write_text(out.getvalue())


def _write_field(out, name, v, n):
    v = v.reshape(n, -1)
    if v.shape[1] == 1:
        out.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
    elif v.shape[1] == 3:
        out.write(f"VECTORS {name} double\n")
    else:
        raise ValueError(f"field {name} must have 1 or 3 components")
    np.savetxt(out, np.nan_to_num(v), fmt="%.12g")


def read_vtk_counts(path):
    """``(n_points, n_cells, cell_types)`` of a legacy VTK file (for checks)."""
    lines = Path(path).read_text().splitlines()
    npts = ncell = None
    types = []
    for i, ln in enumerate(lines):
        tok = ln.split()
        if not tok:
            continue
        if tok[0] == "POINTS":
            npts = int(tok[1])
        elif tok[0] == "CELLS":
            ncell = int(tok[1])
        elif tok[0] == "CELL_TYPES":
            types = [int(t) for t in lines[i + 1:i + 1 + int(tok[1])]]
    return npts, ncell, types


def write_csv(path_or_file, rows: Sequence[dict], columns: Optional[Sequence[str]] = None) -> None:
    """Write ``rows`` (dicts) as CSV with a header; ``path_or_file`` may be a text stream."""
    rows = list(rows)
    if columns is None:
        columns = list(rows[0].keys()) if rows else []
    own = isinstance(path_or_file, (str, Path))
    f = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.DictWriter(f, fieldnames=list(columns), extrasaction="ignore", lineterminator="\r\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: _fmt(r.get(k)) for k in columns})
    finally:
        if own:
            f.close()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (np.integer,)):
        return int(v)
    return v


def read_csv(path) -> list:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


#: columns of the per-step run log
RUN_LOG_COLUMNS = ("phase", "step", "control", "iterations", "residual_norm", "n_neg",
                   "lambda_min", "stable", "branch")
