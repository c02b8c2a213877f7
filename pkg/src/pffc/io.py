"""Writers for iteration tables, force profiles and legacy-VTK snapshots.

All floating point numbers are written with 17 significant digits, which
round-trips IEEE doubles exactly.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .mesh import Mesh
from .optimize import IterationRecord


def fmt(value: float) -> str:
    return format(float(value), ".17g")


class IterationLog:
    """Appends one CSV row per outer iteration and flushes it immediately."""

    def __init__(self, path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = self.path.open("w", newline="\n")
        self._fh.write(IterationRecord.CSV_HEADER + "\n")
        self._fh.flush()

    def append(self, record: IterationRecord):
        self._fh.write(record.csv_row() + "\n")
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_iterations(path) -> list[dict]:
    """Parse an ``iterations.csv`` back into dicts of numbers."""
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    out = []
    for line in lines[1:]:
        vals = line.split(",")
        row = {k: (int(v) if k in ("iter", "cg") else float(v)) for k, v in zip(header, vals)}
        out.append(row)
    return out


def write_force_profile(path, x, q):
    """Two columns ``x q(x)`` sorted by ``x``."""
    x = np.asarray(x, dtype=float)
    q = np.asarray(q, dtype=float)
    order = np.argsort(x, kind="stable")
    with Path(path).open("w") as fh:
        fh.write("# x q(x)\n")
        for i in order:
            fh.write(f"{fmt(x[i])} {fmt(q[i])}\n")


def read_force_profile(path):
    data = np.loadtxt(path, comments="#", ndmin=2)
    return data[:, 0], data[:, 1]


def write_vtk(path, mesh: Mesh, title: str, vectors: dict | None = None, scalars: dict | None = None):
    """Legacy-VTK ASCII structured grid with nodal point data.

    Parameters
    ----------
    vectors : dict of name -> (ux, uy) nodal arrays
    scalars : dict of name -> nodal array
    """
    nx = mesh.n + 1
    xs = np.linspace(0.0, 1.0, nx)
    X, Y = np.meshgrid(xs, xs)  # node k = j * (n + 1) + i
    lines = ["# vtk DataFile Version 3.0", title.replace("\n", " ")[:255], "ASCII",
             "DATASET STRUCTURED_GRID", f"DIMENSIONS {nx} {nx} 1", f"POINTS {nx * nx} double"]
    lines += [f"{fmt(x)} {fmt(y)} 0" for x, y in zip(X.ravel(), Y.ravel())]
    lines.append(f"POINT_DATA {nx * nx}")
    for name, (vx, vy) in (vectors or {}).items():
        lines.append(f"VECTORS {name} double")
        lines += [f"{fmt(a)} {fmt(b)} 0" for a, b in zip(vx, vy)]
    for name, s in (scalars or {}).items():
        lines += [f"SCALARS {name} double 1", "LOOKUP_TABLE default"]
        lines += [fmt(v) for v in s]
    Path(path).write_text("\n".join(lines) + "\n")


def write_state_vtk(path, mesh: Mesh, U, time: float):
    ux, uy, phi = mesh.split(U)
    write_vtk(path, mesh, f"state t={fmt(time)}", {"displacement": (ux, uy)}, {"phase_field": phi})


def write_adjoint_vtk(path, mesh: Mesh, Z, time: float):
    zx, zy, zphi = mesh.split(Z)
    write_vtk(path, mesh, f"adjoint t={fmt(time)}", {"z_u": (zx, zy)}, {"z_phi": zphi})


def read_vtk_point_data(path) -> dict:
    """Minimal reader for files written by :func:`write_vtk` (used in tests)."""
    tokens = Path(path).read_text().split("\n")
    out = {}
    npts = None
    i = 0
    while i < len(tokens):
        line = tokens[i].split()
        if line and line[0] == "POINT_DATA":
            npts = int(line[1])
        elif line and line[0] == "VECTORS":
            vals = np.array([[float(v) for v in tokens[i + 1 + k].split()] for k in range(npts)])
            out[line[1]] = vals
            i += npts
        elif line and line[0] == "SCALARS":
            vals = np.array([float(tokens[i + 2 + k]) for k in range(npts)])
            out[line[1]] = vals
            i += npts + 1
        i += 1
    return out
