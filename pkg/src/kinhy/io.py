"""CSV and manifest serialization.

All numeric output uses 17 significant digits so a reader recovers every
double bit-for-bit.  Each run directory carries a manifest with the fully
resolved configuration next to the data files.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .mesh import SpatialGrid

SNAPSHOT_HEADER = "i,j,x,y,rho,ux,uy,T,P,regime"
FRACTION_HEADER = "t,fraction,to_kinetic,to_fluid"
CONVERGENCE_HEADER = "dt,err,order,mode,epsilon"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def snapshot_filename(t: float) -> str:
    return f"snapshot_t{t:.6f}.csv"


def write_snapshot(path: str, grid: SpatialGrid, rho, ux, uy, T, P,
                   regime) -> None:
    """One row per cell: indices, centers, primitive fields, regime label."""
    xc, yc = grid.xc, grid.yc
    lines = [SNAPSHOT_HEADER]
    for j in range(grid.ny):
        for i in range(grid.nx):
            lines.append(",".join((
                str(i), str(j), _fmt(xc[i]), _fmt(yc[j]),
                _fmt(rho[j, i]), _fmt(ux[j, i]), _fmt(uy[j, i]),
                _fmt(T[j, i]), _fmt(P[j, i]), str(int(regime[j, i])))))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_fraction(path: str, stats) -> None:
    lines = [FRACTION_HEADER]
    for t, frac, n2k, n2f in stats.rows():
        lines.append(f"{_fmt(t)},{_fmt(frac)},{n2k},{n2f}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_convergence(path: str, rows) -> None:
    """Rows are (dt, err, order_or_None, mode, epsilon) tuples."""
    lines = [CONVERGENCE_HEADER]
    for dt, err, order, mode, eps in rows:
        order_s = "" if order is None else _fmt(order)
        lines.append(f"{_fmt(dt)},{_fmt(err)},{order_s},{mode},{_fmt(eps)}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_probe(path: str, vgrid, fslice) -> None:
    lines = ["vx,vy,f"]
    for k in range(vgrid.K):
        lines.append(f"{_fmt(vgrid.vx[k])},{_fmt(vgrid.vy[k])},{_fmt(fslice[k])}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_manifest(path: str, manifest: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_snapshot(path: str):
    """Snapshot file back as a dict of numpy columns (exact round trip)."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != SNAPSHOT_HEADER:
            raise ValueError(f"unexpected snapshot header {header!r}")
        raw = np.loadtxt(fh, delimiter=",", ndmin=2)
    cols = SNAPSHOT_HEADER.split(",")
    return {name: raw[:, k] for k, name in enumerate(cols)}


def ensure_dir(path: str) -> str:
    os.makedirs(path, exist_ok=True)
    return path
