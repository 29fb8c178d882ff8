"""Readers for the solver's run-directory files.

The solver prints every float with 17 significant digits, so ``float()``
recovers the written doubles bit-for-bit; every reader here is an exact
round trip of the file contents.  Files are opened read-only and never
modified.
"""

from __future__ import annotations

import glob
import json
import os
from dataclasses import dataclass

import numpy as np

SNAPSHOT_HEADER = "i,j,x,y,rho,ux,uy,T,P,regime"
FRACTION_HEADER = "t,fraction,to_kinetic,to_fluid"
CONVERGENCE_HEADER = "dt,err,order,mode,epsilon"

FLUID = 0
KINETIC = 1
OBSTACLE = 2

SNAPSHOT_FIELDS = ("rho", "ux", "uy", "T", "P")


@dataclass
class Snapshot:
    """One snapshot file regridded to (ny, nx) arrays.

    ``time`` is parsed from the ``snapshot_t{t}.csv`` file name when the
    file follows that convention, otherwise None.
    """

    time: float | None
    x: np.ndarray
    y: np.ndarray
    rho: np.ndarray
    ux: np.ndarray
    uy: np.ndarray
    T: np.ndarray
    P: np.ndarray
    regime: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.rho.shape


def _check_header(line: str, expected: str, path: str) -> None:
    if line.strip() != expected:
        raise ValueError(f"unexpected header {line.strip()!r} in {path} "
                         f"(want {expected!r})")


def snapshot_time_from_name(path: str) -> float | None:
    name = os.path.basename(path)
    if name.startswith("snapshot_t") and name.endswith(".csv"):
        try:
            return float(name[len("snapshot_t"):-len(".csv")])
        except ValueError:
            return None
    return None


def read_snapshot(path: str) -> Snapshot:
    """Parse one snapshot CSV into cell-indexed arrays.

    Rows may arrive in any order; cells are placed by their (i, j) indices.
    Raises ValueError on a wrong header or on an incomplete grid.
    """
    with open(path, encoding="utf-8") as fh:
        _check_header(fh.readline(), SNAPSHOT_HEADER, path)
        rows = [line.strip().split(",") for line in fh if line.strip()]
    if not rows:
        raise ValueError(f"no data rows in {path}")
    ii = np.array([int(r[0]) for r in rows])
    jj = np.array([int(r[1]) for r in rows])
    nx, ny = ii.max() + 1, jj.max() + 1
    if len(rows) != nx * ny:
        raise ValueError(f"{path} has {len(rows)} rows for a "
                         f"{nx} x {ny} grid")
    cols = np.empty((7, ny, nx))
    regime = np.empty((ny, nx), dtype=np.int64)
    for r, i, j in zip(rows, ii, jj):
        for k in range(7):
            cols[k, j, i] = float(r[2 + k])
        regime[j, i] = int(r[9])
    x, y, rho, ux, uy, T, P = cols
    return Snapshot(time=snapshot_time_from_name(path),
                    x=x[0].copy(), y=y[:, 0].copy(),
                    rho=rho, ux=ux, uy=uy, T=T, P=P, regime=regime)


def list_snapshots(run_dir: str) -> list[str]:
    """Snapshot file paths in a run directory, ordered by their time."""
    paths = glob.glob(os.path.join(run_dir, "snapshot_t*.csv"))
    stamped = [(snapshot_time_from_name(p), p) for p in paths]
    stamped = [(t, p) for t, p in stamped if t is not None]
    return [p for _, p in sorted(stamped)]


def read_fraction(path: str) -> dict[str, np.ndarray]:
    """Kinetic-fraction time series as column arrays."""
    with open(path, encoding="utf-8") as fh:
        _check_header(fh.readline(), FRACTION_HEADER, path)
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return {
        "t": np.array([float(r[0]) for r in rows]),
        "fraction": np.array([float(r[1]) for r in rows]),
        "to_kinetic": np.array([int(r[2]) for r in rows]),
        "to_fluid": np.array([int(r[3]) for r in rows]),
    }


@dataclass(frozen=True)
class ConvergenceRow:
    dt: float
    err: float
    order: float | None
    mode: str
    epsilon: float


def read_convergence(path: str) -> list[ConvergenceRow]:
    """Convergence-table rows; an empty order field maps to None."""
    with open(path, encoding="utf-8") as fh:
        _check_header(fh.readline(), CONVERGENCE_HEADER, path)
        out = []
        for line in fh:
            if not line.strip():
                continue
            dt, err, order, mode, eps = line.strip().split(",")
            out.append(ConvergenceRow(
                dt=float(dt), err=float(err),
                order=None if order == "" else float(order),
                mode=mode, epsilon=float(eps)))
    return out


def read_manifest(run_dir: str) -> dict:
    with open(os.path.join(run_dir, "manifest.json"), encoding="utf-8") as fh:
        return json.load(fh)
