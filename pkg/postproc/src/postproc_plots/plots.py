"""Static figure generation from solver run directories.

Four plot kinds cover the solver's outputs: ``heatmap`` (field panels with a
hatched overlay on kinetic cells and obstacle cells masked out), ``profiles``
(x-averaged shock-tube profiles against the exact Riemann reference),
``convergence`` (log-log error curves with reference slopes and a fitted
slope annotation per mode), and ``fraction`` (kinetic-cell time series).

Input directories are read-only; the only file touched is the requested
output image.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Rectangle

from .readers import (KINETIC, OBSTACLE, SNAPSHOT_FIELDS, list_snapshots,
                      read_convergence, read_fraction, read_manifest,
                      read_snapshot)
from .riemann_ref import SOD_GAMMA, SOD_LEFT, SOD_RIGHT, solve_riemann

KINDS = ("heatmap", "profiles", "convergence", "fraction")

_FRACTION_COLUMNS = ("fraction", "to_kinetic", "to_fluid")


@dataclass(frozen=True)
class PlotJob:
    """One batch plotting request.

    ``fields`` selects snapshot fields for heatmap/profiles, modes for
    convergence, and columns for fraction; empty means the kind's default.
    """

    input_dir: str
    kind: str
    fields: tuple[str, ...] = ()
    output: str = "plot.png"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown plot kind {self.kind!r} "
                             f"(choose from {', '.join(KINDS)})")


@dataclass
class PlotResult:
    """Where the image landed plus countable facts about what was drawn."""

    path: str
    panels: int
    overlay_cells: int | None = None
    masked_cells: int | None = None
    slopes: dict[str, float] = field(default_factory=dict)


def _edges(centers: np.ndarray) -> np.ndarray:
    """Cell edges for pcolormesh from (assumed uniform) cell centers."""
    h = centers[1] - centers[0] if len(centers) > 1 else 1.0
    return np.concatenate([centers - 0.5 * h, [centers[-1] + 0.5 * h]])


def _check_fields(fields, allowed, what) -> tuple[str, ...]:
    bad = [f for f in fields if f not in allowed]
    if bad:
        raise ValueError(f"unknown {what} {bad[0]!r} "
                         f"(choose from {', '.join(allowed)})")
    return tuple(fields)


def _save(fig, output: str) -> None:
    parent = os.path.dirname(os.path.abspath(output))
    os.makedirs(parent, exist_ok=True)
    fig.savefig(output, dpi=150, bbox_inches="tight")
    plt.close(fig)


def plot_heatmap(job: PlotJob) -> PlotResult:
    """Field panels, one column per snapshot time, one row per field.

    Kinetic cells are overlaid with one hatched rectangle each, so the
    overlay marks exactly the cells the snapshot labels kinetic; obstacle
    cells are masked out of the color map.  An all-fluid snapshot gets no
    overlay at all.
    """
    paths = list_snapshots(job.input_dir)
    if not paths:
        raise ValueError(f"no snapshot files in {job.input_dir}")
    fields = _check_fields(job.fields or ("rho",), SNAPSHOT_FIELDS, "field")
    snaps = [read_snapshot(p) for p in paths]

    cmap = matplotlib.colormaps["viridis"].copy()
    cmap.set_bad("0.55")
    nrow, ncol = len(fields), len(snaps)
    fig, axes = plt.subplots(nrow, ncol, squeeze=False,
                             figsize=(3.4 * ncol + 0.8, 3.0 * nrow),
                             constrained_layout=True)
    overlay_cells = 0
    masked_cells = 0
    for c, snap in enumerate(snaps):
        xe, ye = _edges(snap.x), _edges(snap.y)
        dx, dy = xe[1] - xe[0], ye[1] - ye[0]
        kin_j, kin_i = np.nonzero(snap.regime == KINETIC)
        for r, name in enumerate(fields):
            ax = axes[r][c]
            data = np.ma.masked_where(snap.regime == OBSTACLE,
                                      getattr(snap, name))
            quad = ax.pcolormesh(xe, ye, data, cmap=cmap)
            fig.colorbar(quad, ax=ax)
            for i, j in zip(kin_i, kin_j):
                ax.add_patch(Rectangle((xe[i], ye[j]), dx, dy, fill=False,
                                       hatch="////", edgecolor="k",
                                       linewidth=0.2))
                overlay_cells += 1
            masked_cells += int(data.mask.sum()) if data.mask is not np.ma.nomask else 0
            ax.set_aspect("equal")
            if r == nrow - 1:
                ax.set_xlabel("x")
            if c == 0:
                ax.set_ylabel(f"{name}\ny")
            if r == 0:
                title = "t = ?" if snap.time is None else f"t = {snap.time:g}"
                ax.set_title(title)
    _save(fig, job.output)
    return PlotResult(path=job.output, panels=nrow * ncol,
                      overlay_cells=overlay_cells, masked_cells=masked_cells)


def plot_profiles(job: PlotJob) -> PlotResult:
    """x-averaged profiles along y from the latest snapshot.

    When the run manifest names the planar shock-tube scenario, the exact
    self-similar solution at the snapshot time is drawn underneath.
    """
    paths = list_snapshots(job.input_dir)
    if not paths:
        raise ValueError(f"no snapshot files in {job.input_dir}")
    fields = _check_fields(job.fields or ("rho", "uy", "T"),
                           SNAPSHOT_FIELDS, "field")
    snap = read_snapshot(paths[-1])

    exact = None
    try:
        scenario = read_manifest(job.input_dir)["config"].get("scenario")
    except (OSError, KeyError, ValueError):
        scenario = None
    if scenario == "sod" and snap.time and snap.time > 0.0:
        sol = solve_riemann(SOD_LEFT, SOD_RIGHT, SOD_GAMMA)
        rho_e, u_e, p_e = sol.sample((snap.y - 0.5) / snap.time)
        exact = {"rho": rho_e, "uy": u_e, "ux": np.zeros_like(rho_e),
                 "T": p_e / rho_e, "P": p_e}

    fig, axes = plt.subplots(1, len(fields), squeeze=False,
                             figsize=(3.6 * len(fields), 3.2),
                             constrained_layout=True)
    for k, name in enumerate(fields):
        ax = axes[0][k]
        if exact is not None:
            ax.plot(snap.y, exact[name], "k--", lw=1.2, label="exact")
        ax.plot(snap.y, getattr(snap, name).mean(axis=1), ".",
                ms=3.5, label="solver")
        ax.set_xlabel("y")
        ax.set_ylabel(name)
        ax.legend(frameon=False, fontsize=8)
    if snap.time is not None:
        fig.suptitle(f"t = {snap.time:g}")
    _save(fig, job.output)
    return PlotResult(path=job.output, panels=len(fields))


def plot_convergence(job: PlotJob) -> PlotResult:
    """Log-log error versus step size, one curve per mode.

    Each curve's legend entry carries the least-squares slope fitted to its
    points; dashed reference lines show slopes 1 and 3.  ``fields`` may name
    a subset of modes.  A mode with fewer than two points is an error.
    """
    rows = read_convergence(os.path.join(job.input_dir, "convergence.csv"))
    groups: dict[str, list] = {}
    for r in rows:
        groups.setdefault(r.mode, []).append(r)
    if job.fields:
        _check_fields(job.fields, tuple(groups), "mode")
        groups = {m: groups[m] for m in job.fields}
    if not groups:
        raise ValueError("empty convergence table")

    fig, ax = plt.subplots(figsize=(4.6, 3.6), constrained_layout=True)
    slopes: dict[str, float] = {}
    for mode, rs in groups.items():
        if len(rs) < 2:
            raise ValueError(f"fewer than two points for mode {mode!r}")
        dts = np.array([r.dt for r in rs])
        errs = np.array([r.err for r in rs])
        slope = float(np.polyfit(np.log(dts), np.log(errs), 1)[0])
        slopes[mode] = slope
        ax.loglog(dts, errs, "o-", label=f"{mode} (slope {slope:.2f})")

    all_dt = np.array([r.dt for rs in groups.values() for r in rs])
    all_err = np.array([r.err for rs in groups.values() for r in rs])
    span = np.array([all_dt.min(), all_dt.max()])
    anchor_dt, anchor_err = all_dt.max(), all_err.max()
    for p, style in ((1, ":"), (3, "--")):
        ax.loglog(span, anchor_err * (span / anchor_dt) ** p, style,
                  color="0.5", lw=1.0, label=f"slope {p} reference")
    ax.set_xlabel("dt")
    ax.set_ylabel("error")
    ax.grid(True, which="both", alpha=0.3)
    ax.legend(frameon=False, fontsize=8)
    _save(fig, job.output)
    return PlotResult(path=job.output, panels=1, slopes=slopes)


def plot_fraction(job: PlotJob) -> PlotResult:
    """Kinetic-cell fraction over time, optionally with relabel counts."""
    data = read_fraction(os.path.join(job.input_dir, "kinetic_fraction.csv"))
    columns = _check_fields(job.fields or ("fraction",), _FRACTION_COLUMNS,
                            "column")
    fig, ax = plt.subplots(figsize=(4.6, 3.2), constrained_layout=True)
    counts_ax = None
    for name in columns:
        if name == "fraction":
            ax.plot(data["t"], data["fraction"], label="fraction")
            ax.set_ylabel("kinetic fraction")
        else:
            if counts_ax is None:
                counts_ax = ax.twinx()
                counts_ax.set_ylabel("cells relabeled")
            counts_ax.step(data["t"], data[name], where="post", label=name)
    handles, labels = ax.get_legend_handles_labels()
    if counts_ax is not None:
        h2, l2 = counts_ax.get_legend_handles_labels()
        handles, labels = handles + h2, labels + l2
    ax.legend(handles, labels, frameon=False, fontsize=8)
    ax.set_xlabel("t")
    _save(fig, job.output)
    return PlotResult(path=job.output, panels=1)


_DISPATCH = {"heatmap": plot_heatmap, "profiles": plot_profiles,
             "convergence": plot_convergence, "fraction": plot_fraction}


def make_plot(job: PlotJob) -> PlotResult:
    """Render one PlotJob and return what was drawn."""
    if not os.path.isdir(job.input_dir):
        raise ValueError(f"input directory {job.input_dir!r} does not exist")
    return _DISPATCH[job.kind](job)
