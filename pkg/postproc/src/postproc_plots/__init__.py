"""Figure generation for hybrid fluid/kinetic solver run directories.

The package consumes only the solver's documented on-disk outputs (snapshot,
kinetic-fraction, and convergence CSV files plus the JSON manifest) and
renders static images: field heatmaps with a kinetic-cell overlay, shock-tube
profiles against the exact Riemann reference, log-log convergence curves, and
the kinetic-fraction time series.
"""

from .plots import KINDS, PlotJob, PlotResult, make_plot, plot_convergence, \
    plot_fraction, plot_heatmap, plot_profiles
from .readers import (FLUID, KINETIC, OBSTACLE, ConvergenceRow, Snapshot,
                      list_snapshots, read_convergence, read_fraction,
                      read_manifest, read_snapshot)
from .riemann_ref import RiemannReference, solve_riemann

__all__ = [
    "KINDS", "PlotJob", "PlotResult", "make_plot", "plot_convergence",
    "plot_fraction", "plot_heatmap", "plot_profiles",
    "FLUID", "KINETIC", "OBSTACLE", "ConvergenceRow", "Snapshot",
    "list_snapshots", "read_convergence", "read_fraction", "read_manifest",
    "read_snapshot", "RiemannReference", "solve_riemann",
]

__version__ = "0.1.0"
