"""Grids, fields and primitive/conserved conversions.

Spatial fields are stored as C-ordered arrays indexed ``[j, i]`` with ``j``
the row (y) index and ``i`` the column (x) index; kinetic fields carry a
leading velocity-node axis, ``f[k, j, i]``.  The velocity grid is a uniform
cell-centered tensor grid on ``[-vmax, vmax]^d`` so that every node has an
exact mirror partner under reflection of any single axis.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NonPhysicalStateError

# Regime labels used in masks and snapshot output.
FLUID = 0
KINETIC = 1
OBSTACLE = 2


@dataclass
class SpatialGrid:
    """Uniform cell-centered rectangular grid, optionally with an obstacle."""

    nx: int
    ny: int
    lx: float
    ly: float
    ox: float = 0.0  # coordinate of the left domain edge
    oy: float = 0.0  # coordinate of the bottom domain edge
    dx: float = field(init=False)
    dy: float = field(init=False)
    xc: np.ndarray = field(init=False, repr=False)
    yc: np.ndarray = field(init=False, repr=False)
    obstacle: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.nx < 5 or self.ny < 5:
            raise ConfigError(f"grid must be at least 5x5, got {self.nx}x{self.ny}")
        if self.lx <= 0 or self.ly <= 0:
            raise ConfigError("domain lengths must be positive")
        self.dx = self.lx / self.nx
        self.dy = self.ly / self.ny
        self.xc = self.ox + (np.arange(self.nx) + 0.5) * self.dx
        self.yc = self.oy + (np.arange(self.ny) + 0.5) * self.dy
        self.obstacle = np.zeros((self.ny, self.nx), dtype=np.uint8)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    def cell_centers(self):
        """Return (X, Y) center coordinate arrays of shape (ny, nx)."""
        return np.meshgrid(self.xc, self.yc)

    def add_circle(self, xc: float, yc: float, radius: float) -> None:
        """Mark cells whose centers fall inside the circle as obstacle."""
        X, Y = self.cell_centers()
        inside = (X - xc) ** 2 + (Y - yc) ** 2 <= radius**2
        self._mark_obstacle(inside)

    def add_rectangle(self, xc: float, yc: float, width: float, height: float) -> None:
        """Mark cells whose centers fall inside the axis-aligned box."""
        X, Y = self.cell_centers()
        inside = (np.abs(X - xc) <= 0.5 * width) & (np.abs(Y - yc) <= 0.5 * height)
        self._mark_obstacle(inside)

    def _mark_obstacle(self, inside: np.ndarray) -> None:
        if inside[0, :].any() or inside[-1, :].any() or inside[:, 0].any() or inside[:, -1].any():
            raise ConfigError("obstacle must lie strictly inside the domain")
        self.obstacle |= inside.astype(np.uint8)


@dataclass
class VelocityGrid:
    """Uniform cell-centered velocity grid on [-vmax, vmax]^d.

    ``nodes`` has shape (K, d) with K = nv**d; the quadrature weight is the
    constant cell volume ``dvol = dv**d``.  ``mirror[a]`` maps node k to the
    node with axis-a velocity component negated (exact, by symmetry of the
    cell-centered layout).
    """

    vmax: float
    nv: int
    d: int = 2

    def __post_init__(self):
        if self.vmax <= 0:
            raise ConfigError("vmax must be positive")
        if self.nv < 2:
            raise ConfigError("nv must be at least 2")
        if self.d not in (2, 3):
            raise ConfigError("velocity dimension must be 2 or 3")
        self.dv = 2.0 * self.vmax / self.nv
        self.axis = -self.vmax + (np.arange(self.nv) + 0.5) * self.dv
        grids = np.meshgrid(*([self.axis] * self.d), indexing="ij")
        self.nodes = np.stack([g.ravel() for g in grids], axis=1)
        self.K = self.nv**self.d
        self.dvol = self.dv**self.d
        # mirror[a][k]: index of the node equal to nodes[k] with axis a negated
        idx = np.indices([self.nv] * self.d).reshape(self.d, -1)
        self.mirror = np.empty((self.d, self.K), dtype=np.int64)
        strides = [self.nv ** (self.d - 1 - a) for a in range(self.d)]
        for a in range(self.d):
            flipped = idx.copy()
            flipped[a] = self.nv - 1 - flipped[a]
            self.mirror[a] = sum(flipped[b] * strides[b] for b in range(self.d))
        self._vx = np.ascontiguousarray(self.nodes[:, 0])
        self._vy = np.ascontiguousarray(self.nodes[:, 1])

    @property
    def vx(self) -> np.ndarray:
        return self._vx

    @property
    def vy(self) -> np.ndarray:
        return self._vy

    def speed_squared(self) -> np.ndarray:
        return np.sum(self.nodes**2, axis=1)


def gamma_for(d: int) -> float:
    """Adiabatic exponent of the d-dimensional monatomic description."""
    return (d + 2.0) / d


def build_grids(config) -> tuple[SpatialGrid, VelocityGrid]:
    """Construct the spatial and velocity grids described by ``config``."""
    sg = SpatialGrid(nx=config.nx, ny=config.ny, lx=config.lx, ly=config.ly,
                     ox=config.ox, oy=config.oy)
    shape = getattr(config, "obstacle_shape", "none")
    if shape == "circle":
        sg.add_circle(config.obstacle_x, config.obstacle_y, config.obstacle_radius)
    elif shape == "rectangle":
        sg.add_rectangle(config.obstacle_x, config.obstacle_y,
                         config.obstacle_width, config.obstacle_height)
    elif shape != "none":
        raise ConfigError(f"unknown obstacle shape {shape!r}")
    vg = VelocityGrid(vmax=config.vmax, nv=config.nv)
    return sg, vg


@dataclass
class Primitives:
    """Primitive variables; each entry is a scalar or an (ny, nx) array."""

    rho: np.ndarray
    ux: np.ndarray
    uy: np.ndarray
    P: np.ndarray
    T: np.ndarray


def conserved_to_primitive(U: np.ndarray, gamma: float, where=None) -> Primitives:
    """Convert conserved (rho, rho*ux, rho*uy, E) to primitive variables.

    P = (gamma - 1) (E - rho |u|^2 / 2) and T = P / rho.  Raises
    NonPhysicalStateError when rho <= 0 or P <= 0 anywhere.
    """
    U = np.asarray(U, dtype=np.float64)
    rho = U[0]
    if np.any(rho <= 0.0) or not np.all(np.isfinite(rho)):
        raise NonPhysicalStateError("non-positive density", _locate(rho <= 0.0, where))
    ux = U[1] / rho
    uy = U[2] / rho
    P = (gamma - 1.0) * (U[3] - 0.5 * rho * (ux * ux + uy * uy))
    if np.any(P <= 0.0) or not np.all(np.isfinite(P)):
        raise NonPhysicalStateError("non-positive pressure", _locate(P <= 0.0, where))
    return Primitives(rho=rho, ux=ux, uy=uy, P=P, T=P / rho)


def primitive_to_conserved(rho, ux, uy, P, gamma: float) -> np.ndarray:
    """Convert primitive variables to the conserved vector (stacked axis 0)."""
    rho = np.asarray(rho, dtype=np.float64)
    ux = np.asarray(ux, dtype=np.float64)
    uy = np.asarray(uy, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    E = P / (gamma - 1.0) + 0.5 * rho * (ux * ux + uy * uy)
    return np.stack(np.broadcast_arrays(rho, rho * ux, rho * uy, E))


def _locate(bad, where):
    if where is not None:
        return where
    bad = np.atleast_1d(bad)
    if bad.ndim == 2:
        js, iis = np.nonzero(bad)
        if js.size:
            return (int(js[0]), int(iis[0]))
    elif bad.any():
        return (int(np.argmax(bad)),)
    return None
