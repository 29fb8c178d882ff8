"""Dynamic decomposition of the domain into fluid and kinetic regions.

A single mask labels every cell fluid, kinetic or obstacle.  The manager
owns that mask and everything derived from it: gather/scatter index lists
for the kinetic cells, sweep runs for both descriptions, the faces where a
kinetic run borders a fluid cell (there the fluid side consumes the moments
of the kinetic face flux, which keeps the hybrid scheme conservative), and
the buffer cells on both sides of each interface.

Buffer images live in the non-owning array: a fluid cell near an interface
gets an equilibrium image written into the distribution array, a kinetic
cell near an interface gets its moments written into the conserved array.
Owning-regime data is never overwritten by synchronization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .discretization import (BoundarySpec, build_runs, euler_fluxes,
                             flux_divergence, kinetic_transport, run_end_faces)
from .indicators import compute_gradients, s1_deviation_field
from .mesh import (FLUID, KINETIC, OBSTACLE, SpatialGrid, VelocityGrid,
                   conserved_to_primitive)
from .moments import (batch_moments, compute_moments, conserved_weights,
                      discrete_maxwellian, relaxation_time)
from .params import CouplingThresholds, PhysicsParams


def project_to_macro(f: np.ndarray, vgrid: VelocityGrid) -> np.ndarray:
    """Conserved variables (rho, rho ux, rho uy, E) of one distribution slice."""
    m = compute_moments(f, vgrid)
    return np.array([m.rho, m.rho * m.u[0], m.rho * m.u[1], m.E])


def lift_to_kinetic(U: np.ndarray, vgrid: VelocityGrid, gamma: float) -> np.ndarray:
    """Equilibrium distribution sharing the conserved state U."""
    prim = conserved_to_primitive(np.asarray(U, dtype=np.float64), gamma)
    return discrete_maxwellian(prim.rho, prim.ux, prim.uy, prim.T, vgrid)


def _shift_or(a: np.ndarray, axis: int, periodic: bool) -> np.ndarray:
    out = a.copy()
    if periodic:
        out |= np.roll(a, 1, axis=axis)
        out |= np.roll(a, -1, axis=axis)
    elif axis == 0:
        out[1:, :] |= a[:-1, :]
        out[:-1, :] |= a[1:, :]
    else:
        out[:, 1:] |= a[:, :-1]
        out[:, :-1] |= a[:, 1:]
    return out


def dilate(mask: np.ndarray, radius: int, bc: BoundarySpec) -> np.ndarray:
    """Chebyshev dilation of a boolean mask honouring periodic wrap."""
    out = mask.copy()
    for _ in range(radius):
        out = _shift_or(out, 1, bc.periodic_x)
        out = _shift_or(out, 0, bc.periodic_y)
    return out


@dataclass
class DecompositionStats:
    """Time series of the kinetic share of the domain and switch counts."""

    t: list = field(default_factory=list)
    fraction: list = field(default_factory=list)
    to_kinetic: list = field(default_factory=list)
    to_fluid: list = field(default_factory=list)

    def record(self, t: float, fraction: float, n_to_kinetic: int, n_to_fluid: int):
        self.t.append(float(t))
        self.fraction.append(float(fraction))
        self.to_kinetic.append(int(n_to_kinetic))
        self.to_fluid.append(int(n_to_fluid))

    def rows(self):
        return zip(self.t, self.fraction, self.to_kinetic, self.to_fluid)


class DomainDecomposition:
    """Owns the regime mask and every index structure derived from it."""

    def __init__(self, grid: SpatialGrid, vgrid: VelocityGrid, bc: BoundarySpec,
                 thresholds: CouplingThresholds, physics: PhysicsParams):
        self.grid = grid
        self.vgrid = vgrid
        self.bc = bc
        self.thresholds = thresholds
        self.physics = physics
        self.mask = np.full((grid.ny, grid.nx), FLUID, dtype=np.uint8)
        self.mask[grid.obstacle != 0] = OBSTACLE
        self.runs_ex = build_runs(grid.obstacle == 0)
        self.runs_ey = build_runs(grid.obstacle.T == 0)
        self.W4 = conserved_weights(vgrid)
        K = vgrid.K
        self._padf = np.empty((K, grid.ny + 4, grid.nx + 4))
        self._padU = np.empty((4, grid.ny + 4, grid.nx + 4))
        self._rhs = np.zeros((K, grid.ny, grid.nx))
        self.refresh()

    # --- mask bookkeeping -----------------------------------------------------

    @property
    def n_kinetic(self) -> int:
        return self.kin_j.size

    def kinetic_fraction(self) -> float:
        active = float(np.count_nonzero(self.mask != OBSTACLE))
        return self.n_kinetic / active if active else 0.0

    def set_mask(self, mask: np.ndarray):
        mask = np.asarray(mask, dtype=np.uint8)
        if mask.shape != self.mask.shape:
            raise ValueError("mask shape mismatch")
        if np.any((mask == OBSTACLE) != (self.grid.obstacle != 0)):
            raise ValueError("mask obstacle cells must match the grid")
        self.mask = mask.copy()
        self.refresh()

    def refresh(self):
        """Rebuild all index structures after a mask change."""
        mask = self.mask
        kin = mask == KINETIC
        fluid = mask == FLUID
        self.has_fluid = bool(fluid.any())
        self.kin_j, self.kin_i = np.nonzero(kin)
        m = self.kin_j.size
        self._row_of = np.full(mask.shape, -1, dtype=np.int64)
        self._row_of[self.kin_j, self.kin_i] = np.arange(m)
        self.runs_kx = build_runs(kin)
        self.runs_ky = build_runs(kin.T)
        self._efx = np.empty((2 * self.runs_kx[0].shape[0], self.vgrid.K))
        self._efy = np.empty((2 * self.runs_ky[0].shape[0], self.vgrid.K))
        self.subx_rows, self.subx_line, self.subx_face = self._substitutions(
            self.runs_kx, self.grid.nx, self.bc.periodic_x, mask)
        self.suby_rows, self.suby_line, self.suby_face = self._substitutions(
            self.runs_ky, self.grid.ny, self.bc.periodic_y, mask.T)
        bw = self.thresholds.buffer_width
        buf_fluid = fluid & dilate(kin, bw, self.bc)
        buf_kin = kin & dilate(fluid, bw, self.bc)
        self.buff_j, self.buff_i = np.nonzero(buf_fluid)
        bkj, bki = np.nonzero(buf_kin)
        self.bufk_j, self.bufk_i = bkj, bki
        self.bufk_rows = self._row_of[bkj, bki]
        self.has_interface = self.buff_j.size > 0 or self.bufk_j.size > 0

    @staticmethod
    def _substitutions(runs, n, periodic, mask):
        line, face, nbr = run_end_faces(runs, n, periodic)
        sel = nbr >= 0
        idx = np.nonzero(sel)[0]
        if idx.size:
            idx = idx[mask[line[idx], nbr[idx]] == FLUID]
        rows = idx
        out_line = line[idx]
        out_face = face[idx]
        if periodic and idx.size:
            at0 = out_face == 0
            atn = out_face == n
            rows = np.concatenate([rows, rows[at0], rows[atn]])
            out_line = np.concatenate([out_line, out_line[at0], out_line[atn]])
            out_face = np.concatenate([out_face, np.full(at0.sum(), n, dtype=np.int64),
                                       np.zeros(atn.sum(), dtype=np.int64)])
        return rows, out_line, out_face

    # --- gather / scatter -------------------------------------------------------

    def gather(self, f: np.ndarray) -> np.ndarray:
        """Kinetic-cell slices as a dense (cells, K) block in mask order."""
        return np.ascontiguousarray(f[:, self.kin_j, self.kin_i].T)

    def scatter(self, fg: np.ndarray, f: np.ndarray):
        f[:, self.kin_j, self.kin_i] = fg.T

    def _project_rows(self, fg: np.ndarray, rows: np.ndarray) -> np.ndarray:
        return (fg[rows] @ self.W4).T * self.vgrid.dvol

    def project_all(self, f: np.ndarray, U: np.ndarray, fg: np.ndarray | None = None):
        """Write the moments of every kinetic cell into the conserved array."""
        if self.n_kinetic == 0:
            return
        if fg is None:
            fg = self.gather(f)
        U[:, self.kin_j, self.kin_i] = (fg @ self.W4).T * self.vgrid.dvol

    # --- stage coupling ---------------------------------------------------------

    def sync_buffers(self, f: np.ndarray, U: np.ndarray,
                     fg: np.ndarray | None = None):
        """Refresh both buffer images from the current stage fields."""
        if not self.has_interface:
            return
        if self.bufk_rows.size:
            if fg is None:
                fg = self.gather(f)
            U[:, self.bufk_j, self.bufk_i] = self._project_rows(fg, self.bufk_rows)
        if self.buff_j.size:
            prim = conserved_to_primitive(U[:, self.buff_j, self.buff_i],
                                          self.physics.gamma, where="buffer")
            lift = discrete_maxwellian(prim.rho, prim.ux, prim.uy, prim.T,
                                       self.vgrid)
            f[:, self.buff_j, self.buff_i] = lift.T

    def eval_operators(self, f: np.ndarray, U: np.ndarray, phys: PhysicsParams):
        """Transport divergence on kinetic cells and flux divergence on fluid cells.

        At faces separating the two regions the fluid divergence uses the
        moments of the kinetic face flux instead of the reconstructed Euler
        flux, so the pair of updates telescopes exactly.
        """
        Fx = Fy = None
        if self.has_fluid:
            Fx, Fy = euler_fluxes(U, self.grid, self.bc, phys.gamma,
                                  eps_w=phys.eps_w,
                                  linear=phys.linear_reconstruction,
                                  runs_x=self.runs_ex, runs_y=self.runs_ey,
                                  pads=self._padU)
        Lg = None
        if self.n_kinetic:
            rhs, efx, efy = kinetic_transport(
                f, self.grid, self.vgrid, self.bc, eps_w=phys.eps_w,
                linear=phys.linear_reconstruction, runs_x=self.runs_kx,
                runs_y=self.runs_ky, rhs=self._rhs, pads=self._padf,
                end_flux_x=self._efx, end_flux_y=self._efy)
            if Fx is not None and self.subx_rows.size:
                FM = (efx[self.subx_rows] @ self.W4) * self.vgrid.dvol
                Fx[:, self.subx_line, self.subx_face] = FM.T
            if Fy is not None and self.suby_rows.size:
                FM = (efy[self.suby_rows] @ self.W4) * self.vgrid.dvol
                Fy[:, self.suby_face, self.suby_line] = FM.T
            Lg = np.ascontiguousarray(rhs[:, self.kin_j, self.kin_i].T)
        Phi = flux_divergence(Fx, Fy, self.grid) if Fx is not None else None
        return Lg, Phi

    # --- regime switching ---------------------------------------------------------

    def update_regimes(self, f: np.ndarray, U: np.ndarray):
        """Relabel cells by the breakdown criteria and transfer their states.

        Fluid cells whose predicted realizability matrix leaves the eta band
        become kinetic (seeded with an equilibrium lift); kinetic cells whose
        matrix is inside the band and whose distribution sits within delta of
        its own equilibrium become fluid (keeping their moments).  Returns
        the pair of switch counts.
        """
        th = self.thresholds
        phys = self.physics
        dist = None
        if self.n_kinetic:
            fg = self.gather(f)
            self.project_all(f, U, fg=fg)
            rho, ux, uy, txx, txy, tyy = batch_moments(fg, self.vgrid)
            T = 0.5 * (txx + tyy)
            eq = discrete_maxwellian(rho, ux, uy, T, self.vgrid)
            dist = np.sum(np.abs(fg - eq), axis=1) * self.vgrid.dvol
        prim = conserved_to_primitive(U, phys.gamma, where="regime update")
        grads = compute_gradients(prim.ux, prim.uy, prim.T, self.grid, self.bc)
        tau = relaxation_time(prim.rho, phys.tau_model)
        dev = s1_deviation_field(grads, prim.T, phys.eps, phys.beta, tau,
                                 phys.constants_dim)
        to_kin = (self.mask == FLUID) & (dev > th.eta)
        n2k = int(np.count_nonzero(to_kin))
        n2f = 0
        new_mask = self.mask.copy()
        if n2k:
            jj, ii = np.nonzero(to_kin)
            pr = conserved_to_primitive(U[:, jj, ii], phys.gamma, where="relabel")
            lift = discrete_maxwellian(pr.rho, pr.ux, pr.uy, pr.T, self.vgrid)
            f[:, jj, ii] = lift.T
            new_mask[to_kin] = KINETIC
        if self.n_kinetic:
            devk = dev[self.kin_j, self.kin_i]
            back = (devk <= th.eta) & (dist <= th.delta)
            n2f = int(np.count_nonzero(back))
            if n2f:
                new_mask[self.kin_j[back], self.kin_i[back]] = FLUID
        if n2k or n2f:
            self.mask = new_mask
            self.refresh()
        return n2k, n2f
