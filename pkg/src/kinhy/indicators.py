"""Regime indicators: realizability moments and the breakdown criterion.

The decision which description a cell needs rests on a small symmetric
matrix per cell.  On the kinetic side it is assembled from velocity moments
of the distribution against Sonine-type polynomials; on the fluid side a
first-order closure written in terms of the local velocity and temperature
gradients predicts the same matrix without kinetic data.  A cell is
considered out of (or back in) the fluid regime according to how far the
eigenvalues of that matrix sit from 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .discretization import BoundarySpec, apply_boundary_ghosts
from .errors import ContractViolationError, RealizabilityViolationError
from .mesh import SpatialGrid
from .moments import (MomentSet, VelocityGrid, compute_moments,
                      discrete_maxwellian, l1_velocity_distance)

_SYM_TOL = 1e-10


def heat_capacity_coeff(constants_dim: int) -> float:
    """Coefficient c0 = (d + 2) / 2 entering the heat flux closure."""
    return 0.5 * (constants_dim + 2)


@dataclass(frozen=True)
class SonineMoments:
    """Normalized moments of f against the Sonine-type polynomial basis."""

    abar: np.ndarray  # (d, d) traceless-by-construction second moment
    bbar: np.ndarray  # (d,) heat-flux-like moment
    cbar: float  # scalar energy-fluctuation moment
    base: MomentSet

    @property
    def d(self) -> int:
        return self.abar.shape[0]


def sonine_moments(f: np.ndarray, vgrid: VelocityGrid,
                   constants_dim: int | None = None) -> SonineMoments:
    """Moments of a single-cell distribution against the indicator basis.

    ``constants_dim`` overrides the dimension used inside the polynomial
    constants (the 1/d deviatoric factor and c0); by default it matches the
    velocity grid dimension.
    """
    base = compute_moments(f, vgrid)
    d = vgrid.d
    cd = vgrid.d if constants_dim is None else constants_dim
    c0 = heat_capacity_coeff(cd)
    T = base.T
    c = vgrid.nodes - base.u[None, :]
    c2 = np.sum(c * c, axis=1)
    w = f * (vgrid.dvol / base.rho)
    abar = (c.T * w) @ c / T - (np.sum(w * c2) / (cd * T)) * np.eye(d)
    s = c2 / (2.0 * T) - c0
    bbar = (w * s) @ c / np.sqrt(T)
    cbar = float(np.sum(w * s * s))
    return SonineMoments(abar=abar, bbar=bbar, cbar=cbar, base=base)


def realizability_matrix(sm: SonineMoments) -> np.ndarray:
    """Symmetric (d+2) x (d+2) block matrix built from the Sonine moments."""
    d = sm.d
    M = np.zeros((d + 2, d + 2))
    M[0, 0] = 1.0
    M[0, d + 1] = -1.0
    M[d + 1, 0] = -1.0
    M[1:d + 1, 1:d + 1] = np.eye(d) + sm.abar
    M[1:d + 1, d + 1] = sm.bbar
    M[d + 1, 1:d + 1] = sm.bbar
    M[d + 1, d + 1] = sm.cbar
    return M


def schur_reduce(sm: SonineMoments) -> np.ndarray:
    """Schur complement of the realizability matrix onto the velocity block.

    S = I + Abar - Bbar Bbar^T / (Cbar - 1).  Requires Cbar > 1; equality or
    smaller means the energy-fluctuation moment left the realizable set.
    """
    if sm.cbar <= 1.0:
        raise RealizabilityViolationError(
            f"energy fluctuation moment {sm.cbar} must exceed 1")
    return (np.eye(sm.d) + sm.abar
            - np.outer(sm.bbar, sm.bbar) / (sm.cbar - 1.0))


def eig_symmetric(A: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues of a symmetric 2x2 or 3x3 matrix, closed form."""
    A = np.asarray(A, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(A))))
    if float(np.max(np.abs(A - A.T))) > _SYM_TOL * scale:
        raise ContractViolationError("matrix is not symmetric")
    n = A.shape[0]
    if n == 2:
        m = 0.5 * (A[0, 0] + A[1, 1])
        r = np.hypot(0.5 * (A[0, 0] - A[1, 1]), 0.5 * (A[0, 1] + A[1, 0]))
        return np.array([m - r, m + r])
    if n == 3:
        p1 = A[0, 1] ** 2 + A[0, 2] ** 2 + A[1, 2] ** 2
        q = np.trace(A) / 3.0
        if p1 == 0.0:
            return np.sort(np.diag(A))
        p2 = np.sum((np.diag(A) - q) ** 2) + 2.0 * p1
        p = np.sqrt(p2 / 6.0)
        B = (A - q * np.eye(3)) / p
        r = np.clip(np.linalg.det(B) / 2.0, -1.0, 1.0)
        phi = np.arccos(r) / 3.0
        e1 = q + 2.0 * p * np.cos(phi)
        e3 = q + 2.0 * p * np.cos(phi + 2.0 * np.pi / 3.0)
        e2 = 3.0 * q - e1 - e3
        return np.sort(np.array([e1, e2, e3]))
    return np.linalg.eigvalsh(A)


# --- fluid-side predictor -----------------------------------------------------

@dataclass(frozen=True)
class Gradients:
    """Cell-centered first derivatives of (ux, uy, T)."""

    uxx: np.ndarray  # d ux / dx
    uxy: np.ndarray  # d ux / dy
    uyx: np.ndarray  # d uy / dx
    uyy: np.ndarray  # d uy / dy
    tx: np.ndarray  # d T / dx
    ty: np.ndarray  # d T / dy


def compute_gradients(ux: np.ndarray, uy: np.ndarray, T: np.ndarray,
                      grid: SpatialGrid, bc: BoundarySpec) -> Gradients:
    """Second-order gradients honouring boundary conditions and obstacles.

    Central differences everywhere; cells facing an obstacle fall back to a
    one-sided difference away from it (gradients on obstacle cells are zero).
    """
    pad = apply_boundary_ghosts(np.stack([ux, uy, T]), bc, width=1)
    inv2x = 0.5 / grid.dx
    inv2y = 0.5 / grid.dy
    ddx = (pad[:, 1:-1, 2:] - pad[:, 1:-1, :-2]) * inv2x
    ddy = (pad[:, 2:, 1:-1] - pad[:, :-2, 1:-1]) * inv2y
    obst = grid.obstacle != 0
    if obst.any():
        fields = (ux, uy, T)
        _fix_obstacle_gradients(ddx, fields, obst, grid.dx, axis=1)
        _fix_obstacle_gradients(ddy, fields, obst, grid.dy, axis=0)
        ddx[:, obst] = 0.0
        ddy[:, obst] = 0.0
    return Gradients(uxx=ddx[0], uyx=ddx[1], tx=ddx[2],
                     uxy=ddy[0], uyy=ddy[1], ty=ddy[2])


def _fix_obstacle_gradients(dd, fields, obst, h, axis):
    ny, nx = obst.shape
    n = nx if axis == 1 else ny
    blocked_hi = np.zeros_like(obst)
    blocked_lo = np.zeros_like(obst)
    if axis == 1:
        blocked_hi[:, :-1] = obst[:, 1:]
        blocked_lo[:, 1:] = obst[:, :-1]
    else:
        blocked_hi[:-1, :] = obst[1:, :]
        blocked_lo[1:, :] = obst[:-1, :]
    blocked_hi &= ~obst
    blocked_lo &= ~obst

    def clear(j, i, t):
        return 0 <= t < n and not (obst[j, t] if axis == 1 else obst[t, i])

    def val(q, j, i, t):
        return q[j, t] if axis == 1 else q[t, i]

    for j, i in np.argwhere(blocked_hi | blocked_lo):
        t0 = i if axis == 1 else j
        hi = blocked_hi[j, i]
        lo = blocked_lo[j, i]
        for c, q in enumerate(fields):
            if hi and lo:
                dd[c, j, i] = 0.0
            elif hi:  # one-sided toward smaller index
                if clear(j, i, t0 - 1) and clear(j, i, t0 - 2):
                    dd[c, j, i] = (3.0 * val(q, j, i, t0) - 4.0 * val(q, j, i, t0 - 1)
                                   + val(q, j, i, t0 - 2)) / (2.0 * h)
                elif clear(j, i, t0 - 1):
                    dd[c, j, i] = (val(q, j, i, t0) - val(q, j, i, t0 - 1)) / h
                else:
                    dd[c, j, i] = 0.0
            else:  # one-sided toward larger index
                if clear(j, i, t0 + 1) and clear(j, i, t0 + 2):
                    dd[c, j, i] = (-3.0 * val(q, j, i, t0) + 4.0 * val(q, j, i, t0 + 1)
                                   - val(q, j, i, t0 + 2)) / (2.0 * h)
                elif clear(j, i, t0 + 1):
                    dd[c, j, i] = (val(q, j, i, t0 + 1) - val(q, j, i, t0)) / h
                else:
                    dd[c, j, i] = 0.0


def s1_matrix(grad_u: np.ndarray, grad_T: np.ndarray, T: float, eps: float,
              beta: float, tau: float, constants_dim: int = 2) -> np.ndarray:
    """First-order prediction of the Schur matrix from macroscopic gradients.

    ``grad_u[a, b]`` holds the derivative of velocity component a along
    direction b; ``grad_T`` is the temperature gradient.
    """
    d = grad_u.shape[0]
    cd = constants_dim
    c0 = heat_capacity_coeff(cd)
    D = grad_u + grad_u.T - (2.0 / cd) * np.trace(grad_u) * np.eye(d)
    visc = eps / ((1.0 - beta) * tau)
    heat = eps * c0 / (tau * np.sqrt(T))
    return (np.eye(d) - visc * D
            - (2.0 / cd) * heat * heat * np.outer(grad_T, grad_T))


def s1_deviation_field(grads: Gradients, T: np.ndarray, eps: float, beta: float,
                       tau: np.ndarray, constants_dim: int = 2) -> np.ndarray:
    """max_lambda |lambda - 1| of the predicted Schur matrix, per cell."""
    cd = constants_dim
    c0 = heat_capacity_coeff(cd)
    div = grads.uxx + grads.uyy
    visc = eps / ((1.0 - beta) * tau)
    heat2 = (eps * c0) ** 2 / (tau * tau * T)
    dxx = 2.0 * grads.uxx - (2.0 / cd) * div
    dyy = 2.0 * grads.uyy - (2.0 / cd) * div
    dxy = grads.uxy + grads.uyx
    s11 = 1.0 - visc * dxx - (2.0 / cd) * heat2 * grads.tx ** 2
    s22 = 1.0 - visc * dyy - (2.0 / cd) * heat2 * grads.ty ** 2
    s12 = -visc * dxy - (2.0 / cd) * heat2 * grads.tx * grads.ty
    m = 0.5 * (s11 + s22)
    r = np.hypot(0.5 * (s11 - s22), s12)
    return np.abs(m - 1.0) + r


def eigen_deviation(S: np.ndarray) -> float:
    """max_lambda |lambda - 1| for a small symmetric matrix."""
    return float(np.max(np.abs(eig_symmetric(S) - 1.0)))


def fluid_breakdown(S1: np.ndarray, eta: float) -> bool:
    """True when some eigenvalue of the predicted matrix leaves the eta band."""
    return eigen_deviation(S1) > eta


def kinetic_relabel_ok(S1: np.ndarray, f: np.ndarray, vgrid: VelocityGrid,
                       eta: float, delta: float) -> bool:
    """True when a kinetic cell may return to the fluid description.

    Requires all eigenvalues within the eta band and the distribution within
    delta (velocity-space L1) of the Maxwellian sharing its moments.
    """
    if eigen_deviation(S1) > eta:
        return False
    m = compute_moments(f, vgrid)
    M = discrete_maxwellian(m.rho, m.u[0], m.u[1], m.T, vgrid)
    return l1_velocity_distance(f, M, vgrid) <= delta
