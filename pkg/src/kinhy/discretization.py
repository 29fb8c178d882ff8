"""Finite-volume spatial discretization shared by both descriptions.

Both the Euler system and the kinetic transport use the same machinery:
dimension-by-dimension CWENO3 reconstruction of cell averages to faces and a
local Lax-Friedrichs numerical flux.  For the kinetic equation the advection
speed per velocity node is known exactly, so the flux reduces to upwinding
with lambda = |v . n|; for Euler the face speed is the local max of
|u . n| + sqrt(gamma T) over the two reconstructed states.

Sweeps operate on "runs": maximal contiguous spans of cells in a row (or
column) for which face fluxes are required.  Ghost values at domain
boundaries come from padded arrays (periodic or zero-gradient); obstacle
cells are never read directly, a specular mirror image of the facing cell is
used instead.  Kernels additionally record the per-node fluxes at the two end
faces of every kinetic run; their moments provide the exact coupling fluxes
for neighbouring fluid cells, which is what makes the hybrid scheme conserve.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .errors import ConfigError, NonPhysicalStateError
from .mesh import OBSTACLE, SpatialGrid, VelocityGrid

EPS_W = 1e-6  # CWENO weight regularization
D_L, D_R, D_C = 0.25, 0.25, 0.5  # linear weights
GHOST = 2

_BC_NAMES = ("periodic", "zero_gradient")


@dataclass(frozen=True)
class BoundarySpec:
    """Outer boundary condition per side; periodic sides must come in pairs."""

    left: str = "periodic"
    right: str = "periodic"
    bottom: str = "periodic"
    top: str = "periodic"

    def __post_init__(self):
        for side in (self.left, self.right, self.bottom, self.top):
            if side not in _BC_NAMES:
                raise ConfigError(f"unknown boundary condition {side!r}")
        if (self.left == "periodic") != (self.right == "periodic"):
            raise ConfigError("periodic boundaries must pair left with right")
        if (self.bottom == "periodic") != (self.top == "periodic"):
            raise ConfigError("periodic boundaries must pair bottom with top")

    @property
    def periodic_x(self) -> bool:
        return self.left == "periodic"

    @property
    def periodic_y(self) -> bool:
        return self.bottom == "periodic"


def apply_boundary_ghosts(field: np.ndarray, bc: BoundarySpec,
                          width: int = GHOST, out: np.ndarray | None = None) -> np.ndarray:
    """Pad the trailing two axes of ``field`` with ``width`` ghost layers.

    Periodic sides wrap; zero-gradient sides copy the nearest interior cell.
    Works for (ny, nx) and (C, ny, nx) arrays.
    """
    squeeze = field.ndim == 2
    if squeeze:
        field = field[None]
    C, ny, nx = field.shape
    w = width
    if out is None:
        out = np.empty((C, ny + 2 * w, nx + 2 * w), dtype=field.dtype)
    out[:, w:ny + w, w:nx + w] = field
    if bc.periodic_x:
        out[:, w:ny + w, :w] = field[:, :, nx - w:]
        out[:, w:ny + w, nx + w:] = field[:, :, :w]
    else:
        out[:, w:ny + w, :w] = field[:, :, :1]
        out[:, w:ny + w, nx + w:] = field[:, :, nx - 1:]
    if bc.periodic_y:
        out[:, :w, :] = out[:, ny:ny + w, :]
        out[:, ny + w:, :] = out[:, w:2 * w, :]
    else:
        out[:, :w, :] = out[:, w:w + 1, :]
        out[:, ny + w:, :] = out[:, ny + w - 1:ny + w, :]
    return out[0] if squeeze else out


def cweno3_reconstruct(um, u0, up, eps_w: float = EPS_W, linear: bool = False):
    """CWENO3 face values of the middle cell from three cell averages.

    Returns (left, right), the reconstruction evaluated at the left and right
    faces of the cell holding ``u0``.  The reconstruction blends the two
    one-sided linear polynomials with a central parabola; ``linear=True``
    replaces the nonlinear weights with the linear ones (debug mode).
    """
    um = np.asarray(um, dtype=np.float64)
    u0 = np.asarray(u0, dtype=np.float64)
    up = np.asarray(up, dtype=np.float64)
    dl = u0 - um
    dr = up - u0
    d2 = dr - dl
    if linear:
        wl = np.full(np.broadcast(um, u0, up).shape, D_L)
        wr = np.full_like(wl, D_R)
        wc = np.full_like(wl, D_C)
    else:
        is_l = dl * dl
        is_r = dr * dr
        is_c = (13.0 / 3.0) * d2 * d2 + 0.25 * (up - um) ** 2
        al = D_L / (eps_w + is_l) ** 2
        ar = D_R / (eps_w + is_r) ** 2
        ac = D_C / (eps_w + is_c) ** 2
        s = al + ar + ac
        wl, wr, wc = al / s, ar / s, ac / s
    b0 = u0 - d2 / 12.0
    b1 = 0.5 * (up - um)
    b2 = d2
    left = wl * (u0 - 0.5 * dl) + wr * (u0 - 0.5 * dr) + wc * (b0 - 0.5 * b1 + 0.25 * b2)
    right = wl * (u0 + 0.5 * dl) + wr * (u0 + 0.5 * dr) + wc * (b0 + 0.5 * b1 + 0.25 * b2)
    return left, right


def lax_friedrichs_flux(FL, FR, qL, qR, lam):
    """Local Lax-Friedrichs flux 0.5 (FL + FR) - 0.5 lam (qR - qL)."""
    return 0.5 * (np.asarray(FL) + np.asarray(FR)) - 0.5 * lam * (np.asarray(qR) - np.asarray(qL))


# --- run bookkeeping ---------------------------------------------------------

def build_runs(active: np.ndarray):
    """CSR-style maximal runs of True cells along the last axis.

    Returns (line, a, b) int64 arrays: for each run, the line (row) index and
    the inclusive start/end column.  For column-direction runs pass
    ``active.T`` and read ``line`` as the column index.
    """
    act = np.asarray(active, dtype=bool)
    padded = np.zeros((act.shape[0], act.shape[1] + 2), dtype=np.int8)
    padded[:, 1:-1] = act
    d = np.diff(padded, axis=1)
    lines, starts = np.nonzero(d == 1)
    _, stops = np.nonzero(d == -1)
    return (lines.astype(np.int64), starts.astype(np.int64),
            (stops - 1).astype(np.int64))


# --- numba kernels -----------------------------------------------------------

@njit(cache=True, fastmath=True, inline="always")
def _cweno_lr(um, u0, up, ew, lin):
    dl = u0 - um
    dr = up - u0
    d2 = dr - dl
    if lin:
        wl = 0.25
        wr = 0.25
        wc = 0.5
    else:
        isl = dl * dl
        isr = dr * dr
        s1 = up - um
        isc = (13.0 / 3.0) * d2 * d2 + 0.25 * s1 * s1
        al = 0.25 / ((ew + isl) * (ew + isl))
        ar = 0.25 / ((ew + isr) * (ew + isr))
        ac = 0.5 / ((ew + isc) * (ew + isc))
        s = al + ar + ac
        wl = al / s
        wr = ar / s
        wc = ac / s
    b0 = u0 - d2 / 12.0
    b1 = 0.5 * (up - um)
    b2 = d2
    left = wl * (u0 - 0.5 * dl) + wr * (u0 - 0.5 * dr) + wc * (b0 - 0.5 * b1 + 0.25 * b2)
    right = wl * (u0 + 0.5 * dl) + wr * (u0 + 0.5 * dr) + wc * (b0 + 0.5 * b1 + 0.25 * b2)
    return left, right


@njit(cache=True, fastmath=True, inline="always")
def _kin_face_flux(v, q0, q1, q2, q3, ew, lin):
    _, qL = _cweno_lr(q0, q1, q2, ew, lin)
    qR, _ = _cweno_lr(q1, q2, q3, ew, lin)
    if v >= 0.0:
        return v * qL
    return v * qR


@njit(cache=True, inline="always")
def _mirror_index(obst_line, t, fidx, n):
    """Mirror cell index for an obstacle cell t read through face fidx."""
    if t < fidx:
        w = t + 1
        while w < n and obst_line[w] != 0:
            w += 1
        tm = 2 * w - 1 - t
    else:
        w = t - 1
        while w >= 0 and obst_line[w] != 0:
            w -= 1
        tm = 2 * w + 1 - t
    if tm < 0:
        tm = 0
    elif tm >= n:
        tm = n - 1
    if obst_line[tm] != 0:
        tm = w
    return tm


@njit(cache=True, fastmath=True, inline="always")
def _fetch_kin_x(fp, obst, k, km, jp, j, t, fidx, nx):
    if t < 0 or t >= nx:
        return fp[k, jp, t + 2]
    if obst[j, t] == 0:
        return fp[k, jp, t + 2]
    tm = _mirror_index(obst[j], t, fidx, nx)
    return fp[km, jp, tm + 2]


@njit(cache=True, fastmath=True, inline="always")
def _fetch_kin_y(fp, obst, k, km, ip, i, t, fidx, ny):
    if t < 0 or t >= ny:
        return fp[k, t + 2, ip]
    if obst[t, i] == 0:
        return fp[k, t + 2, ip]
    tm = _mirror_index(obst[:, i], t, fidx, ny)
    return fp[km, tm + 2, ip]


@njit(cache=True, parallel=True, fastmath=True)
def _kin_rhs_x(fp, rhs, vxn, mirx, obst, run_j, run_a, run_b,
               dx, ew, lin, end_flux):
    K = vxn.shape[0]
    nx = rhs.shape[2]
    nr = run_j.shape[0]
    for k in prange(K):
        v = vxn[k]
        km = mirx[k]
        for r in range(nr):
            j = run_j[r]
            a = run_a[r]
            b = run_b[r]
            jp = j + 2
            prev = 0.0
            for m in range(b - a + 2):
                fidx = a + m
                q0 = _fetch_kin_x(fp, obst, k, km, jp, j, fidx - 2, fidx, nx)
                q1 = _fetch_kin_x(fp, obst, k, km, jp, j, fidx - 1, fidx, nx)
                q2 = _fetch_kin_x(fp, obst, k, km, jp, j, fidx, fidx, nx)
                q3 = _fetch_kin_x(fp, obst, k, km, jp, j, fidx + 1, fidx, nx)
                fl = _kin_face_flux(v, q0, q1, q2, q3, ew, lin)
                if m == 0:
                    end_flux[2 * r, k] = fl
                else:
                    rhs[k, j, fidx - 1] += (fl - prev) / dx
                prev = fl
            end_flux[2 * r + 1, k] = prev


@njit(cache=True, parallel=True, fastmath=True)
def _kin_rhs_y(fp, rhs, vyn, miry, obst, run_i, run_a, run_b,
               dy, ew, lin, end_flux):
    K = vyn.shape[0]
    ny = rhs.shape[1]
    nr = run_i.shape[0]
    for k in prange(K):
        v = vyn[k]
        km = miry[k]
        for r in range(nr):
            i = run_i[r]
            a = run_a[r]
            b = run_b[r]
            ip = i + 2
            prev = 0.0
            for m in range(b - a + 2):
                fidx = a + m
                q0 = _fetch_kin_y(fp, obst, k, km, ip, i, fidx - 2, fidx, ny)
                q1 = _fetch_kin_y(fp, obst, k, km, ip, i, fidx - 1, fidx, ny)
                q2 = _fetch_kin_y(fp, obst, k, km, ip, i, fidx, fidx, ny)
                q3 = _fetch_kin_y(fp, obst, k, km, ip, i, fidx + 1, fidx, ny)
                fl = _kin_face_flux(v, q0, q1, q2, q3, ew, lin)
                if m == 0:
                    end_flux[2 * r, k] = fl
                else:
                    rhs[k, fidx - 1, i] += (fl - prev) / dy
                prev = fl
            end_flux[2 * r + 1, k] = prev


@njit(cache=True, fastmath=True, inline="always")
def _fetch_euler_x(Up, obst, jp, j, t, fidx, nx):
    if 0 <= t < nx and obst[j, t] != 0:
        tm = _mirror_index(obst[j], t, fidx, nx)
        return (Up[0, jp, tm + 2], -Up[1, jp, tm + 2],
                Up[2, jp, tm + 2], Up[3, jp, tm + 2])
    return (Up[0, jp, t + 2], Up[1, jp, t + 2],
            Up[2, jp, t + 2], Up[3, jp, t + 2])


@njit(cache=True, fastmath=True, inline="always")
def _fetch_euler_y(Up, obst, ip, i, t, fidx, ny):
    if 0 <= t < ny and obst[t, i] != 0:
        tm = _mirror_index(obst[:, i], t, fidx, ny)
        return (Up[0, tm + 2, ip], Up[1, tm + 2, ip],
                -Up[2, tm + 2, ip], Up[3, tm + 2, ip])
    return (Up[0, t + 2, ip], Up[1, t + 2, ip],
            Up[2, t + 2, ip], Up[3, t + 2, ip])


@njit(cache=True, fastmath=True, inline="always")
def _euler_lf(q0, q1, q2, q3, gamma, ew, lin, normal):
    # componentwise reconstruction of the two interface states; a side whose
    # reconstructed state loses positivity falls back to its cell average
    # (first order at that face), and only a non-physical cell average fails
    qL = np.empty(4)
    qR = np.empty(4)
    for c in range(4):
        _, lv = _cweno_lr(q0[c], q1[c], q2[c], ew, lin)
        rv, _ = _cweno_lr(q1[c], q2[c], q3[c], ew, lin)
        qL[c] = lv
        qR[c] = rv
    if qL[0] <= 0.0 or ((gamma - 1.0)
                        * (qL[3] - 0.5 * (qL[1] * qL[1] + qL[2] * qL[2]) / qL[0])) <= 0.0:
        for c in range(4):
            qL[c] = q1[c]
    if qR[0] <= 0.0 or ((gamma - 1.0)
                        * (qR[3] - 0.5 * (qR[1] * qR[1] + qR[2] * qR[2]) / qR[0])) <= 0.0:
        for c in range(4):
            qR[c] = q2[c]
    rhoL = qL[0]
    rhoR = qR[0]
    if rhoL <= 0.0 or rhoR <= 0.0:
        return qL, 0.0, 0.0, 0.0, 0.0, False
    uxL = qL[1] / rhoL
    uyL = qL[2] / rhoL
    uxR = qR[1] / rhoR
    uyR = qR[2] / rhoR
    PL = (gamma - 1.0) * (qL[3] - 0.5 * rhoL * (uxL * uxL + uyL * uyL))
    PR = (gamma - 1.0) * (qR[3] - 0.5 * rhoR * (uxR * uxR + uyR * uyR))
    if PL <= 0.0 or PR <= 0.0:
        return qL, 0.0, 0.0, 0.0, 0.0, False
    if normal == 0:
        unL, unR = uxL, uxR
    else:
        unL, unR = uyL, uyR
    sL = abs(unL) + np.sqrt(gamma * PL / rhoL)
    sR = abs(unR) + np.sqrt(gamma * PR / rhoR)
    lam = sL if sL > sR else sR
    if normal == 0:
        f0 = 0.5 * (rhoL * uxL + rhoR * uxR)
        f1 = 0.5 * (rhoL * uxL * uxL + PL + rhoR * uxR * uxR + PR)
        f2 = 0.5 * (rhoL * uxL * uyL + rhoR * uxR * uyR)
        f3 = 0.5 * (uxL * (qL[3] + PL) + uxR * (qR[3] + PR))
    else:
        f0 = 0.5 * (rhoL * uyL + rhoR * uyR)
        f1 = 0.5 * (rhoL * uxL * uyL + rhoR * uxR * uyR)
        f2 = 0.5 * (rhoL * uyL * uyL + PL + rhoR * uyR * uyR + PR)
        f3 = 0.5 * (uyL * (qL[3] + PL) + uyR * (qR[3] + PR))
    h = 0.5 * lam
    return (qL,
            f0 - h * (qR[0] - qL[0]),
            f1 - h * (qR[1] - qL[1]),
            f2 - h * (qR[2] - qL[2]),
            f3 - h * (qR[3] - qL[3]),
            True)


@njit(cache=True, parallel=True, fastmath=True)
def _euler_flux_x(Up, Fx, obst, run_j, run_a, run_b, gamma, ew, lin, bad):
    nx = Fx.shape[2] - 1
    for r in prange(run_j.shape[0]):
        j = run_j[r]
        a = run_a[r]
        b = run_b[r]
        jp = j + 2
        for fidx in range(a, b + 2):
            q0 = _fetch_euler_x(Up, obst, jp, j, fidx - 2, fidx, nx)
            q1 = _fetch_euler_x(Up, obst, jp, j, fidx - 1, fidx, nx)
            q2 = _fetch_euler_x(Up, obst, jp, j, fidx, fidx, nx)
            q3 = _fetch_euler_x(Up, obst, jp, j, fidx + 1, fidx, nx)
            _, f0, f1, f2, f3, ok = _euler_lf(q0, q1, q2, q3, gamma, ew, lin, 0)
            if not ok:
                bad[0] = 1
                bad[1] = j
                bad[2] = fidx
            Fx[0, j, fidx] = f0
            Fx[1, j, fidx] = f1
            Fx[2, j, fidx] = f2
            Fx[3, j, fidx] = f3


@njit(cache=True, parallel=True, fastmath=True)
def _euler_flux_y(Up, Fy, obst, run_i, run_a, run_b, gamma, ew, lin, bad):
    ny = Fy.shape[1] - 1
    for r in prange(run_i.shape[0]):
        i = run_i[r]
        a = run_a[r]
        b = run_b[r]
        ip = i + 2
        for fidx in range(a, b + 2):
            q0 = _fetch_euler_y(Up, obst, ip, i, fidx - 2, fidx, ny)
            q1 = _fetch_euler_y(Up, obst, ip, i, fidx - 1, fidx, ny)
            q2 = _fetch_euler_y(Up, obst, ip, i, fidx, fidx, ny)
            q3 = _fetch_euler_y(Up, obst, ip, i, fidx + 1, fidx, ny)
            _, f0, f1, f2, f3, ok = _euler_lf(q0, q1, q2, q3, gamma, ew, lin, 1)
            if not ok:
                bad[0] = 1
                bad[1] = i
                bad[2] = fidx
            Fy[0, fidx, i] = f0
            Fy[1, fidx, i] = f1
            Fy[2, fidx, i] = f2
            Fy[3, fidx, i] = f3


# --- public operators ---------------------------------------------------------

def euler_fluxes(U: np.ndarray, grid: SpatialGrid, bc: BoundarySpec, gamma: float,
                 eps_w: float = EPS_W, linear: bool = False,
                 runs_x=None, runs_y=None, pads=None):
    """Face flux arrays Fx (4, ny, nx+1) and Fy (4, ny+1, nx)."""
    ny, nx = grid.ny, grid.nx
    obst = grid.obstacle
    if runs_x is None:
        runs_x = build_runs(obst == 0)
    if runs_y is None:
        runs_y = build_runs(obst.T == 0)
    Up = apply_boundary_ghosts(U, bc, out=pads)
    Fx = np.zeros((4, ny, nx + 1))
    Fy = np.zeros((4, ny + 1, nx))
    bad = np.zeros(3, dtype=np.int64)
    _euler_flux_x(Up, Fx, obst, *runs_x, gamma, eps_w, linear, bad)
    if bad[0]:
        raise NonPhysicalStateError("non-physical reconstructed state",
                                    ("x", int(bad[1]), int(bad[2])))
    _euler_flux_y(Up, Fy, obst, *runs_y, gamma, eps_w, linear, bad)
    if bad[0]:
        raise NonPhysicalStateError("non-physical reconstructed state",
                                    ("y", int(bad[1]), int(bad[2])))
    return Fx, Fy


def flux_divergence(Fx: np.ndarray, Fy: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Divergence of face fluxes; zero on obstacle cells."""
    out = (Fx[:, :, 1:] - Fx[:, :, :-1]) / grid.dx
    out += (Fy[:, 1:, :] - Fy[:, :-1, :]) / grid.dy
    out[:, grid.obstacle != 0] = 0.0
    return out


def euler_rhs(U: np.ndarray, grid: SpatialGrid, bc: BoundarySpec, gamma: float,
              eps_w: float = EPS_W, linear: bool = False) -> np.ndarray:
    """Flux divergence Phi(U) such that dU/dt + Phi(U) = 0."""
    Fx, Fy = euler_fluxes(U, grid, bc, gamma, eps_w=eps_w, linear=linear)
    return flux_divergence(Fx, Fy, grid)


def kinetic_transport(f: np.ndarray, grid: SpatialGrid, vgrid: VelocityGrid,
                      bc: BoundarySpec, eps_w: float = EPS_W, linear: bool = False,
                      runs_x=None, runs_y=None, rhs=None, pads=None,
                      end_flux_x=None, end_flux_y=None):
    """Transport term L(f) = div_x(v f) for every velocity node.

    Returns (rhs, end_flux_x, end_flux_y): the divergence on the cells covered
    by the runs and the per-node fluxes captured at the end faces of every
    run (used for moment-consistent coupling at mixed faces).
    """
    obst = grid.obstacle
    if runs_x is None:
        runs_x = build_runs(obst == 0)
    if runs_y is None:
        runs_y = build_runs(obst.T == 0)
    fp = apply_boundary_ghosts(f, bc, out=pads)
    if rhs is None:
        rhs = np.zeros_like(f)
    else:
        rhs[:] = 0.0
    if end_flux_x is None:
        end_flux_x = np.empty((2 * runs_x[0].shape[0], vgrid.K))
    if end_flux_y is None:
        end_flux_y = np.empty((2 * runs_y[0].shape[0], vgrid.K))
    mirx = vgrid.mirror[0]
    miry = vgrid.mirror[1]
    _kin_rhs_x(fp, rhs, vgrid.vx, mirx, obst, *runs_x, grid.dx, eps_w, linear,
               end_flux_x)
    _kin_rhs_y(fp, rhs, vgrid.vy, miry, obst, *runs_y, grid.dy, eps_w, linear,
               end_flux_y)
    return rhs, end_flux_x, end_flux_y


def run_end_faces(runs, n: int, periodic: bool):
    """Neighbour cell index just beyond each run end, row per end_flux row.

    Returns (line, face, nbr) arrays of length 2R; ``nbr`` is -1 where the end
    face sits on a non-periodic domain boundary.
    """
    line_r, a, b = runs
    R = line_r.shape[0]
    line = np.repeat(line_r, 2)
    face = np.empty(2 * R, dtype=np.int64)
    nbr = np.empty(2 * R, dtype=np.int64)
    face[0::2] = a
    face[1::2] = b + 1
    left = a - 1
    right = b + 1
    if periodic:
        left = np.where(left < 0, n - 1, left)
        right = np.where(right > n - 1, 0, right)
    else:
        left = np.where(left < 0, -1, left)
        right = np.where(right > n - 1, -1, right)
    nbr[0::2] = left
    nbr[1::2] = right
    return line, face, nbr
