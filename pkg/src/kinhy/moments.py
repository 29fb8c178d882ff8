"""Velocity-space moments, equilibria and the ES-BGK relaxation operator.

Two families of equilibrium evaluators live here.  ``maxwellian`` and
``anisotropic_gaussian`` are the plain pointwise formulas

    M(v) = rho / (2 pi T)^(d/2) * exp(-|v - u|^2 / (2 T))
    G(v) = rho / sqrt(det(2 pi Tt)) * exp(-(v-u)' Tt^-1 (v-u) / 2)

with Tt = (1 - beta) T I + beta Theta.  ``discrete_maxwellian`` and
``discrete_gaussian`` additionally adjust the Gaussian parameters by a short
fixed-point iteration until the *discrete* quadrature moments match the
requested ones to near machine precision.  The solver uses the discrete
variants everywhere state is exchanged between descriptions, which is what
makes lift/project round trips and collision invariants exact instead of
quadrature-limited.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from .errors import ClosureFailureError, VacuumCellError
from .mesh import VelocityGrid

MATCH_TOL = 5e-14
MATCH_MAXIT = 60


@dataclass
class MomentSet:
    """Macroscopic moments of a velocity slice.

    ``theta`` is the second central moment per unit density,
    Theta = (1/rho) sum (v-u)(v-u)' f dv^d, and T = trace(Theta) / d.
    """

    rho: float
    u: np.ndarray
    T: float
    E: float
    theta: np.ndarray


def compute_moments(f: np.ndarray, vgrid: VelocityGrid,
                    vacuum_threshold: float = 1e-12) -> MomentSet:
    """Quadrature moments of a single velocity slice ``f`` of shape (K,)."""
    f = np.asarray(f, dtype=np.float64)
    rho = float(np.sum(f)) * vgrid.dvol
    if rho <= vacuum_threshold:
        raise VacuumCellError(f"density {rho:.3e} below vacuum threshold")
    u = (f @ vgrid.nodes) * (vgrid.dvol / rho)
    c = vgrid.nodes - u
    theta = (c.T * f) @ c * (vgrid.dvol / rho)
    T = float(np.trace(theta)) / vgrid.d
    E = 0.5 * rho * float(u @ u) + 0.5 * vgrid.d * rho * T
    return MomentSet(rho=rho, u=u, T=T, E=E, theta=theta)


def maxwellian(rho: float, u, T: float, vgrid: VelocityGrid) -> np.ndarray:
    """Pointwise Maxwellian evaluated at the grid nodes."""
    if rho <= 0.0 or T <= 0.0:
        raise VacuumCellError(f"maxwellian needs rho > 0 and T > 0, got rho={rho}, T={T}")
    u = np.asarray(u, dtype=np.float64)
    c2 = np.sum((vgrid.nodes - u) ** 2, axis=1)
    return rho / (2.0 * np.pi * T) ** (vgrid.d / 2.0) * np.exp(-c2 / (2.0 * T))


def relaxation_tensor(theta: np.ndarray, T: float, beta: float) -> np.ndarray:
    """ES-BGK tensor Tt = (1 - beta) T I + beta Theta."""
    return (1.0 - beta) * T * np.eye(theta.shape[0]) + beta * theta


def anisotropic_gaussian(rho: float, u, theta: np.ndarray, T: float,
                         beta: float, vgrid: VelocityGrid) -> np.ndarray:
    """Pointwise anisotropic Gaussian with covariance (1-beta) T I + beta Theta."""
    tt = relaxation_tensor(np.asarray(theta, dtype=np.float64), T, beta)
    det = float(np.linalg.det(tt))
    tr = float(np.trace(tt))
    if det <= 0.0 or tr <= 0.0:
        raise ClosureFailureError("relaxation tensor not positive definite",
                                  det=det, trace=tr)
    c = vgrid.nodes - np.asarray(u, dtype=np.float64)
    quad = np.einsum("ki,ij,kj->k", c, np.linalg.inv(tt), c)
    norm = np.sqrt(det * (2.0 * np.pi) ** vgrid.d)
    return rho / norm * np.exp(-0.5 * quad)


def l1_velocity_distance(f: np.ndarray, g: np.ndarray, vgrid: VelocityGrid) -> float:
    """Discrete L1 distance in velocity space, sum |f - g| dv^d."""
    return float(np.sum(np.abs(np.asarray(f) - np.asarray(g)))) * vgrid.dvol


# --- moment-matched discrete equilibria -------------------------------------
#
# A discrete equilibrium is the exponential-family density exp(theta . phi)
# on the node set whose quadrature moments equal the targets exactly.  The
# parameters solve a smooth convex dual problem, so damped Newton converges
# globally whenever the targets are reachable on the grid; targets outside
# the grid's moment range (for example a temperature below the spacing of
# the innermost nodes) are reported as failures instead of being silently
# approximated.

@njit(cache=True, fastmath=True)
def _solve_sym(J, r, delta, n):
    # scaled Gaussian elimination with partial pivoting; returns 0, or 1 if
    # the (symmetric positive semi-definite) system is numerically singular
    A = np.empty((n, n))
    b = np.empty(n)
    s = np.empty(n)
    for i in range(n):
        d = J[i, i]
        s[i] = 1.0 / np.sqrt(d) if d > 0.0 else 1.0
    for i in range(n):
        b[i] = r[i] * s[i]
        for j in range(n):
            A[i, j] = J[i, j] * s[i] * s[j]
    for col in range(n):
        piv = col
        amax = abs(A[col, col])
        for i in range(col + 1, n):
            a = abs(A[i, col])
            if a > amax:
                amax = a
                piv = i
        if amax <= 1e-300:
            return 1
        if piv != col:
            for j in range(n):
                tmp = A[col, j]
                A[col, j] = A[piv, j]
                A[piv, j] = tmp
            tmp = b[col]
            b[col] = b[piv]
            b[piv] = tmp
        inv = 1.0 / A[col, col]
        for i in range(col + 1, n):
            fac = A[i, col] * inv
            if fac != 0.0:
                for j in range(col, n):
                    A[i, j] -= fac * A[col, j]
                b[i] -= fac * b[col]
    for i in range(n - 1, -1, -1):
        acc = b[i]
        for j in range(i + 1, n):
            acc -= A[i, j] * delta[j] / s[j]
        delta[i] = s[i] * acc / A[i, i]
    return 0


@njit(cache=True, fastmath=True)
def _dual_objective(th, M, vx, vy, dvol, n):
    # convex dual: dvol * sum exp(theta . phi) - M . theta (+inf on overflow)
    K = vx.shape[0]
    total = 0.0
    for k in range(K):
        a = th[0] + th[1] * vx[k] + th[2] * vy[k]
        if n == 4:
            a += th[3] * (vx[k] * vx[k] + vy[k] * vy[k])
        else:
            a += (th[3] * vx[k] * vx[k] + th[4] * vx[k] * vy[k]
                  + th[5] * vy[k] * vy[k])
        if a > 690.0:
            return np.inf
        total += np.exp(a)
    dot = 0.0
    for i in range(n):
        dot += M[i] * th[i]
    return total * dvol - dot


@njit(cache=True, fastmath=True)
def _match_newton(out, th, M, scl, vx, vy, dvol, tol, maxit, n):
    # damped Newton on the dual; fills out with the matched density and
    # returns the final scaled moment error
    K = vx.shape[0]
    m = np.empty(n)
    r = np.empty(n)
    J = np.empty((n, n))
    delta = np.empty(n)
    trial = np.empty(n)
    phi = np.empty(n)
    err = np.inf
    for _ in range(maxit):
        for i in range(n):
            m[i] = 0.0
            for j in range(n):
                J[i, j] = 0.0
        for k in range(K):
            x = vx[k]
            y = vy[k]
            phi[0] = 1.0
            phi[1] = x
            phi[2] = y
            if n == 4:
                phi[3] = x * x + y * y
            else:
                phi[3] = x * x
                phi[4] = x * y
                phi[5] = y * y
            a = 0.0
            for i in range(n):
                a += th[i] * phi[i]
            g = np.exp(a) if a <= 690.0 else np.exp(690.0)
            out[k] = g
            for i in range(n):
                m[i] += g * phi[i]
                for j in range(i, n):
                    J[i, j] += g * phi[i] * phi[j]
        err = 0.0
        for i in range(n):
            m[i] *= dvol
            r[i] = m[i] - M[i]
            e = abs(r[i]) / scl[i]
            if e > err:
                err = e
            for j in range(i, n):
                J[i, j] *= dvol
                J[j, i] = J[i, j]
        if err <= tol:
            return err
        if _solve_sym(J, r, delta, n):
            return err
        dot = 0.0
        slope = 0.0
        for i in range(n):
            dot += M[i] * th[i]
            slope -= r[i] * delta[i]
        obj = m[0] - dot
        # near convergence the predicted decrease sinks below the roundoff
        # of the objective itself; the slack keeps such steps acceptable
        slack = 4e-15 * (abs(m[0]) + abs(dot))
        t = 1.0
        accepted = False
        for _ in range(40):
            for i in range(n):
                trial[i] = th[i] - t * delta[i]
            val = _dual_objective(trial, M, vx, vy, dvol, n)
            if val <= obj + 1e-4 * t * slope + slack:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            return err
        for i in range(n):
            th[i] = trial[i]
    return err


@njit(cache=True, parallel=True)
def _mw_batch(out, flags, rho_t, ux_t, uy_t, T_t, vx, vy, dvol, tol, maxit):
    for c in prange(rho_t.shape[0]):
        rho = rho_t[c]
        ux = ux_t[c]
        uy = uy_t[c]
        T = T_t[c]
        M = np.empty(4)
        M[0] = rho
        M[1] = rho * ux
        M[2] = rho * uy
        M[3] = rho * (ux * ux + uy * uy + 2.0 * T)
        scl = np.empty(4)
        scl[0] = rho
        scl[1] = rho * np.sqrt(T) + abs(M[1])
        scl[2] = rho * np.sqrt(T) + abs(M[2])
        scl[3] = M[3]
        th = np.empty(4)
        th[3] = -0.5 / T
        th[1] = ux / T
        th[2] = uy / T
        th[0] = np.log(rho / (2.0 * np.pi * T)) - 0.5 * (ux * ux + uy * uy) / T
        err = _match_newton(out[c], th, M, scl, vx, vy, dvol, tol, maxit, 4)
        flags[c] = 0 if err <= 1e-12 else 2


@njit(cache=True, parallel=True)
def _gs_batch(out, flags, rho_t, ux_t, uy_t, txx_t, txy_t, tyy_t,
              vx, vy, dvol, tol, maxit):
    for c in prange(rho_t.shape[0]):
        rho = rho_t[c]
        ux = ux_t[c]
        uy = uy_t[c]
        txx = txx_t[c]
        txy = txy_t[c]
        tyy = tyy_t[c]
        det = txx * tyy - txy * txy
        if det <= 0.0 or txx <= 0.0 or tyy <= 0.0:
            flags[c] = 1
            continue
        ixx = tyy / det
        ixy = -txy / det
        iyy = txx / det
        M = np.empty(6)
        M[0] = rho
        M[1] = rho * ux
        M[2] = rho * uy
        M[3] = rho * (ux * ux + txx)
        M[4] = rho * (ux * uy + txy)
        M[5] = rho * (uy * uy + tyy)
        tbar = 0.5 * (txx + tyy)
        scl = np.empty(6)
        scl[0] = rho
        scl[1] = rho * np.sqrt(tbar) + abs(M[1])
        scl[2] = rho * np.sqrt(tbar) + abs(M[2])
        scl[3] = rho * tbar + abs(M[3])
        scl[4] = rho * tbar + abs(M[4])
        scl[5] = rho * tbar + abs(M[5])
        th = np.empty(6)
        bx = ixx * ux + ixy * uy
        by = ixy * ux + iyy * uy
        th[1] = bx
        th[2] = by
        th[3] = -0.5 * ixx
        th[4] = -ixy
        th[5] = -0.5 * iyy
        th[0] = (np.log(rho / (2.0 * np.pi * np.sqrt(det)))
                 - 0.5 * (ux * bx + uy * by))
        err = _match_newton(out[c], th, M, scl, vx, vy, dvol, tol, maxit, 6)
        flags[c] = 0 if err <= 1e-12 else 2


def discrete_maxwellian(rho, ux, uy, T, vgrid: VelocityGrid) -> np.ndarray:
    """Maxwellian(s) whose discrete (rho, u, T) moments match the inputs.

    Scalar inputs give one slice (K,); 1-d arrays of length m give (m, K).
    """
    if vgrid.d != 2:
        raise NotImplementedError("matched equilibria are implemented for d = 2")
    scalar = np.ndim(rho) == 0
    rho = np.atleast_1d(np.asarray(rho, dtype=np.float64))
    ux = np.atleast_1d(np.asarray(ux, dtype=np.float64))
    uy = np.atleast_1d(np.asarray(uy, dtype=np.float64))
    T = np.atleast_1d(np.asarray(T, dtype=np.float64))
    if np.any(rho <= 0.0) or np.any(T <= 0.0):
        raise VacuumCellError("discrete_maxwellian needs rho > 0 and T > 0")
    out = np.empty((rho.shape[0], vgrid.K))
    flags = np.zeros(rho.shape[0], dtype=np.int64)
    _mw_batch(out, flags, rho, ux, uy, T, vgrid.vx, vgrid.vy, vgrid.dvol,
              MATCH_TOL, MATCH_MAXIT)
    if flags.any():
        c = int(np.argmax(flags))
        raise ClosureFailureError(
            "discrete equilibrium match failed; the velocity grid cannot "
            f"represent rho={rho[c]:.3g}, T={T[c]:.3g} "
            f"(|u|={np.hypot(ux[c], uy[c]):.3g})",
            det=float(T[c] ** 2), trace=float(2.0 * T[c]))
    return out[0] if scalar else out


def discrete_gaussian(rho, ux, uy, txx, txy, tyy, vgrid: VelocityGrid) -> np.ndarray:
    """Gaussian(s) whose discrete (rho, u, Theta) moments match the inputs."""
    if vgrid.d != 2:
        raise NotImplementedError("matched equilibria are implemented for d = 2")
    scalar = np.ndim(rho) == 0
    args = [np.atleast_1d(np.asarray(a, dtype=np.float64))
            for a in (rho, ux, uy, txx, txy, tyy)]
    rho = args[0]
    out = np.empty((rho.shape[0], vgrid.K))
    flags = np.zeros(rho.shape[0], dtype=np.int64)
    _gs_batch(out, flags, *args, vgrid.vx, vgrid.vy, vgrid.dvol,
              MATCH_TOL, MATCH_MAXIT)
    if flags.any():
        c = int(np.argmax(flags))
        det = args[3][c] * args[5][c] - args[4][c] ** 2
        trace = args[3][c] + args[5][c]
        if flags[c] == 1:
            raise ClosureFailureError("relaxation tensor not positive definite",
                                      det=float(det), trace=float(trace))
        raise ClosureFailureError(
            "discrete anisotropic equilibrium match failed; the velocity "
            "grid cannot represent the requested second moments",
            det=float(det), trace=float(trace))
    return out[0] if scalar else out


def esbgk_collision(f: np.ndarray, beta: float, tau: float, eps: float,
                    vgrid: VelocityGrid) -> np.ndarray:
    """ES-BGK relaxation (tau / eps) (G[f] - f) for a single velocity slice.

    G[f] is the moment-matched discrete Gaussian of f, so the discrete mass,
    momentum and energy moments of the output vanish to machine precision.
    """
    m = compute_moments(f, vgrid)
    tt = relaxation_tensor(m.theta, m.T, beta)
    G = discrete_gaussian(m.rho, m.u[0], m.u[1], tt[0, 0], tt[0, 1], tt[1, 1], vgrid)
    return (tau / eps) * (G - f)


def conserved_weights(vgrid: VelocityGrid) -> np.ndarray:
    """Node weights (K, 4) mapping f to (rho, rho ux, rho uy, E) via f @ W * dvol."""
    w = getattr(vgrid, "_w4", None)
    if w is None:
        v2 = vgrid.speed_squared()
        w = np.stack([np.ones(vgrid.K), vgrid.vx, vgrid.vy, 0.5 * v2], axis=1)
        vgrid._w4 = w
    return w


def relaxation_time(rho, model: str = "density"):
    """Collision frequency prefactor tau per cell.

    ``density`` scales the relaxation rate with the local density (the
    default); ``constant`` uses tau = 1 everywhere.
    """
    rho = np.asarray(rho, dtype=np.float64)
    if model == "density":
        return rho.copy()
    if model == "constant":
        return np.ones_like(rho)
    raise ValueError(f"unknown relaxation time model {model!r}")


def second_moment_weights(vgrid: VelocityGrid) -> np.ndarray:
    """Node weights (K, 6) for (rho, rho ux, rho uy, P2xx, P2xy, P2yy) GEMMs."""
    w = getattr(vgrid, "_w6", None)
    if w is None:
        vx, vy = vgrid.vx, vgrid.vy
        w = np.stack([np.ones(vgrid.K), vx, vy, vx * vx, vx * vy, vy * vy], axis=1)
        vgrid._w6 = w
    return w


def batch_moments(fcells: np.ndarray, vgrid: VelocityGrid,
                  vacuum_threshold: float = 1e-12):
    """Moments of a batch of distributions laid out as (cells, K).

    Returns (rho, ux, uy, txx, txy, tyy) arrays; temperature is
    (txx + tyy) / 2 and total energy 0.5 rho |u|^2 + rho T for d = 2.
    """
    S = fcells @ second_moment_weights(vgrid) * vgrid.dvol
    rho = S[:, 0]
    if np.any(rho <= vacuum_threshold):
        c = int(np.argmin(rho))
        raise VacuumCellError(f"density {rho[c]} below vacuum threshold", (c,))
    ux = S[:, 1] / rho
    uy = S[:, 2] / rho
    txx = S[:, 3] / rho - ux * ux
    txy = S[:, 4] / rho - ux * uy
    tyy = S[:, 5] / rho - uy * uy
    return rho, ux, uy, txx, txy, tyy
