"""Exact solution of the one-dimensional Euler Riemann problem.

Used as the reference profile for the shock tube scenario.  The star-region
pressure is found by Newton iteration on the standard pressure function
(shock branch from the Rankine-Hugoniot conditions, rarefaction branch from
the isentropic relations); the solution is then sampled along rays
xi = x / t through the wave fan.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPhysicalStateError

_NEWTON_TOL = 1e-12
_NEWTON_MAXIT = 100


@dataclass(frozen=True)
class RiemannSolution:
    """Self-similar solution; ``sample`` evaluates primitives at xi = x/t."""

    rho_l: float
    u_l: float
    p_l: float
    rho_r: float
    u_r: float
    p_r: float
    gamma: float
    p_star: float
    u_star: float
    residual: float

    @property
    def left_wave(self) -> str:
        return "shock" if self.p_star > self.p_l else "rarefaction"

    @property
    def right_wave(self) -> str:
        return "shock" if self.p_star > self.p_r else "rarefaction"

    def sample(self, xi):
        """Primitive state (rho, u, p) on rays xi = x/t (vectorized)."""
        xi = np.asarray(xi, dtype=np.float64)
        g = self.gamma
        gm, gp = g - 1.0, g + 1.0
        ps, us = self.p_star, self.u_star
        rho = np.empty_like(xi)
        u = np.empty_like(xi)
        p = np.empty_like(xi)

        left = xi <= us
        for side, sel in (("L", left), ("R", ~left)):
            if side == "L":
                rk, uk, pk, sgn = self.rho_l, self.u_l, self.p_l, 1.0
            else:
                rk, uk, pk, sgn = self.rho_r, self.u_r, self.p_r, -1.0
            ak = np.sqrt(g * pk / rk)
            pr = ps / pk
            if ps > pk:  # shock
                rho_star = rk * (pr + gm / gp) / (gm / gp * pr + 1.0)
                s = uk - sgn * ak * np.sqrt(gp / (2.0 * g) * pr + gm / (2.0 * g))
                out = sgn * (xi - s) < 0.0
                inside = sel & ~out
                rho[sel & out] = rk
                u[sel & out] = uk
                p[sel & out] = pk
                rho[inside] = rho_star
                u[inside] = us
                p[inside] = ps
            else:  # rarefaction
                rho_star = rk * pr ** (1.0 / g)
                a_star = ak * pr ** (gm / (2.0 * g))
                head = uk - sgn * ak
                tail = us - sgn * a_star
                out = sgn * (xi - head) < 0.0
                fan = ~out & (sgn * (xi - tail) < 0.0)
                star = sel & ~out & ~fan
                rho[sel & out] = rk
                u[sel & out] = uk
                p[sel & out] = pk
                z = sel & fan
                if np.any(z):
                    af = (2.0 / gp) * (ak + sgn * gm / 2.0 * (uk - xi[z]))
                    uf = (2.0 / gp) * (sgn * ak + gm / 2.0 * uk + xi[z])
                    rho[z] = rk * (af / ak) ** (2.0 / gm)
                    u[z] = uf
                    p[z] = pk * (af / ak) ** (2.0 * g / gm)
                rho[star] = rho_star
                u[star] = us
                p[star] = ps
        return rho, u, p


def _pressure_fn(p, rk, pk, ak, g):
    gm, gp = g - 1.0, g + 1.0
    if p > pk:  # shock branch
        A = 2.0 / (gp * rk)
        B = gm / gp * pk
        root = np.sqrt(A / (p + B))
        f = (p - pk) * root
        df = root * (1.0 - 0.5 * (p - pk) / (p + B))
    else:  # rarefaction branch
        pr = p / pk
        f = 2.0 * ak / gm * (pr ** (gm / (2.0 * g)) - 1.0)
        df = 1.0 / (rk * ak) * pr ** (-gp / (2.0 * g))
    return f, df


def solve_riemann(left, right, gamma: float) -> RiemannSolution:
    """Exact Riemann solution for primitive states (rho, u, p) left/right."""
    rho_l, u_l, p_l = (float(v) for v in left)
    rho_r, u_r, p_r = (float(v) for v in right)
    if min(rho_l, rho_r, p_l, p_r) <= 0.0:
        raise NonPhysicalStateError("Riemann states must have positive rho and p")
    g = gamma
    gm = g - 1.0
    a_l = np.sqrt(g * p_l / rho_l)
    a_r = np.sqrt(g * p_r / rho_r)
    if 2.0 * (a_l + a_r) / gm <= u_r - u_l:
        raise NonPhysicalStateError("states separate into vacuum")

    # linearized (primitive-variable) initial guess, floored away from zero
    p0 = 0.5 * (p_l + p_r) - 0.125 * (u_r - u_l) * (rho_l + rho_r) * (a_l + a_r)
    p = max(p0, 1e-8 * min(p_l, p_r))
    res = np.inf
    for _ in range(_NEWTON_MAXIT):
        fl, dfl = _pressure_fn(p, rho_l, p_l, a_l, g)
        fr, dfr = _pressure_fn(p, rho_r, p_r, a_r, g)
        res = fl + fr + (u_r - u_l)
        step = res / (dfl + dfr)
        p_new = p - step
        if p_new <= 0.0:
            p_new = 0.5 * p
        p = p_new
        if abs(res) < _NEWTON_TOL:
            break
    fl, _ = _pressure_fn(p, rho_l, p_l, a_l, g)
    fr, _ = _pressure_fn(p, rho_r, p_r, a_r, g)
    res = fl + fr + (u_r - u_l)
    u_star = 0.5 * (u_l + u_r) + 0.5 * (fr - fl)
    return RiemannSolution(rho_l=rho_l, u_l=u_l, p_l=p_l,
                           rho_r=rho_r, u_r=u_r, p_r=p_r, gamma=g,
                           p_star=float(p), u_star=float(u_star),
                           residual=float(abs(res)))
