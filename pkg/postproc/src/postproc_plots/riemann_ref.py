"""Exact self-similar solution of the ideal-gas Riemann problem.

Used as the reference curve in shock-tube profile plots.  The star-region
pressure comes from a bracketed root solve of the standard pressure
function (shock branch via Rankine-Hugoniot, rarefaction branch via the
isentrope), after which every state is sampled in closed form from the
similarity variable xi = x / t.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

# planar shock-tube jump used by the solver's "sod" scenario (monatomic-like
# two-dimensional gas, gamma = 2); states are (rho, u, p)
SOD_GAMMA = 2.0
SOD_LEFT = (1.0, 0.0, 1.0)
SOD_RIGHT = (0.125, 0.0, 0.03125)


def _pressure_function(p, rho_k, p_k, a_k, g):
    """f_K(p): velocity change across the wave connecting to state K."""
    if p > p_k:
        a = 2.0 / ((g + 1.0) * rho_k)
        b = (g - 1.0) / (g + 1.0) * p_k
        return (p - p_k) * np.sqrt(a / (p + b))
    return 2.0 * a_k / (g - 1.0) * ((p / p_k) ** ((g - 1.0) / (2.0 * g)) - 1.0)


@dataclass(frozen=True)
class RiemannReference:
    """Solved Riemann problem with closed-form sampling."""

    gamma: float
    rho_l: float
    u_l: float
    p_l: float
    rho_r: float
    u_r: float
    p_r: float
    p_star: float
    u_star: float

    def sample(self, xi):
        """Primitive (rho, u, p) at similarity points xi = x / t."""
        xi = np.atleast_1d(np.asarray(xi, dtype=np.float64))
        g, ps, us = self.gamma, self.p_star, self.u_star
        gm, gp = g - 1.0, g + 1.0
        rho = np.empty_like(xi)
        u = np.empty_like(xi)
        p = np.empty_like(xi)

        a_l = np.sqrt(g * self.p_l / self.rho_l)
        a_r = np.sqrt(g * self.p_r / self.rho_r)
        left = xi < us

        if ps > self.p_l:  # left shock
            s = self.u_l - a_l * np.sqrt(gp / (2 * g) * ps / self.p_l
                                         + gm / (2 * g))
            rho_s = self.rho_l * ((ps / self.p_l + gm / gp)
                                  / (gm / gp * ps / self.p_l + 1.0))
            pre = left & (xi < s)
            star = left & (xi >= s)
            rho[pre], u[pre], p[pre] = self.rho_l, self.u_l, self.p_l
            rho[star], u[star], p[star] = rho_s, us, ps
        else:  # left rarefaction
            a_star = a_l * (ps / self.p_l) ** (gm / (2 * g))
            head, tail = self.u_l - a_l, us - a_star
            pre = left & (xi < head)
            fan = left & (xi >= head) & (xi <= tail)
            star = left & (xi > tail)
            rho[pre], u[pre], p[pre] = self.rho_l, self.u_l, self.p_l
            rho[star], p[star] = self.rho_l * (ps / self.p_l) ** (1 / g), ps
            u[star] = us
            base = 2.0 / gp + gm / (gp * a_l) * (self.u_l - xi[fan])
            rho[fan] = self.rho_l * base ** (2.0 / gm)
            u[fan] = 2.0 / gp * (a_l + gm / 2.0 * self.u_l + xi[fan])
            p[fan] = self.p_l * base ** (2.0 * g / gm)

        right = ~left
        if ps > self.p_r:  # right shock
            s = self.u_r + a_r * np.sqrt(gp / (2 * g) * ps / self.p_r
                                         + gm / (2 * g))
            rho_s = self.rho_r * ((ps / self.p_r + gm / gp)
                                  / (gm / gp * ps / self.p_r + 1.0))
            post = right & (xi > s)
            star = right & (xi <= s)
            rho[post], u[post], p[post] = self.rho_r, self.u_r, self.p_r
            rho[star], u[star], p[star] = rho_s, us, ps
        else:  # right rarefaction
            a_star = a_r * (ps / self.p_r) ** (gm / (2 * g))
            head, tail = self.u_r + a_r, us + a_star
            post = right & (xi > head)
            fan = right & (xi >= tail) & (xi <= head)
            star = right & (xi < tail)
            rho[post], u[post], p[post] = self.rho_r, self.u_r, self.p_r
            rho[star], p[star] = self.rho_r * (ps / self.p_r) ** (1 / g), ps
            u[star] = us
            base = 2.0 / gp - gm / (gp * a_r) * (self.u_r - xi[fan])
            rho[fan] = self.rho_r * base ** (2.0 / gm)
            u[fan] = 2.0 / gp * (-a_r + gm / 2.0 * self.u_r + xi[fan])
            p[fan] = self.p_r * base ** (2.0 * g / gm)
        return rho, u, p


def solve_riemann(left, right, gamma: float) -> RiemannReference:
    """Solve for the star region given (rho, u, p) states on each side."""
    rho_l, u_l, p_l = left
    rho_r, u_r, p_r = right
    a_l = np.sqrt(gamma * p_l / rho_l)
    a_r = np.sqrt(gamma * p_r / rho_r)
    if 2.0 * (a_l + a_r) / (gamma - 1.0) <= u_r - u_l:
        raise ValueError("states separate into vacuum")

    def total(p):
        return (_pressure_function(p, rho_l, p_l, a_l, gamma)
                + _pressure_function(p, rho_r, p_r, a_r, gamma)
                + (u_r - u_l))

    hi = max(p_l, p_r)
    while total(hi) < 0.0:
        hi *= 2.0
    p_star = brentq(total, 1e-14, hi, xtol=1e-15, rtol=1e-15)
    u_star = 0.5 * (u_l + u_r) + 0.5 * (
        _pressure_function(p_star, rho_r, p_r, a_r, gamma)
        - _pressure_function(p_star, rho_l, p_l, a_l, gamma))
    return RiemannReference(gamma=gamma, rho_l=rho_l, u_l=u_l, p_l=p_l,
                            rho_r=rho_r, u_r=u_r, p_r=p_r,
                            p_star=float(p_star), u_star=float(u_star))
