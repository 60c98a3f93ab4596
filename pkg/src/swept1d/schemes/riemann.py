"""Exact solver for the 1D Euler Riemann problem.

Used purely as a verification oracle for the finite-volume scheme: it
shares no code with the kernel path.  The star-region pressure comes from
Newton iteration on the standard pressure function (shock branch via the
Rankine-Hugoniot relations, rarefaction branch via the isentrope), and the
self-similar solution is then sampled at a given x/t.
"""

from __future__ import annotations

import math

import numpy as np

from .euler import EulerState


class VacuumError(ValueError):
    """The data would generate vacuum; the solver does not cover that case."""


def _pressure_fn(p: float, rho_k: float, p_k: float, c_k: float,
                 gamma: float) -> tuple[float, float]:
    """f_K(p) and its derivative for one side of the problem."""
    if p > p_k:  # shock
        a_k = 2.0 / ((gamma + 1.0) * rho_k)
        b_k = (gamma - 1.0) / (gamma + 1.0) * p_k
        root = math.sqrt(a_k / (p + b_k))
        f = (p - p_k) * root
        df = root * (1.0 - 0.5 * (p - p_k) / (p + b_k))
    else:  # rarefaction
        f = 2.0 * c_k / (gamma - 1.0) * ((p / p_k) ** ((gamma - 1.0) / (2.0 * gamma)) - 1.0)
        df = (p / p_k) ** (-(gamma + 1.0) / (2.0 * gamma)) / (rho_k * c_k)
    return f, df


def solve_star(left: EulerState, right: EulerState,
               tol: float = 1e-12, max_iter: int = 100) -> tuple[float, float]:
    """Star-region pressure and velocity via Newton iteration."""
    if left.gamma != right.gamma:
        raise ValueError("states carry different gamma")
    g = left.gamma
    rho_l, u_l, p_l = left.rho, left.velocity, left.pressure
    rho_r, u_r, p_r = right.rho, right.velocity, right.pressure
    c_l, c_r = left.sound_speed, right.sound_speed
    if 2.0 * (c_l + c_r) / (g - 1.0) <= u_r - u_l:
        raise VacuumError("initial states generate vacuum")
    # two-rarefaction guess, clipped away from zero
    p = ((c_l + c_r - 0.5 * (g - 1.0) * (u_r - u_l)) /
         (c_l / p_l ** ((g - 1.0) / (2.0 * g)) + c_r / p_r ** ((g - 1.0) / (2.0 * g))
          )) ** (2.0 * g / (g - 1.0))
    p = max(p, 1e-10 * min(p_l, p_r))
    for _ in range(max_iter):
        f_l, df_l = _pressure_fn(p, rho_l, p_l, c_l, g)
        f_r, df_r = _pressure_fn(p, rho_r, p_r, c_r, g)
        delta = (f_l + f_r + (u_r - u_l)) / (df_l + df_r)
        p_new = p - delta
        if p_new <= 0.0:
            p_new = 0.5 * p
        if abs(p_new - p) <= tol * max(p_new, 1.0):
            p = p_new
            break
        p = p_new
    f_l, _ = _pressure_fn(p, rho_l, p_l, c_l, g)
    f_r, _ = _pressure_fn(p, rho_r, p_r, c_r, g)
    u = 0.5 * (u_l + u_r) + 0.5 * (f_r - f_l)
    return p, u


def exact_riemann(left: EulerState, right: EulerState, xi: float) -> EulerState:
    """Self-similar solution sampled at xi = x/t."""
    g = left.gamma
    p_star, u_star = solve_star(left, right)
    rho_l, u_l, p_l, c_l = left.rho, left.velocity, left.pressure, left.sound_speed
    rho_r, u_r, p_r, c_r = right.rho, right.velocity, right.pressure, right.sound_speed
    gm, gp = g - 1.0, g + 1.0

    if xi <= u_star:  # left of the contact
        if p_star > p_l:  # left shock
            s_l = u_l - c_l * math.sqrt(gp / (2.0 * g) * p_star / p_l + gm / (2.0 * g))
            if xi <= s_l:
                rho, u, p = rho_l, u_l, p_l
            else:
                rho = rho_l * ((p_star / p_l + gm / gp) /
                               (gm / gp * p_star / p_l + 1.0))
                u, p = u_star, p_star
        else:  # left rarefaction
            head = u_l - c_l
            c_star = c_l * (p_star / p_l) ** (gm / (2.0 * g))
            tail = u_star - c_star
            if xi <= head:
                rho, u, p = rho_l, u_l, p_l
            elif xi >= tail:
                rho = rho_l * (p_star / p_l) ** (1.0 / g)
                u, p = u_star, p_star
            else:  # inside the fan
                u = (2.0 / gp) * (c_l + 0.5 * gm * u_l + xi)
                c = c_l - 0.5 * gm * (u - u_l)
                rho = rho_l * (c / c_l) ** (2.0 / gm)
                p = p_l * (c / c_l) ** (2.0 * g / gm)
    else:  # right of the contact
        if p_star > p_r:  # right shock
            s_r = u_r + c_r * math.sqrt(gp / (2.0 * g) * p_star / p_r + gm / (2.0 * g))
            if xi >= s_r:
                rho, u, p = rho_r, u_r, p_r
            else:
                rho = rho_r * ((p_star / p_r + gm / gp) /
                               (gm / gp * p_star / p_r + 1.0))
                u, p = u_star, p_star
        else:  # right rarefaction
            head = u_r + c_r
            c_star = c_r * (p_star / p_r) ** (gm / (2.0 * g))
            tail = u_star + c_star
            if xi >= head:
                rho, u, p = rho_r, u_r, p_r
            elif xi <= tail:
                rho = rho_r * (p_star / p_r) ** (1.0 / g)
                u, p = u_star, p_star
            else:
                u = (2.0 / gp) * (-c_r + 0.5 * gm * u_r + xi)
                c = c_r + 0.5 * gm * (u - u_r)
                rho = rho_r * (c / c_r) ** (2.0 / gm)
                p = p_r * (c / c_r) ** (2.0 * g / gm)

    return EulerState.from_primitive(rho, u, p, gamma=g)


def riemann_profile(left: EulerState, right: EulerState, x: np.ndarray,
                    t: float, x0: float = 0.0) -> np.ndarray:
    """Density/momentum/energy profile at time t > 0, shape (len(x), 3)."""
    out = np.empty((len(x), 3))
    for j, xj in enumerate(np.asarray(x, dtype=float)):
        st = exact_riemann(left, right, (xj - x0) / t)
        out[j] = (st.rho, st.mom, st.ene)
    return out
