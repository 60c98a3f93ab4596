"""Pedagogical kernels: a split-gradient heat step and Godunov advection.

These are the two smallest useful substep chains.  The gradient chain
splits one explicit heat-equation timestep into "compute the derivative"
and "use the neighbours' derivatives", which is the canonical example of
variable forwarding keeping every substep on a compact stencil.  Godunov
advection is a single-substep conservative upwind update.
"""

from __future__ import annotations

import math

import numpy as np

from .._jit import stencil_jit
from ..core import Kernel, PointFrame, SchemeSignature, StencilView


@stencil_jit
def _gradient_chain_step(k, prev, out, c):
    inv_2dx = c[0]
    dt = c[1]
    if k == 0:
        # (u,) -> (u, u_x)
        for j in range(out.shape[0]):
            out[j, 0] = prev[j + 1, 0]
            out[j, 1] = (prev[j + 2, 0] - prev[j, 0]) * inv_2dx
    else:
        # (u, u_x) -> (u + dt * d(u_x)/dx,)
        for j in range(out.shape[0]):
            g_l = prev[j, 1]
            g_r = prev[j + 2, 1]
            out[j, 0] = prev[j + 1, 0] + dt * ((g_r - g_l) * inv_2dx)


@stencil_jit
def _godunov_step(k, prev, out, c):
    # upwind interface flux for linear advection f(u) = speed * u
    speed = c[0]
    nu = c[1]  # dt / dx
    for j in range(out.shape[0]):
        u_l = prev[j, 0]
        u_c = prev[j + 1, 0]
        u_r = prev[j + 2, 0]
        if speed >= 0.0:
            flux_l = speed * u_l
            flux_r = speed * u_c
        else:
            flux_l = speed * u_c
            flux_r = speed * u_r
        out[j, 0] = u_c - nu * (flux_r - flux_l)


def gradient_substep(view: StencilView) -> tuple[float, float]:
    """Forward the value and compute its central difference.

    out[0] = center, out[1] = (right - left) / (2 dx).
    """
    prev = np.array([view.left.values, view.center.values, view.right.values])
    out = np.empty((1, 2))
    c = np.array([1.0 / (2.0 * view.dx), view.dt])
    _gradient_chain_step(0, prev, out, c)
    return tuple(out[0])


def godunov_substep(view: StencilView, speed: float = 1.0) -> float:
    """Conservative upwind update: center - (dt/dx)(fluxR - fluxL)."""
    prev = np.array([view.left.values, view.center.values, view.right.values])
    out = np.empty((1, 1))
    c = np.array([speed, view.dt / view.dx])
    _godunov_step(0, prev, out, c)
    return out[0, 0]


class GradientChainKernel(Kernel):
    """S=2 heat step: substep 0 stores (u, u_x), substep 1 applies u_t = u_xx
    by differencing the forwarded derivatives."""

    signature = SchemeSignature(((1, 2), (2, 1)))
    step_fn = staticmethod(_gradient_chain_step)

    def __init__(self, dx: float, dt: float | None = None,
                 wavenumbers: tuple[int, ...] = (1,)):
        self.dx = float(dx)
        # two chained central first differences: stable for dt <= 2 dx^2
        self.dt = float(dt) if dt is not None else 0.2 * self.dx * self.dx
        self.consts = np.array([1.0 / (2.0 * self.dx), self.dt])
        self._wavenumbers = wavenumbers
        self.domain_length = None  # set by factory when N is known

    def init(self, i: int, x: float) -> PointFrame:
        L = self.domain_length if self.domain_length else 1.0
        u = 0.0
        for m, kw in enumerate(self._wavenumbers):
            u += math.sin(2.0 * math.pi * kw * x / L) / (m + 1)
        return PointFrame(values=(u,), level=0)


class GodunovAdvectionKernel(Kernel):
    """S=1 scalar conservation law, first-order Godunov, linear advection."""

    signature = SchemeSignature(((1, 1),))
    step_fn = staticmethod(_godunov_step)
    coord_offset = 0.5  # finite-volume cell centers

    def __init__(self, dx: float, dt: float | None = None, speed: float = 1.0,
                 cfl: float = 0.5, seed: int | None = None):
        self.dx = float(dx)
        self.speed = float(speed)
        self.dt = float(dt) if dt is not None else cfl * self.dx / abs(self.speed)
        self.consts = np.array([self.speed, self.dt / self.dx])
        self.seed = seed
        self.domain_length = None

    def init(self, i: int, x: float) -> PointFrame:
        if self.seed is not None:
            # point-pure randomness: the value depends only on (seed, i),
            # never on which node initializes the point
            u = float(np.random.default_rng((self.seed, i)).uniform(-1.0, 1.0))
        else:
            L = self.domain_length if self.domain_length else 1.0
            u = 1.0 if (x % L) < 0.5 * L else 0.0
        return PointFrame(values=(u,), level=0)
