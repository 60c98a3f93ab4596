"""Concrete kernels and the scheme catalog used by the CLI."""

from __future__ import annotations

from ..core import Kernel
from .basic import (GodunovAdvectionKernel, GradientChainKernel,
                    godunov_substep, gradient_substep)
from .euler import (EulerKernel, EulerState, euler_kernel, minmod,
                    reconstruct_with_limiter)
from .ks import KSKernel, KSParams, ks_kernel
from .riemann import exact_riemann, riemann_profile

__all__ = [
    "EulerKernel", "EulerState", "GodunovAdvectionKernel",
    "GradientChainKernel", "KSKernel", "KSParams", "build_scheme",
    "euler_kernel", "exact_riemann", "godunov_substep", "gradient_substep",
    "ks_kernel", "minmod", "reconstruct_with_limiter", "riemann_profile",
    "scheme_names",
]


def _build_gradient_chain(n_points: int, dt=None, seed=None) -> Kernel:
    k = GradientChainKernel(dx=1.0 / n_points, dt=dt)
    k.domain_length = 1.0
    return k


def _build_godunov(n_points: int, dt=None, seed=None) -> Kernel:
    k = GodunovAdvectionKernel(dx=1.0 / n_points, dt=dt, seed=seed)
    k.domain_length = 1.0
    return k


def _build_ks(n_points: int, dt=None, seed=None) -> Kernel:
    return KSKernel(KSParams.default(n_points, dt=dt))


def _build_euler(n_points: int, dt=None, seed=None) -> Kernel:
    return EulerKernel(dx=2.0 / n_points, dt=dt, domain_length=2.0)


_SCHEMES = {
    "gradient-chain": _build_gradient_chain,
    "godunov": _build_godunov,
    "ks": _build_ks,
    "euler": _build_euler,
}


def scheme_names() -> list[str]:
    return sorted(_SCHEMES)


def build_scheme(name: str, n_points: int, dt=None, seed=None) -> Kernel:
    """Instantiate a catalog scheme on an n_points periodic grid."""
    try:
        factory = _SCHEMES[name]
    except KeyError:
        raise KeyError(
            f"unknown scheme {name!r}; available: {', '.join(scheme_names())}"
        ) from None
    return factory(n_points, dt=dt, seed=seed)
