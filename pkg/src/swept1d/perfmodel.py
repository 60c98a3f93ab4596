"""Closed-form cost model for swept versus per-substep communication.

With one-way latency tau and per-step-point compute time s, a swept cycle
advancing n substeps costs n^2 s of computing plus two communications, so
the time per substep is n s + 2 tau / n.  The optimum over n and the value
there follow in closed form; a method that communicates every substep
cannot beat tau per substep, so the swept optimum beats that floor by
sqrt(tau / (8 s)) whenever tau > 8 s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PerfParams:
    """Hardware/discretization point: latency tau and per-step-point time s.

    Optionally carries the flop count per step-point and the node flop
    rate, in which case s must equal their ratio exactly.
    """

    tau: float
    s: float
    flop_per_step_point: float | None = None
    flops: float | None = None

    def __post_init__(self):
        if self.tau <= 0 or self.s <= 0:
            raise ValueError(f"tau and s must be positive: {self}")
        if (self.flop_per_step_point is None) != (self.flops is None):
            raise ValueError("give both flop_per_step_point and flops, or neither")
        if self.flops is not None and self.s != self.flop_per_step_point / self.flops:
            raise ValueError(
                f"s={self.s} != flop_per_step_point/flops="
                f"{self.flop_per_step_point / self.flops}")

    @classmethod
    def from_rates(cls, tau: float, flop_per_step_point: float,
                   flops: float) -> "PerfParams":
        return cls(tau=tau, s=flop_per_step_point / flops,
                   flop_per_step_point=flop_per_step_point, flops=flops)


@dataclass(frozen=True)
class ModelPrediction:
    n_star: float          # optimal points per node, sqrt(2 tau / s)
    t_star: float          # seconds per substep at the optimum, sqrt(8 tau s)
    break_factor: float    # sqrt(tau / (8 s))
    barrier_broken: bool   # tau > 8 s
    best_integer_n: int    # integer argmin of time_per_substep


def time_per_substep(params: PerfParams, n: float) -> float:
    """Swept cost per substep at n points per node: n s + 2 tau / n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return n * params.s + 2.0 * params.tau / n


def classic_time_per_substep(params: PerfParams, n: float) -> float:
    """Per-substep halo exchange: compute plus one latency floor."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return n * params.s + params.tau


def optimize(params: PerfParams) -> ModelPrediction:
    """Closed-form optimum plus the best integer points-per-node.

    Ties between the two integer neighbours break toward the smaller n
    (fewer points per node favors scaling out).
    """
    n_star = math.sqrt(2.0 * params.tau / params.s)
    t_star = math.sqrt(8.0 * params.tau * params.s)
    break_factor = math.sqrt(params.tau / (8.0 * params.s))
    lo = max(1, math.floor(n_star))
    hi = max(1, math.ceil(n_star))
    best = lo
    if hi != lo and time_per_substep(params, hi) < time_per_substep(params, lo):
        best = hi
    return ModelPrediction(n_star=n_star, t_star=t_star,
                           break_factor=break_factor,
                           barrier_broken=params.tau > 8.0 * params.s,
                           best_integer_n=best)


@dataclass(frozen=True)
class Preset:
    """A named latency or compute operating point."""

    name: str
    description: str
    tau: float | None = None
    s: float | None = None
    flop_per_step_point: float | None = None
    flops: float | None = None


_LATENCY = [
    ("ec2", "cloud instances over a shared network", 150e-6),
    ("gigabit-ethernet", "typical gigabit ethernet", 50e-6),
    ("100g-ethernet", "fast 100-gigabit ethernet", 5e-6),
    ("infiniband-fdr", "56 Gb/s FDR InfiniBand", 0.7e-6),
]

_COMPUTE = [
    ("nehalem-fe-system", "single CPU thread, finite-element system", 4000.0, 10e9),
    ("nehalem-fv-system", "single CPU thread, finite-volume system", 200.0, 10e9),
    ("nehalem-fd-scalar", "single CPU thread, scalar finite difference", 3.0, 10e9),
    ("summit-fe-system", "top GPU node, finite-element system", 4000.0, 40e12),
    ("summit-fv-system", "top GPU node, finite-volume system", 200.0, 40e12),
    ("summit-fd-scalar", "top GPU node, scalar finite difference", 3.0, 40e12),
]


def presets() -> dict[str, Preset]:
    """Catalog of 4 latency and 6 compute presets."""
    out: dict[str, Preset] = {}
    for name, desc, tau in _LATENCY:
        out[name] = Preset(name=name, description=desc, tau=tau)
    for name, desc, flop, flops in _COMPUTE:
        out[name] = Preset(name=name, description=desc, s=flop / flops,
                           flop_per_step_point=flop, flops=flops)
    return out


def preset(name: str) -> Preset:
    catalog = presets()
    try:
        return catalog[name]
    except KeyError:
        raise KeyError(
            f"unknown preset {name!r}; available: {', '.join(sorted(catalog))}"
        ) from None


def params_from_presets(latency_name: str, compute_name: str) -> PerfParams:
    lat = preset(latency_name)
    comp = preset(compute_name)
    if lat.tau is None or comp.s is None:
        raise ValueError(
            f"{latency_name!r} must be a latency preset and "
            f"{compute_name!r} a compute preset")
    return PerfParams.from_rates(lat.tau, comp.flop_per_step_point, comp.flops)
