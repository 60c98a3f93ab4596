"""Scheme-agnostic kernel contract and point/frame data model.

A discretization is expressed as a cyclic chain of compact-stencil
sub-timesteps.  A frame at substep level ``t`` carries the input variables
of substep ``t mod S``; applying that substep to a point and its two
immediate neighbours produces the frame at level ``t + 1``.  Everything the
execution engines do - halo exchange, triangles, diamonds - is built on
top of this one-point, one-level update.

All variables are float64.  Arities are fixed per substep index, and
chaining requires that each substep's outputs are exactly the next
substep's inputs, cyclically across the timestep boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np


class KernelContractError(ValueError):
    """A kernel violated its declared signature (arity or level mismatch)."""


class BlowUpError(RuntimeError):
    """Non-finite or unphysical values appeared during integration."""

    def __init__(self, message: str, point_index=None, level=None):
        super().__init__(message)
        self.point_index = point_index
        self.level = level


@dataclass(frozen=True)
class SchemeSignature:
    """Per-substep input/output arities of a decomposed timestep.

    ``arity[k] = (input_arity, output_arity)`` for substep ``k``.  The
    chain is valid when ``output_arity[k] == input_arity[(k+1) % S]`` for
    every ``k``, i.e. each substep consumes exactly what the previous one
    produced, wrapping around at the timestep boundary.
    """

    arity: tuple[tuple[int, int], ...]

    @property
    def substeps(self) -> int:
        return len(self.arity)

    def input_arity(self, k: int) -> int:
        return self.arity[k % self.substeps][0]

    def output_arity(self, k: int) -> int:
        return self.arity[k % self.substeps][1]

    def frame_arity(self, level: int) -> int:
        """Number of variables in a frame at absolute substep level."""
        return self.input_arity(level)

    @property
    def max_arity(self) -> int:
        return max(a for pair in self.arity for a in pair)


@dataclass(frozen=True)
class SignatureReport:
    ok: bool
    detail: str = ""
    first_violation: tuple[int, int] | None = None  # (k, (k+1) % S)


def validate_signature(sig: SchemeSignature) -> SignatureReport:
    """Check the cyclic chaining invariant; total, never raises.

    Names the first offending substep pair when the chain is broken.
    """
    if sig.substeps == 0:
        return SignatureReport(False, "signature has no substeps")
    for k, (a_in, a_out) in enumerate(sig.arity):
        if a_in < 1 or a_out < 1:
            return SignatureReport(
                False, f"substep {k}: arities must be >= 1, got {(a_in, a_out)}",
                (k, (k + 1) % sig.substeps))
    S = sig.substeps
    for k in range(S):
        nxt = (k + 1) % S
        if sig.arity[k][1] != sig.arity[nxt][0]:
            return SignatureReport(
                False,
                f"substep {k} produces {sig.arity[k][1]} variables but "
                f"substep {nxt} consumes {sig.arity[nxt][0]}",
                (k, nxt))
    return SignatureReport(True)


@dataclass(frozen=True)
class PointFrame:
    """Variable vector at one spatial point at one substep level."""

    values: tuple[float, ...]
    level: int

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        if self.level < 0:
            raise KernelContractError(f"negative level {self.level}")

    @property
    def arity(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class StencilView:
    """A point plus its two immediate neighbours, all at one level."""

    left: PointFrame
    center: PointFrame
    right: PointFrame
    dx: float
    dt: float

    def __post_init__(self):
        if not (self.left.level == self.center.level == self.right.level):
            raise KernelContractError(
                "stencil frames at mixed levels: "
                f"{(self.left.level, self.center.level, self.right.level)}")
        if self.dx <= 0 or self.dt <= 0:
            raise KernelContractError(f"dx, dt must be positive: {(self.dx, self.dt)}")

    @property
    def level(self) -> int:
        return self.center.level


class Kernel:
    """Behavioral contract every scheme implements.

    Concrete schemes provide:

    * ``signature`` - the substep arity chain (must validate).
    * ``init(i, x)`` - the level-0 frame for global point ``i`` at
      coordinate ``x``.
    * ``step_fn`` - one compiled function ``step_fn(k, prev, out, consts)``
      applying substep ``k`` to a whole row: ``prev`` has shape
      ``(w, in_arity)``, ``out`` has shape ``(w - 2, out_arity)`` and
      receives the results for the interior points ``1 .. w-2``.
    * ``consts`` - the float constants vector frozen at construction
      (grid spacing, timestep, material parameters).

    ``step_fn`` is the single arithmetic path shared by every engine,
    which is what makes their results bitwise identical; the per-point
    ``timestep`` contract below routes through it with a width-3 row.
    ``dx`` and ``dt`` are frozen at construction and identical across all
    engines.  Kernels hold no mutable state: ``step_fn`` may read only
    its arguments.
    """

    signature: SchemeSignature
    dx: float
    dt: float
    step_fn: Callable
    consts: np.ndarray
    # grid coordinate of point i is (i + coord_offset) * dx
    coord_offset: float = 0.0

    def coord(self, i: int) -> float:
        return (i + self.coord_offset) * self.dx

    def init(self, i: int, x: float) -> PointFrame:
        raise NotImplementedError

    def step_row(self, level: int, prev: np.ndarray, out: np.ndarray) -> None:
        """Apply substep ``level % S`` to a row (see ``step_fn``)."""
        self.step_fn(level % self.signature.substeps, prev, out, self.consts)

    def check_row(self, row: np.ndarray, level: int, global_start: int = 0) -> None:
        """Abort with diagnostics if the row contains unphysical values."""
        bad = ~np.isfinite(row)
        if bad.any():
            j = int(np.argwhere(bad.any(axis=1))[0, 0])
            raise BlowUpError(
                f"non-finite value at point {global_start + j}, level {level}: "
                f"{row[j]}", point_index=global_start + j, level=level)

    def timestep(self, k: int, view: StencilView) -> tuple[float, ...]:
        """Per-point substep: output values of length ``output_arity[k]``."""
        a_in = self.signature.input_arity(k)
        prev = np.empty((3, a_in), dtype=np.float64)
        prev[0] = view.left.values
        prev[1] = view.center.values
        prev[2] = view.right.values
        out = np.empty((1, self.signature.output_arity(k)), dtype=np.float64)
        self.step_row(view.level, prev, out)
        return tuple(out[0])


def apply_kernel(kernel: Kernel, k: int, view: StencilView,
                 point_index: int | None = None) -> PointFrame:
    """Apply substep ``k`` to a stencil, with level/arity bookkeeping.

    Raises KernelContractError on arity or level mismatches (a buggy
    kernel or caller) and BlowUpError on non-finite output (numerical
    blow-up, reported with point index and level when known).
    """
    S = kernel.signature.substeps
    if view.level % S != k % S:
        raise KernelContractError(
            f"substep index {k} does not match frame level {view.level} (S={S})")
    a_in = kernel.signature.input_arity(k)
    for name, frm in (("left", view.left), ("center", view.center),
                      ("right", view.right)):
        if frm.arity != a_in:
            raise KernelContractError(
                f"{name} frame has arity {frm.arity}, substep {k} expects {a_in}")
    values = kernel.timestep(k, view)
    a_out = kernel.signature.output_arity(k)
    if len(values) != a_out:
        raise KernelContractError(
            f"substep {k} produced {len(values)} values, declared {a_out}")
    if not all(np.isfinite(v) for v in values):
        where = "" if point_index is None else f" at point {point_index}"
        raise BlowUpError(
            f"non-finite output{where}, level {view.level + 1}: {values}",
            point_index=point_index, level=view.level + 1)
    return PointFrame(values=values, level=view.level + 1)
