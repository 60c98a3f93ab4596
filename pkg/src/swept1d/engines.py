"""Execution engines: serial oracle, per-substep halo exchange, and the
swept space-time decomposition.

All three engines drive the same kernel step function with the same
operand values in the same per-point order, so their final fields are
bitwise identical; the engines differ only in which node computes which
space-time cell and when the boundary data travels.

Swept geometry, in window-local coordinates (n points per node, n even):

* A computing stage leaves each node with an "upper triangle": for
  l = 0 .. n/2-1, the row at level base+l spans local points [l, n-l).
  Only the triangle's two leading edges survive a stage - every interior
  cell is consumed as a dependency within the stage that computed it - so
  a node's retained state is O(n), not O(n^2).
* A leading edge is the two outermost frames of each of those rows on one
  side; the level-0 row (for the first stage, the initial condition) is
  part of the triangle, so its frames are included in transmitted edges.
* A communication stage sends one edge away, keeps the other, and merges
  the kept edge with the edge received from the opposite neighbour into a
  V whose interior is then filled ("diamond"), yielding the next
  triangle's edges.  Windows shift by n/2 points, alternating direction,
  so each node only ever touches two point sets.
* The closing stage fills the wings of one last V and then advances the
  full shifted window a single level, which lands every point on the
  uniform level ``stages * n/2``; any leftover substeps (T mod n/2) run
  as plain halo stepping.  Targets below n/2 fall back to halo stepping
  entirely (reported on the run info).

One computing stage is a single compiled, GIL-releasing call, so the
per-substep engine overhead stays in the microsecond range and node
workers overlap on threads.
"""

from __future__ import annotations

import logging
import struct
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from ._jit import closure_jit, stencil_jit
from .core import BlowUpError, Kernel, KernelContractError, SchemeSignature
from .transport import RingTransport, TransportError, simlatency_transport

logger = logging.getLogger(__name__)

# blow-up scan period (in substeps) for the serial/halo stepping loops
CHECK_EVERY = 64

MSG_HALO = 1
MSG_EDGE = 2
MSG_GATHER = 3

_HALO_HEADER = struct.Struct("<Bq")
_EDGE_HEADER = struct.Struct("<BBqI")
_GATHER_HEADER = struct.Struct("<BqqII")


class ProtocolError(TransportError):
    """Received payload disagrees with the expected geometry or version."""


@dataclass(frozen=True)
class DecompositionPlan:
    """Uniform split of N periodic points across p nodes."""

    total_points: int
    nodes: int

    def __post_init__(self):
        n, p = self.total_points, self.nodes
        if p < 1:
            raise ValueError(f"need at least one node, got {p}")
        if n % p != 0:
            raise ValueError(f"{p} nodes must divide {n} points evenly")
        per = n // p
        if per % 2 != 0 or per < 4:
            raise ValueError(
                f"points per node must be even and >= 4, got {per}")

    @property
    def points_per_node(self) -> int:
        return self.total_points // self.nodes


def _arity_tables(sig: SchemeSignature) -> tuple[np.ndarray, np.ndarray, int]:
    ar_in = np.array([sig.input_arity(k) for k in range(sig.substeps)],
                     dtype=np.int64)
    ar_out = np.array([sig.output_arity(k) for k in range(sig.substeps)],
                      dtype=np.int64)
    return ar_in, ar_out, int(max(ar_in.max(), ar_out.max()))


@dataclass(frozen=True)
class LeadingEdge:
    """Two-column boundary of a computed region, one side, n/2 levels.

    Level l of the edge carries the two outermost frames (ordered left to
    right) of the frontier row at absolute level ``base_level + l``; they
    live in ``stack[l, :, :arities[l]]`` (columns beyond the arity are
    zero padding).
    """

    side: str  # "left" | "right"
    base_level: int
    stack: np.ndarray  # (span, 2, max_arity)
    arities: tuple[int, ...]

    @property
    def span(self) -> int:
        return len(self.arities)

    @property
    def cols(self) -> tuple[np.ndarray, ...]:
        return tuple(self.stack[l, :, :a] for l, a in enumerate(self.arities))

    def payload_scalars(self) -> int:
        return 2 * sum(self.arities)


@dataclass(frozen=True)
class VFrontier:
    """A merged pair of leading edges: the walls of the next diamond."""

    left_stack: np.ndarray
    right_stack: np.ndarray
    base_level: int
    arities: tuple[int, ...]

    @property
    def span(self) -> int:
        return len(self.arities)


@dataclass
class NodeState:
    """One node's retained frontier between swept computing stages: the
    two leading edges of its upper triangle."""

    node_id: int
    window_start: int
    base_level: int
    left_edge: LeadingEdge
    right_edge: LeadingEdge
    stage: int = 1

    @property
    def span(self) -> int:
        return self.left_edge.span

    def profile(self) -> str:
        ok = (self.left_edge.side == "left"
              and self.right_edge.side == "right"
              and self.left_edge.base_level == self.base_level
              and self.right_edge.base_level == self.base_level
              and self.left_edge.arities == self.right_edge.arities)
        return "triangle" if ok else "invalid"


@dataclass
class NodeStats:
    node_id: int = 0
    cells: int = 0
    messages_sent: int = 0
    messages_received: int = 0
    bytes_sent: int = 0
    bytes_received: int = 0
    fell_back: bool = False
    t_begin: float = 0.0
    t_end: float = 0.0


@dataclass
class RunInfo:
    wall: float = 0.0
    cells: int = 0
    fell_back: bool = False
    per_node: list[NodeStats] = field(default_factory=list)
    history: list[np.ndarray] | None = None

    @property
    def messages_sent_per_node(self) -> int:
        return max((s.messages_sent for s in self.per_node), default=0)

    @property
    def messages_received_per_node(self) -> int:
        return max((s.messages_received for s in self.per_node), default=0)


# --- compiled swept internals -------------------------------------------------


@stencil_jit
def _edge_to_wire(e, base_k, S, ar_in, flat):
    # ascending level, then left-to-right within a level
    pos = 0
    for l in range(e.shape[0]):
        a = ar_in[(base_k + l) % S]
        for r in range(2):
            for c in range(a):
                flat[pos] = e[l, r, c]
                pos += 1
    return pos


@stencil_jit
def _edge_from_wire(flat, base_k, S, ar_in, e):
    pos = 0
    for l in range(e.shape[0]):
        a = ar_in[(base_k + l) % S]
        for r in range(2):
            for c in range(a):
                e[l, r, c] = flat[pos]
                pos += 1
    return pos


_DRIVERS: dict = {}


def _make_drivers(step_fn):
    @closure_jit
    def triangle_driver(row0, S, ar_in, ar_out, n, consts,
                        e_left, e_right, work0, work1):
        """First computing stage: shrink the init row into a triangle,
        recording each level's two boundary frames per side (level 0,
        the initial condition, included)."""
        half = n // 2
        a0 = ar_in[0]
        for c in range(a0):
            e_left[0, 0, c] = row0[0, c]
            e_left[0, 1, c] = row0[1, c]
            e_right[0, 0, c] = row0[n - 2, c]
            e_right[0, 1, c] = row0[n - 1, c]
        for x in range(n):
            for c in range(a0):
                work0[x, c] = row0[x, c]
        cells = 0
        width = n
        cur = work0[:, :]
        for l in range(1, half):
            k = (l - 1) % S
            dst = work1 if l % 2 == 1 else work0
            w_out = width - 2
            step_fn(k, cur[:width, :ar_in[k]], dst[:w_out, :ar_out[k]], consts)
            cells += w_out
            a = ar_out[k]
            for c in range(a):
                e_left[l, 0, c] = dst[0, c]
                e_left[l, 1, c] = dst[1, c]
                e_right[l, 0, c] = dst[w_out - 2, c]
                e_right[l, 1, c] = dst[w_out - 1, c]
            cur = dst[:, :]
            width = w_out
        return cells

    @closure_jit
    def stage_driver(left_stack, right_stack, base_k, S, ar_in, ar_out, n,
                     closing, consts, e_left, e_right, flat_row,
                     work0, work1):
        """Fill a V: wings first, then either the full diamond pyramid
        (recording the next triangle's edges) or, when closing, a single
        full-width row into flat_row."""
        half = n // 2
        a0 = ar_in[base_k % S]
        for c in range(a0):
            work0[0, c] = left_stack[0, 0, c]
            work0[1, c] = left_stack[0, 1, c]
            work0[2, c] = right_stack[0, 0, c]
            work0[3, c] = right_stack[0, 1, c]
        cells = 0
        width = 4
        cur = work0[:, :]
        for t in range(1, half):
            k = (base_k + t - 1) % S
            dst = work1 if t % 2 == 1 else work0
            out_w = width - 2
            step_fn(k, cur[:width, :ar_in[k]], dst[2:2 + out_w, :ar_out[k]],
                    consts)
            cells += out_w
            a = ar_out[k]
            for c in range(a):
                dst[0, c] = left_stack[t, 0, c]
                dst[1, c] = left_stack[t, 1, c]
                dst[2 + out_w, c] = right_stack[t, 0, c]
                dst[3 + out_w, c] = right_stack[t, 1, c]
            width = out_w + 4
            cur = dst[:, :]
        # the top wing row (width n + 2) sits at level base + half - 1
        if closing:
            k = (base_k + half - 1) % S
            step_fn(k, cur[:width, :ar_in[k]],
                    flat_row[:width - 2, :ar_out[k]], consts)
            cells += width - 2
            return cells
        for j in range(half):
            k = (base_k + half - 1 + j) % S
            dst = work1 if (half + j) % 2 == 1 else work0
            w_out = width - 2
            step_fn(k, cur[:width, :ar_in[k]], dst[:w_out, :ar_out[k]],
                    consts)
            cells += w_out
            a = ar_out[k]
            for c in range(a):
                e_left[j, 0, c] = dst[0, c]
                e_left[j, 1, c] = dst[1, c]
                e_right[j, 0, c] = dst[w_out - 2, c]
                e_right[j, 1, c] = dst[w_out - 1, c]
            cur = dst[:, :]
            width = w_out
        return cells

    return triangle_driver, stage_driver


def _drivers_for(kernel: Kernel):
    fn = kernel.step_fn
    drivers = _DRIVERS.get(fn)
    if drivers is None:
        drivers = _make_drivers(fn)
        _DRIVERS[fn] = drivers
    return drivers


# --- payload packing --------------------------------------------------------


def pack_halo(level: int, values: np.ndarray) -> bytes:
    return _HALO_HEADER.pack(MSG_HALO, level) + \
        np.ascontiguousarray(values, dtype="<f8").tobytes()


def unpack_halo(payload: bytes, level: int, arity: int) -> np.ndarray:
    kind, got_level = _HALO_HEADER.unpack_from(payload)
    if kind != MSG_HALO or got_level != level:
        raise ProtocolError(
            f"expected halo for level {level}, got kind={kind} level={got_level}")
    values = np.frombuffer(payload, dtype="<f8", offset=_HALO_HEADER.size)
    if values.shape[0] != arity:
        raise ProtocolError(
            f"halo arity {values.shape[0]} != expected {arity}")
    return values


def pack_edge(edge: LeadingEdge, sig: SchemeSignature) -> bytes:
    """Edge wire format: ascending level, left-to-right within a level."""
    S = sig.substeps
    ar_in, _, _ = _arity_tables(sig)
    flat = np.empty(edge.payload_scalars())
    _edge_to_wire(edge.stack, edge.base_level % S, S, ar_in, flat)
    head = _EDGE_HEADER.pack(MSG_EDGE, 0 if edge.side == "left" else 1,
                             edge.base_level, edge.span)
    return head + np.ascontiguousarray(flat, dtype="<f8").tobytes()


def unpack_edge(payload: bytes, sig: SchemeSignature) -> LeadingEdge:
    kind, side, base_level, span = _EDGE_HEADER.unpack_from(payload)
    if kind != MSG_EDGE:
        raise ProtocolError(f"expected an edge payload, got kind={kind}")
    S = sig.substeps
    ar_in, _, amax = _arity_tables(sig)
    arities = tuple(int(ar_in[(base_level + l) % S]) for l in range(span))
    expected = _EDGE_HEADER.size + 2 * sum(arities) * 8
    if len(payload) != expected:
        raise ProtocolError(
            f"edge payload is {len(payload)} bytes, expected {expected}")
    flat = np.frombuffer(payload, dtype="<f8", offset=_EDGE_HEADER.size)
    stack = np.zeros((span, 2, amax))
    _edge_from_wire(flat, base_level % S, S, ar_in, stack)
    return LeadingEdge(side="left" if side == 0 else "right",
                       base_level=base_level, stack=stack, arities=arities)


def pack_gather(window_start: int, level: int, rows: np.ndarray) -> bytes:
    head = _GATHER_HEADER.pack(MSG_GATHER, window_start, level,
                               rows.shape[0], rows.shape[1])
    return head + np.ascontiguousarray(rows, dtype="<f8").tobytes()


def unpack_gather(payload: bytes) -> tuple[int, int, np.ndarray]:
    kind, start, level, count, arity = _GATHER_HEADER.unpack_from(payload)
    if kind != MSG_GATHER:
        raise ProtocolError(f"expected a gather payload, got kind={kind}")
    rows = np.frombuffer(payload, dtype="<f8", offset=_GATHER_HEADER.size)
    return start, level, rows.reshape(count, arity)


# --- shared stepping machinery ----------------------------------------------


def _phase_count(S: int) -> int:
    # consecutive levels must live in distinct buffers (the row function
    # reads its input while writing its output)
    return S if S >= 2 else 2


def _init_rows(kernel: Kernel, global_start: int, count: int, init) -> np.ndarray:
    sig = kernel.signature
    a0 = sig.input_arity(0)
    rows = np.empty((count, a0))
    make = init if init is not None else kernel.init
    for j in range(count):
        i = global_start + j
        frame = make(i, kernel.coord(i))
        if frame.level != 0:
            raise KernelContractError(f"init produced level {frame.level} != 0")
        if frame.arity != a0:
            raise KernelContractError(
                f"init produced arity {frame.arity}, signature wants {a0}")
        rows[j] = frame.values
    return rows


def _make_ext_buffers(kernel: Kernel, width: int) -> list[np.ndarray]:
    sig = kernel.signature
    m = _phase_count(sig.substeps)
    return [np.empty((width + 2, sig.input_arity(ph))) for ph in range(m)]


def _halo_steps(kernel: Kernel, ring: RingTransport, exts: list[np.ndarray],
                n: int, level0: int, count: int, global_start: int,
                stats: NodeStats) -> None:
    """Advance `count` substeps with one two-sided halo exchange each."""
    sig = kernel.signature
    m = len(exts)
    for idx in range(count):
        t = level0 + idx
        src = exts[t % m]
        a_in = sig.input_arity(t)
        ring.send_left(pack_halo(t, src[1]))
        ring.send_right(pack_halo(t, src[n]))
        src[0] = unpack_halo(ring.recv_left(), t, a_in)
        src[n + 1] = unpack_halo(ring.recv_right(), t, a_in)
        dst = exts[(t + 1) % m]
        out = dst[1:n + 1]
        kernel.step_row(t, src, out)
        stats.cells += n
        if (idx + 1) % CHECK_EVERY == 0 or idx + 1 == count:
            kernel.check_row(out, t + 1, global_start)


# --- serial engine -----------------------------------------------------------


def run_serial(kernel: Kernel, n_points: int, substeps: int, init=None,
               record_every: int | None = None) -> tuple[np.ndarray, RunInfo]:
    """Reference engine: the whole periodic row, one substep at a time."""
    if substeps < 0:
        raise ValueError(f"substeps must be >= 0, got {substeps}")
    sig = kernel.signature
    S = sig.substeps
    N = n_points
    field0 = _init_rows(kernel, 0, N, init)
    history = None
    if record_every is not None:
        if record_every < 1:
            raise ValueError("record_every must be a positive timestep count")
        history = [field0.copy()]
    exts = _make_ext_buffers(kernel, N)
    exts[0][1:N + 1] = field0
    m = len(exts)
    stats = NodeStats(node_id=0)
    begin = time.perf_counter()
    for t in range(substeps):
        src = exts[t % m]
        src[0] = src[N]
        src[N + 1] = src[1]
        dst = exts[(t + 1) % m]
        out = dst[1:N + 1]
        kernel.step_row(t, src, out)
        stats.cells += N
        level = t + 1
        if level % CHECK_EVERY == 0 or level == substeps:
            kernel.check_row(out, level)
        if history is not None and level % (S * record_every) == 0:
            history.append(out.copy())
    wall = time.perf_counter() - begin
    final = exts[substeps % m][1:N + 1].copy()
    if substeps == 0:
        kernel.check_row(final, 0)
    info = RunInfo(wall=wall, cells=stats.cells, per_node=[stats],
                   history=history)
    return final, info


# --- node workers ------------------------------------------------------------


def _counter_snapshot(ring: RingTransport) -> tuple[int, int, int, int]:
    return (ring.messages_sent, ring.messages_received,
            ring.bytes_sent, ring.bytes_received)


def _counter_delta(ring: RingTransport, before, stats: NodeStats) -> None:
    stats.messages_sent = ring.messages_sent - before[0]
    stats.messages_received = ring.messages_received - before[1]
    stats.bytes_sent = ring.bytes_sent - before[2]
    stats.bytes_received = ring.bytes_received - before[3]


@dataclass
class _NodeOut:
    node_id: int
    window_start: int
    level: int
    field: np.ndarray
    stats: NodeStats


def classic_node(kernel: Kernel, plan: DecompositionPlan, node_id: int,
                 ring: RingTransport, substeps: int, init=None,
                 barrier: threading.Barrier | None = None) -> _NodeOut:
    """One node of the per-substep halo-exchange engine."""
    n = plan.points_per_node
    start = node_id * n
    exts = _make_ext_buffers(kernel, n)
    exts[0][1:n + 1] = _init_rows(kernel, start, n, init)
    stats = NodeStats(node_id=node_id)
    before = _counter_snapshot(ring)
    if barrier is not None:
        barrier.wait()
    stats.t_begin = time.perf_counter()
    _halo_steps(kernel, ring, exts, n, 0, substeps, start, stats)
    stats.t_end = time.perf_counter()
    _counter_delta(ring, before, stats)
    m = len(exts)
    field = exts[substeps % m][1:n + 1].copy()
    return _NodeOut(node_id, start, substeps, field, stats)


def edge_extract(state: NodeState, side: str) -> LeadingEdge:
    """The two outermost frames of each frontier row on one side."""
    if side == "left":
        return state.left_edge
    if side == "right":
        return state.right_edge
    raise ValueError(f"side must be 'left' or 'right', got {side!r}")


def edge_merge(kept: LeadingEdge, received: LeadingEdge,
               sig: SchemeSignature | None = None) -> VFrontier:
    """Pair a kept edge with a received one into the next diamond's walls.

    A kept right edge sits on the left side of the shifted window, so it
    becomes the V's left wall, and vice versa.  Mismatched spans, levels
    or arities indicate engine or version skew between peers.
    """
    if kept.side == received.side:
        raise ProtocolError(f"cannot merge two {kept.side!r} edges")
    if kept.base_level != received.base_level:
        raise ProtocolError(
            f"edge level mismatch: kept {kept.base_level}, "
            f"received {received.base_level}")
    if kept.span != received.span:
        raise ProtocolError(
            f"edge span mismatch: kept {kept.span}, received {received.span}")
    if kept.arities != received.arities:
        raise ProtocolError(
            f"edge arity mismatch: kept {kept.arities}, "
            f"received {received.arities}")
    if sig is not None:
        expect = tuple(sig.frame_arity(kept.base_level + l)
                       for l in range(kept.span))
        if kept.arities != expect:
            raise ProtocolError(
                f"edge arities {kept.arities} != signature {expect}")
    left = kept if kept.side == "right" else received
    right = received if left is kept else kept
    return VFrontier(left_stack=left.stack, right_stack=right.stack,
                     base_level=kept.base_level, arities=kept.arities)


def _state_arities(sig: SchemeSignature, base_level: int, half: int):
    return tuple(sig.frame_arity(base_level + l) for l in range(half))


def _fresh_edges(sig: SchemeSignature, base_level: int, half: int,
                 amax: int) -> tuple[LeadingEdge, LeadingEdge]:
    arities = _state_arities(sig, base_level, half)
    return (LeadingEdge("left", base_level, np.zeros((half, 2, amax)), arities),
            LeadingEdge("right", base_level, np.zeros((half, 2, amax)), arities))


def initial_triangle(kernel: Kernel, plan: DecompositionPlan, node_id: int,
                     init=None) -> tuple[NodeState, int]:
    """First computing stage of one node; returns (state, cells computed)."""
    sig = kernel.signature
    n = plan.points_per_node
    half = n // 2
    ar_in, ar_out, amax = _arity_tables(sig)
    triangle_driver, _ = _drivers_for(kernel)
    row0 = _init_rows(kernel, node_id * n, n, init)
    left_edge, right_edge = _fresh_edges(sig, 0, half, amax)
    work0 = np.empty((n + 2, amax))
    work1 = np.empty((n + 2, amax))
    cells = triangle_driver(row0, sig.substeps, ar_in, ar_out, n,
                            kernel.consts, left_edge.stack, right_edge.stack,
                            work0, work1)
    state = NodeState(node_id=node_id, window_start=node_id * n, base_level=0,
                      left_edge=left_edge, right_edge=right_edge, stage=1)
    return state, int(cells)


def compute_stage(kernel: Kernel, v: VFrontier, n: int, closing: bool = False):
    """Fill one V (diamond or closing stage).

    Returns (left_edge, right_edge, flat_row, cells): for a diamond the
    edges of the next triangle and flat_row is None; for a closing stage
    the edges are None and flat_row is the uniform window at level
    ``v.base_level + n/2``.
    """
    sig = kernel.signature
    S = sig.substeps
    half = n // 2
    if v.span != half:
        raise ProtocolError(f"V spans {v.span} levels, expected {half}")
    ar_in, ar_out, amax = _arity_tables(sig)
    _, stage_driver = _drivers_for(kernel)
    new_base = v.base_level + half
    left_edge, right_edge = _fresh_edges(sig, new_base, half, amax)
    flat_row = np.empty((n, amax))
    work0 = np.empty((n + 2, amax))
    work1 = np.empty((n + 2, amax))
    cells = stage_driver(v.left_stack, v.right_stack, v.base_level % S, S,
                         ar_in, ar_out, n, closing, kernel.consts,
                         left_edge.stack, right_edge.stack, flat_row,
                         work0, work1)
    if closing:
        return None, None, flat_row[:, :sig.frame_arity(new_base)], int(cells)
    return left_edge, right_edge, None, int(cells)


def swept_node(kernel: Kernel, plan: DecompositionPlan, node_id: int,
               ring: RingTransport, substeps: int, init=None,
               first_send: str = "left",
               barrier: threading.Barrier | None = None) -> _NodeOut:
    """One node of the swept space-time engine."""
    if first_send not in ("left", "right"):
        raise ValueError(f"first_send must be 'left' or 'right', got {first_send!r}")
    sig = kernel.signature
    S = sig.substeps
    n = plan.points_per_node
    N = plan.total_points
    half = n // 2
    stages = substeps // half
    remainder = substeps - stages * half
    stats = NodeStats(node_id=node_id)
    before = _counter_snapshot(ring)

    if stages < 1:
        # not enough substeps for even one triangle + closing stage
        logger.info("swept: T=%d < n/2=%d, falling back to halo stepping",
                    substeps, half)
        stats.fell_back = True
        exts = _make_ext_buffers(kernel, n)
        exts[0][1:n + 1] = _init_rows(kernel, node_id * n, n, init)
        if barrier is not None:
            barrier.wait()
        stats.t_begin = time.perf_counter()
        _halo_steps(kernel, ring, exts, n, 0, substeps, node_id * n, stats)
        stats.t_end = time.perf_counter()
        _counter_delta(ring, before, stats)
        field = exts[substeps % len(exts)][1:n + 1].copy()
        return _NodeOut(node_id, node_id * n, substeps, field, stats)

    ar_in, ar_out, amax = _arity_tables(sig)
    triangle_driver, stage_driver = _drivers_for(kernel)
    work0 = np.empty((n + 2, amax))
    work1 = np.empty((n + 2, amax))
    row0 = _init_rows(kernel, node_id * n, n, init)
    if barrier is not None:
        barrier.wait()
    stats.t_begin = time.perf_counter()
    left_edge, right_edge = _fresh_edges(sig, 0, half, amax)
    stats.cells += triangle_driver(row0, S, ar_in, ar_out, n, kernel.consts,
                                   left_edge.stack, right_edge.stack,
                                   work0, work1)
    state = NodeState(node_id=node_id, window_start=node_id * n,
                      base_level=0, left_edge=left_edge,
                      right_edge=right_edge, stage=1)
    window = state.window_start
    flat = None
    flat_row = np.empty((n, amax))
    for c in range(1, stages + 1):
        leftward = (c % 2 == 1) == (first_send == "left")
        base = state.base_level
        if leftward:
            ring.send_left(pack_edge(state.left_edge, sig))
            kept = state.right_edge
            received = unpack_edge(ring.recv_right(), sig)
            window = (window + half) % N
        else:
            ring.send_right(pack_edge(state.right_edge, sig))
            kept = state.left_edge
            received = unpack_edge(ring.recv_left(), sig)
            window = (window - half) % N
        v = edge_merge(kept, received, sig)
        closing = c == stages
        new_base = v.base_level + half
        left_edge, right_edge = _fresh_edges(sig, new_base, half, amax)
        stats.cells += stage_driver(
            v.left_stack, v.right_stack, v.base_level % S, S, ar_in, ar_out,
            n, closing, kernel.consts, left_edge.stack, right_edge.stack,
            flat_row, work0, work1)
        if closing:
            flat = flat_row[:, :sig.frame_arity(new_base)]
            kernel.check_row(flat, new_base, window)
        else:
            state = NodeState(node_id=node_id, window_start=window,
                              base_level=new_base, left_edge=left_edge,
                              right_edge=right_edge, stage=state.stage + 1)
            # a blow-up anywhere inside the stage propagates into the
            # stage's upper boundary, which is exactly the new edges
            kernel.check_row(
                state.left_edge.stack.reshape(-1, amax), new_base, window)
            kernel.check_row(
                state.right_edge.stack.reshape(-1, amax), new_base, window)

    level = stages * half
    if remainder:
        exts = _make_ext_buffers(kernel, n)
        exts[level % len(exts)][1:n + 1] = flat
        _halo_steps(kernel, ring, exts, n, level, remainder, window, stats)
        flat = exts[substeps % len(exts)][1:n + 1]
    stats.t_end = time.perf_counter()
    _counter_delta(ring, before, stats)
    return _NodeOut(node_id, window, substeps, np.ascontiguousarray(flat),
                    stats)


# --- orchestration -----------------------------------------------------------


def _run_node_workers(plan: DecompositionPlan, rings: list[RingTransport],
                      work) -> list[_NodeOut]:
    p = plan.nodes
    if len(rings) != p:
        raise ValueError(f"need {p} ring endpoints, got {len(rings)}")
    if p == 1:
        return [work(0, None)]
    barrier = threading.Barrier(p)
    outs: list[_NodeOut | None] = [None] * p
    errors: list[BaseException] = []
    lock = threading.Lock()

    def runner(i: int):
        try:
            outs[i] = work(i, barrier)
        except BaseException as exc:  # noqa: BLE001 - re-raised below
            with lock:
                errors.append(exc)
            barrier.abort()
            rings[i].abort()

    threads = [threading.Thread(target=runner, args=(i,), name=f"node-{i}")
               for i in range(p)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    if errors:
        primary = next(
            (e for e in errors
             if not isinstance(e, (TransportError, threading.BrokenBarrierError))),
            errors[0])
        raise primary
    return outs  # type: ignore[return-value]


def _assemble(outs: list[_NodeOut], plan: DecompositionPlan,
              kernel: Kernel) -> tuple[np.ndarray, RunInfo]:
    N = plan.total_points
    arity = kernel.signature.frame_arity(outs[0].level)
    fieldout = np.empty((N, arity))
    for out in outs:
        idx = (out.window_start + np.arange(out.field.shape[0])) % N
        fieldout[idx] = out.field
    per_node = [o.stats for o in outs]
    wall = max(s.t_end for s in per_node) - min(s.t_begin for s in per_node)
    info = RunInfo(wall=wall, cells=sum(s.cells for s in per_node),
                   fell_back=any(s.fell_back for s in per_node),
                   per_node=per_node)
    return fieldout, info


def run_classic(kernel: Kernel, plan: DecompositionPlan, substeps: int,
                rings: list[RingTransport] | None = None,
                init=None) -> tuple[np.ndarray, RunInfo]:
    """Spatial decomposition with a two-sided halo exchange every substep."""
    if substeps < 0:
        raise ValueError(f"substeps must be >= 0, got {substeps}")
    if rings is None:
        rings = simlatency_transport(plan.nodes)
    outs = _run_node_workers(
        plan, rings,
        lambda i, barrier: classic_node(kernel, plan, i, rings[i], substeps,
                                        init, barrier))
    return _assemble(outs, plan, kernel)


def run_swept(kernel: Kernel, plan: DecompositionPlan, substeps: int,
              rings: list[RingTransport] | None = None, init=None,
              first_send: str = "left") -> tuple[np.ndarray, RunInfo]:
    """Swept space-time decomposition: one message per n/2 substeps."""
    if substeps < 0:
        raise ValueError(f"substeps must be >= 0, got {substeps}")
    if rings is None:
        rings = simlatency_transport(plan.nodes)
    outs = _run_node_workers(
        plan, rings,
        lambda i, barrier: swept_node(kernel, plan, i, rings[i], substeps,
                                      init, first_send, barrier))
    return _assemble(outs, plan, kernel)


def ring_gather(ring: RingTransport, window_start: int, level: int,
                rows: np.ndarray) -> list[tuple[int, np.ndarray]] | None:
    """Collect every node's slice at node 0 by forwarding around the ring.

    Returns the list of (window_start, rows) pairs on node 0, None on the
    other nodes.  Runs outside the timed stepping loop.
    """
    p = ring.size
    pieces = [(window_start, rows)]
    current = (window_start, level, rows)
    for _ in range(p - 1):
        ring.send_left(pack_gather(*current))
        start, lvl, got = unpack_gather(ring.recv_right())
        if lvl != level:
            raise ProtocolError(f"gather level mismatch: {lvl} != {level}")
        current = (start, lvl, got)
        pieces.append((start, got))
    return pieces if ring.node_id == 0 else None
