"""Benchmark harness and CLI.

Runs scheme/engine/transport combinations, sweeps points-per-node, emits
timing CSVs and solution-field dumps, calibrates the per-step-point
compute time, and annotates sweep records with the closed-form model
predictions evaluated at the measured latency and calibrated s.

CSV schema (fixed column order, one record per line):
    scheme, engine, p, n, T, wall_time_s, time_per_substep_s,
    messages_sent, tau_s, s_s, model_swept_s, model_classic_s
`messages_sent` is per node (the maximum across nodes). Sweeps are
resumable: rerunning against an existing CSV appends only the missing
(engine, n) pairs.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import re
import statistics
import sys
import time
from dataclasses import dataclass, replace

import numpy as np

from . import engines, perfmodel, transport as transport_mod
from .core import BlowUpError
from .engines import DecompositionPlan, run_classic, run_serial, run_swept
from .schemes import build_scheme, scheme_names
from .transport import (LatencyProfile, TcpRingTransport, TransportError,
                        loopback_transport, measure_latency, read_endpoints,
                        simlatency_transport)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID_SPEC = 2
EXIT_BLOWUP = 3
EXIT_TRANSPORT = 4

ENGINES = ("serial", "classic", "swept")

CSV_COLUMNS = ["scheme", "engine", "p", "n", "T", "wall_time_s",
               "time_per_substep_s", "messages_sent", "tau_s", "s_s",
               "model_swept_s", "model_classic_s"]


class SpecError(ValueError):
    """The requested run is not a valid specification."""


# --- transport specs ---------------------------------------------------------

_DURATION_RE = re.compile(r"^\s*([0-9.eE+-]+)\s*(s|ms|us|ns)?\s*$")
_DURATION_UNITS = {"s": 1.0, "ms": 1e-3, "us": 1e-6, "ns": 1e-9, None: 1.0}


def parse_duration(text: str) -> float:
    m = _DURATION_RE.match(text)
    if not m:
        raise SpecError(f"cannot parse duration {text!r} (e.g. 150us, 1.5ms)")
    return float(m.group(1)) * _DURATION_UNITS[m.group(2)]


@dataclass(frozen=True)
class LoopbackSpec:
    pass


@dataclass(frozen=True)
class SimSpec:
    tau: float = 0.0
    per_byte: float = 0.0


@dataclass(frozen=True)
class TcpSpec:
    endpoints_path: str
    node_id: int


def parse_transport_spec(text: str):
    """loopback | sim:tau=<dur>[,bw=<bytes/s>] | tcp:<endpoints-file>:<node-id>"""
    if text == "loopback":
        return LoopbackSpec()
    if text == "sim" or text.startswith("sim:"):
        tau, per_byte = 0.0, 0.0
        if ":" in text:
            for part in text.split(":", 1)[1].split(","):
                if not part:
                    continue
                key, _, value = part.partition("=")
                if key == "tau":
                    tau = parse_duration(value)
                elif key == "bw":
                    rate = float(value)
                    if rate <= 0:
                        raise SpecError(f"bandwidth must be positive: {value}")
                    per_byte = 1.0 / rate
                else:
                    raise SpecError(f"unknown sim transport option {key!r}")
        return SimSpec(tau=tau, per_byte=per_byte)
    if text.startswith("tcp:"):
        rest = text[4:]
        path, sep, node = rest.rpartition(":")
        if not sep or not path:
            raise SpecError("tcp transport needs tcp:<endpoints-file>:<node-id>")
        return TcpSpec(endpoints_path=path, node_id=int(node))
    raise SpecError(f"unknown transport {text!r} "
                    "(expected loopback | sim:... | tcp:...)")


# --- run specification ---------------------------------------------------------


@dataclass(frozen=True)
class RunSpec:
    scheme: str
    engine: str
    nodes: int = 1
    points_per_node: int = 64
    substeps: int = 0
    transport: str = "sim:tau=0"
    dt: float | None = None
    seed: int | None = None
    csv_path: str | None = None
    dump_path: str | None = None
    dump_format: str = "csv"
    record_every: int | None = None
    first_send: str = "left"

    @property
    def total_points(self) -> int:
        return self.nodes * self.points_per_node

    def validate(self):
        if self.scheme not in scheme_names():
            raise SpecError(
                f"unknown scheme {self.scheme!r}; catalog: "
                f"{', '.join(scheme_names())}")
        if self.engine not in ENGINES:
            raise SpecError(
                f"unknown engine {self.engine!r}; catalog: {', '.join(ENGINES)}")
        if self.substeps < 0:
            raise SpecError(f"substeps must be >= 0, got {self.substeps}")
        tspec = parse_transport_spec(self.transport)
        if self.engine == "serial":
            if self.nodes != 1:
                raise SpecError("the serial engine runs on exactly one node")
            if isinstance(tspec, TcpSpec):
                raise SpecError("the serial engine does not use a transport")
        if isinstance(tspec, LoopbackSpec) and self.nodes != 1:
            raise SpecError("loopback transport is a single-node self-ring")
        if self.engine != "serial":
            DecompositionPlan(self.total_points, self.nodes)  # raises ValueError
        if self.dump_format not in ("csv", "ppm"):
            raise SpecError(f"unknown dump format {self.dump_format!r}")
        if self.dump_path and self.dump_format == "ppm" and self.engine != "serial":
            raise SpecError("ppm dumps record a time history; use --engine serial")
        return tspec


@dataclass(frozen=True)
class TimingRecord:
    scheme: str
    engine: str
    p: int
    n: int
    T: int
    wall_time_s: float
    time_per_substep_s: float
    messages_sent: int
    tau_s: float
    s_s: float
    model_swept_s: float
    model_classic_s: float

    def to_row(self) -> list[str]:
        out = []
        for col in CSV_COLUMNS:
            val = getattr(self, col)
            out.append(f"{val:.17g}" if isinstance(val, float) else str(val))
        return out

    @classmethod
    def from_row(cls, row: list[str]) -> "TimingRecord":
        kw = {}
        for col, text in zip(CSV_COLUMNS, row):
            if col in ("scheme", "engine"):
                kw[col] = text
            elif col in ("p", "n", "T", "messages_sent"):
                kw[col] = int(text)
            else:
                kw[col] = float(text)
        return cls(**kw)


def read_timing_csv(path) -> list[TimingRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != CSV_COLUMNS:
            raise SpecError(
                f"{path} does not carry the timing CSV schema {CSV_COLUMNS}")
        return [TimingRecord.from_row(row) for row in reader if row]


def append_timing_csv(path, records) -> None:
    fresh = not os.path.exists(path)
    with open(path, "a", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        if fresh:
            writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow(rec.to_row())


# --- field dumps ---------------------------------------------------------------


def dump_field(field: np.ndarray, path, fmt: str = "csv", x: np.ndarray | None = None,
               history: list[np.ndarray] | None = None,
               channels: tuple[int, ...] | None = None) -> None:
    """Write a final field as CSV or a space-time history as binary PPM.

    The PPM has one image row per recorded time slice (earliest at the
    top) and one column per spatial point; three channels map to RGB with
    per-channel min-max normalization, one channel to grayscale.
    """
    if fmt == "csv":
        if x is None:
            x = np.arange(field.shape[0], dtype=float)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("x," + ",".join(f"v{i}" for i in range(field.shape[1])) + "\n")
            for j in range(field.shape[0]):
                cells = [f"{x[j]:.17g}"] + [f"{v:.17g}" for v in field[j]]
                fh.write(",".join(cells) + "\n")
        return
    if fmt != "ppm":
        raise SpecError(f"unknown dump format {fmt!r}")
    if history is None:
        raise SpecError("ppm dumps need a recorded time history")
    cube = np.stack(history)  # (slices, N, arity)
    if channels is None:
        channels = (0, 1, 2) if cube.shape[2] >= 3 else (0,)
    planes = []
    for ch in channels:
        plane = cube[:, :, ch]
        lo, hi = plane.min(), plane.max()
        scale = 255.0 / (hi - lo) if hi > lo else 0.0
        planes.append(((plane - lo) * scale).astype(np.uint8))
    if len(planes) == 1:
        planes = planes * 3
    rgb = np.stack(planes, axis=-1)
    with open(path, "wb") as fh:
        fh.write(f"P6\n{rgb.shape[1]} {rgb.shape[0]}\n255\n".encode())
        fh.write(rgb.tobytes())


def load_field_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        next(fh)  # header
        for line in fh:
            rows.append([float(tok) for tok in line.strip().split(",")])
    data = np.array(rows)
    return data[:, 0], data[:, 1:]


# --- execution -----------------------------------------------------------------


def _build_rings(tspec, p: int, record_timing: bool = False):
    if isinstance(tspec, LoopbackSpec):
        return [loopback_transport()]
    if isinstance(tspec, SimSpec):
        profile = LatencyProfile(one_way_latency=tspec.tau,
                                 per_byte_time=tspec.per_byte)
        return simlatency_transport(p, profile, record_timing=record_timing)
    raise SpecError("tcp rings are built per node process")


def _measure_ring_tau(rings, p: int) -> float:
    if p == 1:
        return measure_latency(rings[0])
    results = [0.0] * p
    import threading

    def worker(i):
        results[i] = measure_latency(rings[i])

    threads = [threading.Thread(target=worker, args=(i,)) for i in range(p)]
    for th in threads:
        th.start()
    for th in threads:
        th.join()
    return statistics.median(results)


_CAL_CACHE: dict[tuple, float] = {}


def calibrate_s(scheme: str, n_points: int = 8192, reps: int = 9,
                substeps: int | None = None, dt: float | None = None,
                seed: int | None = None) -> float:
    """Median latency-free serial cost per step-point, over `reps` runs."""
    if reps < 8:
        raise ValueError(f"need at least 8 calibration reps, got {reps}")
    kernel = build_scheme(scheme, n_points, dt=dt, seed=seed)
    S = kernel.signature.substeps
    if substeps is None:
        substeps = max(4 * S, 192)
    run_serial(kernel, n_points, substeps)  # warm-up (JIT, caches)
    samples = []
    for _ in range(reps):
        _, info = run_serial(kernel, n_points, substeps)
        samples.append(info.wall / (n_points * substeps))
    return statistics.median(samples)


def calibrate_s_cached(scheme: str, **kw) -> float:
    key = (scheme, tuple(sorted(kw.items())))
    if key not in _CAL_CACHE:
        _CAL_CACHE[key] = calibrate_s(scheme, **kw)
    return _CAL_CACHE[key]


def _timed_run(spec: RunSpec, kernel, tspec, rings, warmup: bool = True):
    """Run the engine once (optionally after a warm-up) and time stepping."""
    N = spec.total_points
    if spec.engine == "serial":
        if warmup:
            run_serial(kernel, N, min(spec.substeps, 4 * kernel.signature.substeps))
        return run_serial(kernel, N, spec.substeps,
                          record_every=spec.record_every)
    plan = DecompositionPlan(N, spec.nodes)
    runner = run_classic if spec.engine == "classic" else run_swept
    kw = {} if spec.engine == "classic" else {"first_send": spec.first_send}
    if warmup:
        warm_T = min(spec.substeps, plan.points_per_node)
        runner(kernel, plan, warm_T, rings, **kw)
        for r in rings:
            r.reset_counters()
    return runner(kernel, plan, spec.substeps, rings, **kw)


def run(spec: RunSpec, warmup: bool = True, tau_hint: float | None = None,
        s_hint: float | None = None) -> TimingRecord:
    """Execute one run; write CSV/dump artifacts if the spec asks for them."""
    tspec = spec.validate()
    kernel = build_scheme(spec.scheme, spec.total_points, dt=spec.dt,
                          seed=spec.seed)

    if isinstance(tspec, TcpSpec):
        return _run_tcp_node(spec, kernel, tspec, warmup, s_hint)

    rings = None
    tau = tau_hint if tau_hint is not None else 0.0
    if spec.engine != "serial":
        rings = _build_rings(tspec, spec.nodes)
        if tau_hint is None:
            tau = _measure_ring_tau(rings, spec.nodes)
        for r in rings:
            r.reset_counters()
    field, info = _timed_run(spec, kernel, tspec, rings, warmup=warmup)
    kernel.check_row(field, spec.substeps)

    s_cal = s_hint if s_hint is not None else calibrate_s_cached(
        spec.scheme, dt=spec.dt, seed=spec.seed)
    record = _make_record(spec, info, tau, s_cal)
    _write_artifacts(spec, kernel, field, info, record)
    return record


def _make_record(spec: RunSpec, info, tau: float, s_cal: float) -> TimingRecord:
    T = spec.substeps
    per_sub = info.wall / T if T else 0.0
    n = spec.points_per_node
    model_swept = model_classic = float("nan")
    if tau > 0 and s_cal > 0:
        params = perfmodel.PerfParams(tau=tau, s=s_cal)
        model_swept = perfmodel.time_per_substep(params, n)
        model_classic = perfmodel.classic_time_per_substep(params, n)
    return TimingRecord(
        scheme=spec.scheme, engine=spec.engine, p=spec.nodes, n=n, T=T,
        wall_time_s=info.wall, time_per_substep_s=per_sub,
        messages_sent=info.messages_sent_per_node, tau_s=tau, s_s=s_cal,
        model_swept_s=model_swept, model_classic_s=model_classic)


def _write_artifacts(spec: RunSpec, kernel, field, info, record) -> None:
    if spec.csv_path:
        append_timing_csv(spec.csv_path, [record])
    if spec.dump_path:
        x = np.array([kernel.coord(i) for i in range(field.shape[0])])
        dump_field(field, spec.dump_path, fmt=spec.dump_format, x=x,
                   history=info.history)


def _run_tcp_node(spec: RunSpec, kernel, tspec: TcpSpec, warmup: bool,
                  s_hint: float | None) -> TimingRecord:
    endpoints = read_endpoints(tspec.endpoints_path)
    if len(endpoints) != spec.nodes:
        raise SpecError(
            f"endpoints file lists {len(endpoints)} nodes, --nodes says "
            f"{spec.nodes}")
    ring = TcpRingTransport(endpoints, tspec.node_id)
    try:
        plan = DecompositionPlan(spec.total_points, spec.nodes)
        tau = measure_latency(ring)
        node_fn = engines.classic_node if spec.engine == "classic" \
            else engines.swept_node
        kw = {} if spec.engine == "classic" else {"first_send": spec.first_send}
        if warmup:
            node_fn(kernel, plan, tspec.node_id, ring,
                    min(spec.substeps, plan.points_per_node), **kw)
        ring.reset_counters()
        out = node_fn(kernel, plan, tspec.node_id, ring, spec.substeps, **kw)
        info = engines.RunInfo(
            wall=out.stats.t_end - out.stats.t_begin, cells=out.stats.cells,
            fell_back=out.stats.fell_back, per_node=[out.stats])
        pieces = engines.ring_gather(ring, out.window_start, out.level, out.field)
        s_cal = s_hint if s_hint is not None else calibrate_s_cached(
            spec.scheme, dt=spec.dt, seed=spec.seed)
        record = _make_record(spec, info, tau, s_cal)
        if pieces is not None:  # node 0 assembles and writes
            N = spec.total_points
            field = np.empty((N, kernel.signature.frame_arity(spec.substeps)))
            for start, rows in pieces:
                idx = (start + np.arange(rows.shape[0])) % N
                field[idx] = rows
            kernel.check_row(field, spec.substeps)
            _write_artifacts(spec, kernel, field, info, record)
        return record
    finally:
        ring.close()


def default_sweep_substeps(engine: str, n: int) -> int:
    # swept targets a whole number of stages; classic only needs enough
    # substeps for a stable wall-clock estimate
    return 3 * n if engine == "swept" else 32


def sweep(spec: RunSpec, n_values, engines_list=("classic", "swept"),
          reps: int = 3, substeps: int | None = None) -> list[TimingRecord]:
    """One record per (engine, n); resumes from the spec's CSV if present.

    Each point runs a warm-up pass, then `reps` timed passes keeping the
    fastest.  Model overlay columns evaluate the cost model at the sweep's
    measured tau and calibrated s.
    """
    if len(n_values) < 2:
        raise SpecError("a sweep needs at least two points-per-node values")
    tspec = parse_transport_spec(spec.transport)
    if not isinstance(tspec, (SimSpec, LoopbackSpec)):
        raise SpecError("sweeps run on in-process transports")
    done = set()
    records: list[TimingRecord] = []
    if spec.csv_path and os.path.exists(spec.csv_path):
        for rec in read_timing_csv(spec.csv_path):
            done.add((rec.engine, rec.n))
            records.append(rec)
    s_cal = calibrate_s_cached(spec.scheme, dt=spec.dt, seed=spec.seed)
    rings = _build_rings(tspec, spec.nodes) if spec.nodes >= 1 else None
    tau = _measure_ring_tau(rings, spec.nodes)
    for n in n_values:
        for engine in engines_list:
            if (engine, n) in done:
                continue
            T = substeps if substeps is not None else default_sweep_substeps(engine, n)
            point = replace(spec, engine=engine, points_per_node=int(n),
                            substeps=T, csv_path=None, dump_path=None)
            point.validate()
            kernel = build_scheme(point.scheme, point.total_points,
                                  dt=point.dt, seed=point.seed)
            best = None
            for rep in range(max(1, reps)):
                for r in rings:
                    r.reset_counters()
                field, info = _timed_run(point, kernel, tspec, rings,
                                         warmup=(rep == 0))
                if best is None or info.wall < best[1].wall:
                    best = (field, info)
            kernel.check_row(best[0], T)
            rec = _make_record(point, best[1], tau, s_cal)
            records.append(rec)
            if spec.csv_path:
                append_timing_csv(spec.csv_path, [rec])
            logger.info("sweep %s %s n=%d: %.3gs/substep",
                        point.scheme, engine, n, rec.time_per_substep_s)
    return records


# --- CLI ----------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swept1d-bench",
        description="Run and benchmark 1D PDE integration engines.")
    parser.add_argument("--scheme", required=True,
                        help=f"one of: {', '.join(scheme_names())}")
    parser.add_argument("--engine", default="serial",
                        help="serial | classic | swept (sweeps accept a "
                             "comma-separated list)")
    parser.add_argument("--nodes", type=int, default=1)
    parser.add_argument("--points-per-node", type=int, default=64)
    parser.add_argument("--substeps", type=int, default=None)
    parser.add_argument("--transport", default="sim:tau=0",
                        help="loopback | sim:tau=<dur>[,bw=<bytes/s>] | "
                             "tcp:<endpoints-file>:<node-id>")
    parser.add_argument("--dt", type=float, default=None,
                        help="override the scheme's frozen timestep")
    parser.add_argument("--csv", dest="csv_path", default=None,
                        help="append timing records to this CSV")
    parser.add_argument("--dump", dest="dump_path", default=None,
                        help="write the final field (csv) or history (ppm)")
    parser.add_argument("--format", dest="dump_format", default="csv",
                        choices=("csv", "ppm"))
    parser.add_argument("--record-every", type=int, default=None,
                        help="timesteps between recorded history rows (ppm)")
    parser.add_argument("--sweep", default=None,
                        help="comma-separated points-per-node list")
    parser.add_argument("--reps", type=int, default=3,
                        help="timed repetitions per sweep point")
    parser.add_argument("--calibrate", action="store_true",
                        help="measure seconds per step-point and exit")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--first-send", default="left", choices=("left", "right"),
                        help="orientation of the first swept communication")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("SWEPT1D_LOG", "WARNING").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.scheme not in scheme_names():
            raise SpecError(f"unknown scheme {args.scheme!r}; catalog: "
                            f"{', '.join(scheme_names())}")
        if args.calibrate:
            n_points = args.points_per_node if args.points_per_node != 64 else 8192
            reps = max(args.reps, 8)
            s = calibrate_s(args.scheme, n_points=n_points, reps=reps,
                            dt=args.dt, seed=args.seed)
            print(f"scheme={args.scheme} n_points={n_points} "
                  f"calibrated_s_seconds={s:.6g}")
            return EXIT_OK
        if args.sweep:
            n_values = [int(tok) for tok in args.sweep.split(",") if tok]
            engines_list = tuple(tok.strip() for tok in args.engine.split(","))
            for engine in engines_list:
                if engine not in ("classic", "swept"):
                    raise SpecError(
                        f"sweeps support classic/swept engines, got {engine!r}")
            spec = RunSpec(scheme=args.scheme, engine=engines_list[0],
                           nodes=args.nodes,
                           points_per_node=n_values[0],
                           substeps=args.substeps or 0,
                           transport=args.transport, dt=args.dt,
                           seed=args.seed, csv_path=args.csv_path,
                           first_send=args.first_send)
            records = sweep(spec, n_values, engines_list, reps=args.reps,
                            substeps=args.substeps)
            for rec in records:
                print(",".join(rec.to_row()))
            return EXIT_OK
        if args.substeps is None:
            raise SpecError("--substeps is required for a single run")
        spec = RunSpec(scheme=args.scheme, engine=args.engine,
                       nodes=args.nodes, points_per_node=args.points_per_node,
                       substeps=args.substeps, transport=args.transport,
                       dt=args.dt, seed=args.seed, csv_path=args.csv_path,
                       dump_path=args.dump_path, dump_format=args.dump_format,
                       record_every=args.record_every,
                       first_send=args.first_send)
        record = run(spec)
        print(",".join(record.to_row()))
        return EXIT_OK
    except (SpecError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID_SPEC
    except BlowUpError as exc:
        print(f"numerical blow-up: {exc}", file=sys.stderr)
        return EXIT_BLOWUP
    except TransportError as exc:
        print(f"transport failure: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT


if __name__ == "__main__":
    sys.exit(main())
