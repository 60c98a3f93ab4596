"""Ring-topology message passing: loopback, injected-latency, and TCP.

All three implementations present the same endpoint surface: non-blocking
``send_left``/``send_right`` and blocking ``recv_left``/``recv_right``
(receive what the left/right neighbour sent toward this node), with
reliable, ordered, exactly-once delivery per direction.  On the p = 1
self-ring a ``send_left`` is received by ``recv_right`` on the same node,
and symmetrically.

Latency injection delays availability, not the sender: a message sent at
time t becomes receivable at t + tau + len(payload) * per_byte_time.
Precise sub-millisecond waits use sleep for the bulk and a yielding spin
for the tail, since a bare sleep overshoots by ~100 microseconds on a
stock kernel.
"""

from __future__ import annotations

import hashlib
import os
import queue
import socket
import statistics
import struct
import threading
import time
from collections import deque
from dataclasses import dataclass

WIRE_VERSION = 1

# sleep() overshoot is ~100us; beyond this remainder we sleep short of the
# deadline and yield-spin the rest
_SPIN_WINDOW = 5e-4
_SLEEP_MARGIN = 3e-4


class TransportError(RuntimeError):
    """Connection, delivery or peer failure."""


@dataclass(frozen=True)
class LatencyProfile:
    """One-way delivery delay model: latency plus optional per-byte time."""

    one_way_latency: float = 0.0
    per_byte_time: float = 0.0

    def __post_init__(self):
        if self.one_way_latency < 0 or self.per_byte_time < 0:
            raise ValueError(f"negative latency profile: {self}")

    def delay(self, nbytes: int) -> float:
        return self.one_way_latency + nbytes * self.per_byte_time


def _wait_until(deadline: float) -> None:
    while True:
        remaining = deadline - time.perf_counter()
        if remaining <= 0.0:
            return
        if remaining > _SPIN_WINDOW:
            time.sleep(remaining - _SLEEP_MARGIN)
        else:
            time.sleep(0)  # yield the GIL, ~0.3us per iteration


class RingTransport:
    """Endpoint base: counters plus the four-way send/recv surface."""

    node_id: int = 0
    size: int = 1

    def __init__(self):
        self.messages_sent = 0
        self.messages_received = 0
        self.bytes_sent = 0
        self.bytes_received = 0

    def reset_counters(self):
        self.messages_sent = 0
        self.messages_received = 0
        self.bytes_sent = 0
        self.bytes_received = 0

    def send_left(self, payload: bytes) -> None:
        raise NotImplementedError

    def send_right(self, payload: bytes) -> None:
        raise NotImplementedError

    def recv_left(self) -> bytes:
        raise NotImplementedError

    def recv_right(self) -> bytes:
        raise NotImplementedError

    def abort(self) -> None:
        """Unblock peers after a local failure."""

    def close(self) -> None:
        pass


class LoopbackTransport(RingTransport):
    """Zero-latency single-node self-ring with FIFO semantics."""

    def __init__(self):
        super().__init__()
        self._from_right = deque()  # fed by send_left
        self._from_left = deque()   # fed by send_right
        self._dead = False

    def _send(self, q: deque, payload: bytes):
        if self._dead:
            raise TransportError("loopback endpoint aborted")
        q.append(bytes(payload))
        self.messages_sent += 1
        self.bytes_sent += len(payload)

    def _recv(self, q: deque) -> bytes:
        if self._dead:
            raise TransportError("loopback endpoint aborted")
        if not q:
            raise TransportError(
                "receive on empty loopback queue would deadlock")
        payload = q.popleft()
        self.messages_received += 1
        self.bytes_received += len(payload)
        return payload

    def send_left(self, payload):
        self._send(self._from_right, payload)

    def send_right(self, payload):
        self._send(self._from_left, payload)

    def recv_left(self):
        return self._recv(self._from_left)

    def recv_right(self):
        return self._recv(self._from_right)

    def abort(self):
        self._dead = True


def loopback_transport() -> LoopbackTransport:
    return LoopbackTransport()


class _SimChannel:
    """One direction of one neighbour link: FIFO of delayed messages."""

    def __init__(self, profile: LatencyProfile, fail: threading.Event):
        self._q: queue.Queue = queue.Queue()
        self._profile = profile
        self._fail = fail

    def put(self, payload: bytes) -> float:
        now = time.perf_counter()
        self._q.put((now + self._profile.delay(len(payload)), now, payload))
        return now

    def get(self) -> tuple[bytes, float, float]:
        while True:
            try:
                available_at, sent_at, payload = self._q.get(timeout=0.05)
                break
            except queue.Empty:
                if self._fail.is_set():
                    raise TransportError("a ring peer failed") from None
        _wait_until(available_at)
        return payload, sent_at, available_at


class SimLatencyTransport(RingTransport):
    """In-process endpoint whose deliveries are delayed by a latency profile."""

    def __init__(self, node_id: int, size: int, in_from_left: _SimChannel,
                 in_from_right: _SimChannel, out_to_left: _SimChannel,
                 out_to_right: _SimChannel, fail: threading.Event,
                 record_timing: bool = False):
        super().__init__()
        self.node_id = node_id
        self.size = size
        self._in_from_left = in_from_left
        self._in_from_right = in_from_right
        self._out_to_left = out_to_left
        self._out_to_right = out_to_right
        self._fail = fail
        self.record_timing = record_timing
        self.timing_log: list[tuple[float, float]] = []  # (sent_at, received_at)

    def _send(self, chan: _SimChannel, payload: bytes):
        if self._fail.is_set():
            raise TransportError("a ring peer failed")
        chan.put(bytes(payload))
        self.messages_sent += 1
        self.bytes_sent += len(payload)

    def _recv(self, chan: _SimChannel) -> bytes:
        payload, sent_at, _ = chan.get()
        self.messages_received += 1
        self.bytes_received += len(payload)
        if self.record_timing:
            self.timing_log.append((sent_at, time.perf_counter()))
        return payload

    def send_left(self, payload):
        self._send(self._out_to_left, payload)

    def send_right(self, payload):
        self._send(self._out_to_right, payload)

    def recv_left(self):
        return self._recv(self._in_from_left)

    def recv_right(self):
        return self._recv(self._in_from_right)

    def abort(self):
        self._fail.set()


def simlatency_transport(size: int, profile: LatencyProfile = LatencyProfile(),
                         record_timing: bool = False) -> list[SimLatencyTransport]:
    """Build a connected ring of `size` in-process endpoints."""
    if size < 1:
        raise ValueError(f"ring size must be >= 1, got {size}")
    fail = threading.Event()
    from_left = [_SimChannel(profile, fail) for _ in range(size)]
    from_right = [_SimChannel(profile, fail) for _ in range(size)]
    ring = []
    for i in range(size):
        ring.append(SimLatencyTransport(
            node_id=i, size=size,
            in_from_left=from_left[i], in_from_right=from_right[i],
            out_to_left=from_right[(i - 1) % size],
            out_to_right=from_left[(i + 1) % size],
            fail=fail, record_timing=record_timing))
    return ring


# --- TCP ------------------------------------------------------------------

_FRAME_HEADER = struct.Struct("<I")  # little-endian payload length
_HELLO = struct.Struct("<4sHI16s")   # magic, version, sender id, config hash


def read_endpoints(path) -> list[tuple[str, int]]:
    """Endpoint config file: one host:port per line, line index = node id."""
    endpoints = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            host, _, port = line.rpartition(":")
            endpoints.append((host, int(port)))
    if not endpoints:
        raise TransportError(f"no endpoints found in {path}")
    return endpoints


def config_hash(endpoints: list[tuple[str, int]]) -> bytes:
    blob = "\n".join(f"{h}:{p}" for h, p in endpoints).encode()
    return hashlib.sha256(bytes([WIRE_VERSION]) + blob).digest()[:16]


class _SocketWriter:
    """Per-socket writer thread so sends never block the node worker."""

    def __init__(self, sock: socket.socket, name: str):
        self._sock = sock
        self._q: queue.Queue = queue.Queue()
        self.error: Exception | None = None
        self._thread = threading.Thread(target=self._run, name=name, daemon=True)
        self._thread.start()

    def _run(self):
        while True:
            item = self._q.get()
            if item is None:
                return
            try:
                self._sock.sendall(item)
            except OSError as exc:  # surfaced on the next send()
                self.error = exc
                return

    def send(self, data: bytes):
        if self.error is not None:
            raise TransportError(f"peer connection lost: {self.error}")
        self._q.put(data)

    def close(self):
        self._q.put(None)
        self._thread.join(timeout=5)


def _recv_exact(sock: socket.socket, count: int) -> bytes:
    chunks = []
    while count:
        try:
            chunk = sock.recv(count)
        except socket.timeout:
            raise TransportError("receive timed out") from None
        if not chunk:
            raise TransportError("peer closed the connection mid-run")
        chunks.append(chunk)
        count -= len(chunk)
    return b"".join(chunks)


class TcpRingTransport(RingTransport):
    """One node's endpoint of a TCP ring.

    Each node listens on its configured address, actively connects to its
    right neighbour, and accepts one connection from its left neighbour.
    Frames are a 32-bit little-endian payload length followed by the
    payload bytes.  The handshake carries a hash of the endpoint config so
    mismatched rings refuse to form.
    """

    def __init__(self, endpoints: list[tuple[str, int]], node_id: int,
                 connect_timeout: float | None = None,
                 io_timeout: float = 120.0):
        super().__init__()
        if connect_timeout is None:
            connect_timeout = float(os.environ.get("SWEPT1D_TCP_TIMEOUT", 15.0))
        self.node_id = node_id
        self.size = len(endpoints)
        if not (0 <= node_id < self.size):
            raise TransportError(
                f"node id {node_id} out of range for {self.size} endpoints")
        self._hash = config_hash(endpoints)
        host, port = endpoints[node_id]
        listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        listener.bind((host, port))
        listener.listen(2)
        listener.settimeout(connect_timeout)

        # send our hello without waiting for the reply: every node first
        # dials its right neighbour, then accepts from its left one, so
        # waiting for the acknowledgement before accepting would deadlock
        right_host, right_port = endpoints[(node_id + 1) % self.size]
        self._right = self._connect((right_host, right_port), connect_timeout)
        self._right.settimeout(connect_timeout)
        try:
            self._right.sendall(
                _HELLO.pack(b"SW1D", WIRE_VERSION, self.node_id, self._hash))
        except OSError as exc:
            raise TransportError(f"handshake send failed: {exc}") from None

        try:
            self._left, _ = listener.accept()
        except socket.timeout:
            raise TransportError(
                f"node {node_id}: no connection from left neighbour") from None
        finally:
            listener.close()
        self._left.settimeout(connect_timeout)
        self._check_hello(self._left)
        reply = _recv_exact(self._right, 2)
        if reply != b"OK":
            raise TransportError("handshake rejected by peer")
        for sock in (self._left, self._right):
            sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            sock.settimeout(io_timeout)
        self._left_writer = _SocketWriter(self._left, f"tcp-left-{node_id}")
        self._right_writer = _SocketWriter(self._right, f"tcp-right-{node_id}")

    @staticmethod
    def _connect(addr, timeout: float) -> socket.socket:
        deadline = time.perf_counter() + timeout
        while True:
            sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            sock.settimeout(min(2.0, timeout))
            try:
                sock.connect(addr)
                return sock
            except OSError:
                sock.close()
                if time.perf_counter() >= deadline:
                    raise TransportError(f"could not connect to {addr}") from None
                time.sleep(0.05)

    def _check_hello(self, sock: socket.socket):
        magic, version, sender, digest = _HELLO.unpack(_recv_exact(sock, _HELLO.size))
        expected = (self.node_id - 1) % self.size
        if magic != b"SW1D" or version != WIRE_VERSION or digest != self._hash \
                or sender != expected:
            try:
                sock.sendall(b"NO")
            finally:
                raise TransportError(
                    f"handshake mismatch from peer {sender} "
                    "(config hash or ring layout differs)")
        sock.sendall(b"OK")

    def _send(self, writer: _SocketWriter, payload: bytes):
        writer.send(_FRAME_HEADER.pack(len(payload)) + payload)
        self.messages_sent += 1
        self.bytes_sent += len(payload)

    def _recv(self, sock: socket.socket) -> bytes:
        (length,) = _FRAME_HEADER.unpack(_recv_exact(sock, 4))
        payload = _recv_exact(sock, length)
        self.messages_received += 1
        self.bytes_received += len(payload)
        return payload

    def send_left(self, payload):
        self._send(self._left_writer, payload)

    def send_right(self, payload):
        self._send(self._right_writer, payload)

    def recv_left(self):
        return self._recv(self._left)

    def recv_right(self):
        return self._recv(self._right)

    def abort(self):
        self.close()

    def close(self):
        for writer in (getattr(self, "_left_writer", None),
                       getattr(self, "_right_writer", None)):
            if writer:
                writer.close()
        for sock in (getattr(self, "_left", None), getattr(self, "_right", None)):
            if sock:
                try:
                    sock.close()
                except OSError:
                    pass


def tcp_transport(endpoints_path, node_id: int, **kw) -> TcpRingTransport:
    return TcpRingTransport(read_endpoints(endpoints_path), node_id, **kw)


PING = b"\x07ping"
PONG = b"\x08pong"


def measure_latency(transport: RingTransport, reps: int = 32) -> float:
    """Estimate one-way latency as half the median ping round-trip.

    Every node of the ring must run this concurrently: each sends a ping
    to its right neighbour, echoes the ping it receives from the left, and
    times the echo of its own ping.
    """
    if reps < 16:
        raise ValueError(f"need at least 16 reps, got {reps}")
    rtts = []
    for _ in range(reps):
        begin = time.perf_counter()
        transport.send_right(PING)
        ping = transport.recv_left()
        if not ping.startswith(b"\x07"):
            raise TransportError(f"unexpected message during ping: {ping!r}")
        transport.send_left(PONG)
        pong = transport.recv_right()
        if not pong.startswith(b"\x08"):
            raise TransportError(f"unexpected message during ping: {pong!r}")
        rtts.append(time.perf_counter() - begin)
    return statistics.median(rtts) / 2.0
