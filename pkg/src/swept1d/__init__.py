"""swept1d: space-time decomposition engines for explicit 1D PDEs.

The package advances compact-stencil discretizations with three
interchangeable engines (a serial oracle, per-substep halo exchange, and
the swept space-time decomposition that communicates once per n/2
substeps), over pluggable ring transports with optional injected latency,
plus the closed-form communication cost model and a benchmark CLI.
"""

from .core import (BlowUpError, Kernel, KernelContractError, PointFrame,
                   SchemeSignature, StencilView, apply_kernel,
                   validate_signature)
from .engines import (DecompositionPlan, LeadingEdge, NodeState, ProtocolError,
                      RunInfo, VFrontier, edge_extract, edge_merge,
                      run_classic, run_serial, run_swept)
from .perfmodel import (ModelPrediction, PerfParams, classic_time_per_substep,
                        optimize, params_from_presets, preset, presets,
                        time_per_substep)
from .transport import (LatencyProfile, LoopbackTransport, RingTransport,
                        SimLatencyTransport, TcpRingTransport, TransportError,
                        loopback_transport, measure_latency,
                        simlatency_transport, tcp_transport)

__version__ = "0.1.0"

__all__ = [
    "BlowUpError", "DecompositionPlan", "Kernel", "KernelContractError",
    "LatencyProfile", "LeadingEdge", "LoopbackTransport", "ModelPrediction",
    "NodeState", "PerfParams", "PointFrame", "ProtocolError", "RingTransport",
    "RunInfo", "SchemeSignature", "SimLatencyTransport", "StencilView",
    "TcpRingTransport", "TransportError", "VFrontier", "apply_kernel",
    "classic_time_per_substep", "edge_extract", "edge_merge",
    "loopback_transport", "measure_latency", "optimize",
    "params_from_presets", "preset", "presets", "run_classic", "run_serial",
    "run_swept", "simlatency_transport", "tcp_transport", "time_per_substep",
    "validate_signature",
]
