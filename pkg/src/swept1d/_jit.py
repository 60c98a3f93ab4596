"""Compilation shim for the per-substep stencil loops.

Every scheme writes its substeps as plain scalar loops over a row of
points; `stencil_jit` compiles them with numba when it is available and
falls back to running them interpreted otherwise.  The fallback keeps the
package correct (all equivalence and physics tests still pass) but is far
too slow for the latency-benchmark targets, so numba is a hard dependency
in practice.

``nogil=True`` lets the per-node worker threads overlap their computing
stages, which is what makes the in-process multi-node harness behave like
actual parallel nodes.  ``fastmath`` stays off: engines are compared
bitwise, so the compiled arithmetic must be plain IEEE-754 in program
order.
"""

try:
    from numba import njit as _njit

    HAVE_NUMBA = True

    def stencil_jit(fn):
        return _njit(cache=True, nogil=True, fastmath=False)(fn)

    def closure_jit(fn):
        # factories close over another jitted function; numba cannot key
        # its on-disk cache on closure cells, so never cache these
        return _njit(cache=False, nogil=True, fastmath=False)(fn)

except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def stencil_jit(fn):
        return fn

    def closure_jit(fn):
        return fn
