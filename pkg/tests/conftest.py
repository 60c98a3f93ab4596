import hypothesis
import pytest

hypothesis.settings.register_profile(
    "ci", max_examples=30, deadline=None,
    suppress_health_check=[hypothesis.HealthCheck.too_slow])
hypothesis.settings.load_profile("ci")


@pytest.fixture(scope="session")
def warm_kernels():
    """Touch every scheme's compiled step path once so JIT time does not
    land inside individual tests."""
    from swept1d.engines import run_serial
    from swept1d.schemes import build_scheme, scheme_names

    kernels = {}
    for name in scheme_names():
        kernel = build_scheme(name, 16)
        run_serial(kernel, 16, 2 * kernel.signature.substeps)
        kernels[name] = kernel
    return kernels
