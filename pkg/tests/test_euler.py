import numpy as np
import pytest

from swept1d.core import BlowUpError, PointFrame, validate_signature
from swept1d.engines import run_serial
from swept1d.schemes import EulerState, build_scheme
from swept1d.schemes.euler import SOD_HIGH, SOD_LOW, EulerKernel, euler_kernel
from swept1d.schemes.riemann import riemann_profile


class TestEulerState:
    def test_primitive_round_trip(self):
        st = EulerState.from_primitive(0.5, 2.0, 0.3)
        assert st.rho == 0.5
        assert st.velocity == pytest.approx(2.0)
        assert st.pressure == pytest.approx(0.3)

    def test_rejects_nonpositive_density(self):
        with pytest.raises(ValueError):
            EulerState(rho=-1.0, mom=0.0, ene=1.0)

    def test_rejects_nonpositive_pressure(self):
        with pytest.raises(ValueError):
            EulerState(rho=1.0, mom=0.0, ene=0.0)


class TestEulerKernel:
    def test_signature(self):
        assert validate_signature(EulerKernel.signature).ok
        assert EulerKernel.signature.arity == ((3, 6), (6, 6), (6, 9), (9, 3))

    def test_uniform_state_unchanged_forever(self):
        kernel = euler_kernel(1.4, dx=0.1, domain_length=6.4)
        st = EulerState.from_primitive(0.7, 0.3, 1.1)
        uniform = lambda i, x: PointFrame((st.rho, st.mom, st.ene), 0)
        field, _ = run_serial(kernel, 64, 4 * 50, init=uniform)
        assert np.allclose(field, [st.rho, st.mom, st.ene], rtol=0, atol=1e-13)

    def test_sod_density_error_vs_exact_solution(self):
        # mirror tube on [0, 2): the interface at x = 1.5 carries the
        # canonical low-left / high-right problem and its waves stay inside
        # [1, 2) until t = 0.2
        n = 800
        kernel = build_scheme("euler", n)
        t_target = 0.2
        steps = round(t_target / kernel.dt)
        t_final = steps * kernel.dt
        field, _ = run_serial(kernel, n, 4 * steps)
        x = np.array([kernel.coord(i) for i in range(n)])
        window = (x >= 1.0) & (x < 2.0)
        low = EulerState.from_primitive(*SOD_LOW)
        high = EulerState.from_primitive(*SOD_HIGH)
        exact = riemann_profile(low, high, x[window], t_final, x0=1.5)
        l1 = np.sum(np.abs(field[window, 0] - exact[:, 0])) * kernel.dx
        assert l1 < 0.02

    def test_conservation_over_1000_steps(self):
        n = 64
        kernel = build_scheme("euler", n)
        start, _ = run_serial(kernel, n, 0)
        field, _ = run_serial(kernel, n, 4 * 1000)
        energy_scale = start[:, 2].sum() * kernel.dx
        for c, name in enumerate(("mass", "momentum", "energy")):
            total0 = start[:, c].sum() * kernel.dx
            drift = abs(field[:, c].sum() * kernel.dx - total0)
            scale = max(abs(total0), energy_scale)
            assert drift < 1e-12 * scale, f"{name} drift {drift}"

    def test_mirror_symmetry_of_reconstruction_orientations(self):
        # reflecting the grid and negating velocity must reflect the result
        n = 128
        kernel = build_scheme("euler", n)
        field, _ = run_serial(kernel, n, 4 * 20)
        mirrored = lambda i, x: (lambda v: PointFrame((v[0], -v[1], v[2]), 0))(
            kernel.init(n - 1 - i, kernel.coord(n - 1 - i)).values)
        reflected, _ = run_serial(kernel, n, 4 * 20, init=mirrored)
        assert np.array_equal(reflected[::-1, 0], field[:, 0])
        assert np.array_equal(reflected[::-1, 1], -field[:, 1])
        assert np.array_equal(reflected[::-1, 2], field[:, 2])

    def test_blow_up_reports_cell_and_level(self):
        n = 64
        kernel = build_scheme("euler", n, dt=1.0)  # absurd timestep
        with pytest.raises(BlowUpError) as err:
            run_serial(kernel, n, 4 * 200)
        assert err.value.point_index is not None
        assert err.value.level is not None
