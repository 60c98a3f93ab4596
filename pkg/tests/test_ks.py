import math

import numpy as np
import pytest

from swept1d.core import KernelContractError, PointFrame, validate_signature
from swept1d.engines import run_serial
from swept1d.schemes.ks import UNIT_LENGTH, KSKernel, KSParams, ks_kernel

from oracles import ks_spectral


class TestKSParams:
    def test_default_length_is_exactly_periodic(self):
        params = KSParams.default(256)
        assert params.length == pytest.approx(256.0 * math.pi)
        periods = params.length / UNIT_LENGTH
        assert abs(periods - round(periods)) < 1e-9

    def test_non_periodic_length_rejected(self):
        with pytest.raises(KernelContractError):
            KSParams(length=100.0, n_points=64, dt=1e-4)

    def test_ic_is_periodic_on_the_default_grid(self):
        kernel = ks_kernel(KSParams.default(128))
        left = kernel.init(0, kernel.coord(0)).values[0]
        wrap = kernel.init(128, kernel.coord(128)).values[0]
        assert left == pytest.approx(wrap, abs=1e-12)

    def test_signature(self):
        assert validate_signature(KSKernel.signature).ok
        assert KSKernel.signature.arity == ((1, 2), (2, 2), (2, 3), (3, 1))


class TestKSDynamics:
    def test_zero_field_is_fixed_point(self):
        kernel = ks_kernel(KSParams.default(64))
        zero = lambda i, x: PointFrame((0.0,), 0)
        field, _ = run_serial(kernel, 64, 4 * 25, init=zero)
        assert np.array_equal(field, np.zeros((64, 1)))

    def test_constant_field_stays_constant(self):
        kernel = ks_kernel(KSParams.default(64))
        const = lambda i, x: PointFrame((1.75,), 0)
        field, _ = run_serial(kernel, 64, 4 * 25, init=const)
        assert np.allclose(field, 1.75, atol=1e-12)

    def test_matches_spectral_oracle_to_t1(self):
        # one IC period, resolved grid; truncation differences between the
        # second-order stencils and the spectral oracle stay well under
        # the tolerance at this resolution
        n = 256
        dt = 1e-5
        params = KSParams(length=UNIT_LENGTH, n_points=n, dt=dt)
        kernel = ks_kernel(params)
        steps = round(1.0 / dt)
        field, _ = run_serial(kernel, n, 4 * steps)
        u0 = np.array([kernel.init(i, kernel.coord(i)).values[0]
                       for i in range(n)])
        reference = ks_spectral(u0, params.length, dt, steps)
        assert np.max(np.abs(field[:, 0] - reference)) < 1e-3

    def test_single_mode_growth_rate_matches_dispersion(self):
        # linearization: a mode cos(qx) grows like exp((q^2 - q^4) t)
        n = 256
        params = KSParams.default(n, multiplier=1)
        kernel = ks_kernel(params)
        mode = 4
        q = 2.0 * math.pi * mode / params.length
        expected_rate = q * q - q ** 4
        eps = 1e-4
        ic = lambda i, x: PointFrame((eps * math.cos(q * x),), 0)
        t_final = 2.0
        steps = round(t_final / params.dt)
        field, _ = run_serial(kernel, n, 4 * steps, init=ic)
        amplitude = np.abs(field[:, 0]).max()
        measured = math.log(amplitude / eps) / (steps * params.dt)
        assert measured == pytest.approx(expected_rate, rel=0.05)
