import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from swept1d.perfmodel import (PerfParams, classic_time_per_substep, optimize,
                               params_from_presets, preset, presets,
                               time_per_substep)

from oracles import brute_force_argmin


class TestParams:
    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            PerfParams(tau=0.0, s=1.0)
        with pytest.raises(ValueError):
            PerfParams(tau=1.0, s=-1.0)

    def test_s_must_match_rates(self):
        with pytest.raises(ValueError):
            PerfParams(tau=1.0, s=2.0, flop_per_step_point=3.0, flops=10.0)
        p = PerfParams.from_rates(1e-4, 200.0, 10e9)
        assert p.s == 200.0 / 10e9


class TestCostFunctions:
    def test_boundary_case_tau_equals_8s(self):
        assert time_per_substep(PerfParams(tau=8.0, s=1.0), 4) == 8.0

    def test_tabulated_point(self):
        p = PerfParams(tau=150e-6, s=0.3e-9)
        assert time_per_substep(p, 1000) == pytest.approx(6.0e-7, rel=1e-12)

    def test_latency_free_limit_is_linear(self):
        p = PerfParams(tau=1e-30, s=2e-9)
        assert time_per_substep(p, 10 ** 6) == pytest.approx(2e-3, rel=1e-6)

    def test_classic_floor(self):
        p = PerfParams(tau=1e-4, s=1e-30)
        for n in (1, 10, 1000):
            assert classic_time_per_substep(p, n) == pytest.approx(1e-4, rel=1e-12)

    def test_classic_tabulated_point(self):
        p = PerfParams(tau=150e-6, s=0.3e-9)
        assert classic_time_per_substep(p, 100) == pytest.approx(150.03e-6,
                                                                 rel=1e-9)

    def test_classic_dominates_swept_at_optimum_when_barrier_broken(self):
        for exponent in np.linspace(1.1, 7.5, 40):
            p = PerfParams(tau=1e-4, s=1e-4 / 8.0 / 10 ** exponent)
            pred = optimize(p)
            assert pred.barrier_broken
            assert classic_time_per_substep(p, pred.best_integer_n) > pred.t_star


class TestOptimize:
    def test_exact_square_point(self):
        pred = optimize(PerfParams(tau=150e-6, s=0.3e-9))
        assert pred.n_star == pytest.approx(1000.0, rel=1e-12)
        assert pred.best_integer_n == 1000
        assert pred.t_star == pytest.approx(6e-7, rel=1e-12)

    def test_infiniband_gpu_point_is_subnanosecond(self):
        pred = optimize(PerfParams(tau=0.7e-6, s=75e-15))
        assert pred.t_star == pytest.approx(6.48e-10, rel=1e-2)

    def test_brute_force_over_random_parameter_space(self):
        rng = np.random.default_rng(42)
        for _ in range(100):
            tau = 10.0 ** rng.uniform(-6, -3)
            ratio = 10.0 ** rng.uniform(1, 8)
            s = tau / ratio
            pred = optimize(PerfParams(tau=tau, s=s))
            n_bf, cost_bf = brute_force_argmin(tau, s)
            assert abs(n_bf - pred.n_star) <= 1.0
            assert n_bf == pred.best_integer_n
            if pred.n_star >= 10:
                # the continuous optimum value equals sqrt(8 tau s)
                at_star = time_per_substep(PerfParams(tau=tau, s=s), pred.n_star)
                assert at_star == pytest.approx(pred.t_star, rel=1e-9)
                assert cost_bf >= pred.t_star * (1 - 1e-12)

    def test_tie_breaks_toward_smaller_n(self):
        p = PerfParams(tau=6.0, s=1.0)  # n* = sqrt(12): f(3) = f(4) = 7
        assert time_per_substep(p, 3) == time_per_substep(p, 4) == 7.0
        assert optimize(p).best_integer_n == 3

    def test_stationary_at_n_star(self):
        for tau, s in ((1e-4, 1e-9), (5e-5, 3e-12), (2e-3, 7e-8)):
            p = PerfParams(tau=tau, s=s)
            n_star = optimize(p).n_star
            h = 1e-4 * n_star
            deriv = (time_per_substep(p, n_star + h)
                     - time_per_substep(p, n_star - h)) / (2 * h)
            scale = s + 2 * tau / n_star ** 2
            assert abs(deriv) <= 1e-6 * scale

    @given(st.floats(1e-7, 1e-2), st.floats(1e-15, 1e-6))
    def test_closed_form_identities(self, tau, s):
        pred = optimize(PerfParams(tau=tau, s=s))
        assert pred.t_star ** 2 == pytest.approx(8 * tau * s, rel=1e-12)
        assert pred.barrier_broken == (tau > 8 * s)
        assert (pred.break_factor > 1) == pred.barrier_broken

    def test_boundary_not_broken(self):
        pred = optimize(PerfParams(tau=8.0, s=1.0))
        assert not pred.barrier_broken
        assert pred.break_factor == 1.0

    def test_scaling_covariance(self):
        base = optimize(PerfParams(tau=1e-4, s=1e-9))
        scaled = optimize(PerfParams(tau=7 * 1e-4, s=7 * 1e-9))
        assert scaled.n_star == pytest.approx(base.n_star, rel=1e-12)
        assert scaled.t_star == pytest.approx(7 * base.t_star, rel=1e-12)


class TestPresets:
    def test_catalog_size(self):
        catalog = presets()
        assert len([p for p in catalog.values() if p.tau is not None]) == 4
        assert len([p for p in catalog.values() if p.s is not None]) == 6

    @pytest.mark.parametrize("name,tau", [
        ("ec2", 150e-6), ("gigabit-ethernet", 50e-6),
        ("100g-ethernet", 5e-6), ("infiniband-fdr", 0.7e-6)])
    def test_latency_values(self, name, tau):
        assert preset(name).tau == tau

    @pytest.mark.parametrize("name,s", [
        ("nehalem-fe-system", 400e-9), ("nehalem-fv-system", 20e-9),
        ("nehalem-fd-scalar", 0.3e-9), ("summit-fe-system", 100e-12),
        ("summit-fv-system", 5e-12), ("summit-fd-scalar", 75e-15)])
    def test_compute_values(self, name, s):
        assert preset(name).s == s

    def test_unknown_preset_lists_catalog(self):
        with pytest.raises(KeyError, match="ec2"):
            preset("warp-drive")

    def test_combined_params(self):
        p = params_from_presets("ec2", "nehalem-fd-scalar")
        assert p.tau == 150e-6
        assert p.s == 0.3e-9
        assert optimize(p).best_integer_n == 1000
