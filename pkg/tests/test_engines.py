import math

import numpy as np
import pytest

from swept1d.core import PointFrame
from swept1d.engines import (DecompositionPlan, ProtocolError, compute_stage,
                             edge_extract, edge_merge, initial_triangle,
                             pack_edge, pack_gather, pack_halo, ring_gather,
                             run_classic, run_serial, run_swept, unpack_edge,
                             unpack_gather, unpack_halo)
from swept1d.schemes import build_scheme
from swept1d.transport import simlatency_transport


class TestDecompositionPlan:
    def test_valid(self):
        plan = DecompositionPlan(64, 4)
        assert plan.points_per_node == 16

    @pytest.mark.parametrize("n_total,p", [(10, 3), (12, 4), (4, 2), (6, 3)])
    def test_invalid(self, n_total, p):
        # non-dividing, odd per-node, and per-node < 4 splits all rejected
        with pytest.raises(ValueError):
            DecompositionPlan(n_total, p)


class TestPayloads:
    def test_halo_round_trip(self):
        values = np.array([1.0, -2.5, 3e-7])
        got = unpack_halo(pack_halo(17, values), 17, 3)
        assert np.array_equal(got, values)

    def test_halo_level_mismatch_rejected(self):
        with pytest.raises(ProtocolError):
            unpack_halo(pack_halo(17, np.array([1.0])), 18, 1)

    def test_gather_round_trip(self):
        rows = np.arange(12.0).reshape(4, 3)
        start, level, got = unpack_gather(pack_gather(5, 9, rows))
        assert (start, level) == (5, 9)
        assert np.array_equal(got, rows)

    def test_edge_round_trip_with_arity_cycling(self, warm_kernels):
        kernel = warm_kernels["euler"]
        plan = DecompositionPlan(8, 1)
        state, _ = initial_triangle(kernel, plan, 0)
        edge = edge_extract(state, "left")
        got = unpack_edge(pack_edge(edge, kernel.signature), kernel.signature)
        assert got.side == "left"
        assert got.base_level == 0
        assert got.arities == edge.arities
        for a, b in zip(got.cols, edge.cols):
            assert np.array_equal(a, b)

    def test_edge_payload_scalar_counts(self, warm_kernels):
        # single-variable one-substep scheme on n=4: 2 levels x 2 points x 1
        plan = DecompositionPlan(4, 1)
        state, _ = initial_triangle(warm_kernels["godunov"], plan, 0)
        assert edge_extract(state, "left").payload_scalars() == 4
        # cycling arities on n=8: sum over 4 levels of 2 * arity(level)
        kernel = warm_kernels["euler"]
        plan = DecompositionPlan(8, 1)
        state, _ = initial_triangle(kernel, plan, 0)
        expected = 2 * sum(kernel.signature.frame_arity(l) for l in range(4))
        assert edge_extract(state, "right").payload_scalars() == expected


class TestSweptGeometry:
    def test_triangle_edges_match_serial_levels(self, warm_kernels):
        # the triangle's boundary frames are exactly the serial solution at
        # the corresponding points and levels (minus nothing: every level
        # including 0 contributes two frames per side)
        kernel = warm_kernels["ks"]
        n = 8
        plan = DecompositionPlan(n, 1)
        state, cells = initial_triangle(kernel, plan, 0)
        assert cells == sum(n - 2 * l for l in range(1, n // 2))
        for l in range(n // 2):
            level_field, _ = run_serial(kernel, n, l)
            left = edge_extract(state, "left").cols[l]
            right = edge_extract(state, "right").cols[l]
            assert np.array_equal(left, level_field[l:l + 2])
            assert np.array_equal(right, level_field[n - l - 2:n - l])

    def test_merging_own_edges_reproduces_triangle_boundary(self, warm_kernels):
        kernel = warm_kernels["gradient-chain"]
        plan = DecompositionPlan(8, 1)
        state, _ = initial_triangle(kernel, plan, 0)
        v = edge_merge(state.right_edge, state.left_edge, kernel.signature)
        assert v.base_level == 0
        assert v.span == 4
        assert np.array_equal(v.left_stack, state.right_edge.stack)
        assert np.array_equal(v.right_stack, state.left_edge.stack)

    def test_diamond_cell_census(self, warm_kernels):
        for n in (4, 8, 16):
            kernel = warm_kernels["ks"]
            plan = DecompositionPlan(n, 1)
            state, _ = initial_triangle(kernel, plan, 0)
            v = edge_merge(state.right_edge, state.left_edge, kernel.signature)
            _, _, _, cells = compute_stage(kernel, v, n)
            assert cells == n * n // 2

    def test_closing_stage_flattens_to_uniform_level(self, warm_kernels):
        kernel = warm_kernels["ks"]
        n = 8
        plan = DecompositionPlan(n, 1)
        state, _ = initial_triangle(kernel, plan, 0)
        v = edge_merge(state.right_edge, state.left_edge, kernel.signature)
        _, _, flat, _ = compute_stage(kernel, v, n, closing=True)
        ref, _ = run_serial(kernel, n, n // 2)
        # p=1, leftward send: the flattened window starts at n/2
        rolled = np.roll(ref, -(n // 2), axis=0)
        assert np.array_equal(flat, rolled)

    def test_merge_rejects_same_side(self, warm_kernels):
        plan = DecompositionPlan(8, 1)
        state, _ = initial_triangle(warm_kernels["ks"], plan, 0)
        with pytest.raises(ProtocolError):
            edge_merge(state.left_edge, state.left_edge)

    def test_merge_rejects_level_skew(self, warm_kernels):
        kernel = warm_kernels["ks"]
        plan = DecompositionPlan(8, 1)
        state, _ = initial_triangle(kernel, plan, 0)
        skewed = unpack_edge(
            pack_edge(edge_extract(state, "left"), kernel.signature),
            kernel.signature)
        object.__setattr__(skewed, "base_level", 4)
        with pytest.raises(ProtocolError):
            edge_merge(state.right_edge, skewed)

    def test_node_state_profile(self, warm_kernels):
        plan = DecompositionPlan(8, 1)
        state, _ = initial_triangle(warm_kernels["ks"], plan, 0)
        assert state.profile() == "triangle"


class TestEngineRuns:
    def test_t0_returns_initial_field(self, warm_kernels):
        kernel = warm_kernels["euler"]
        plan = DecompositionPlan(16, 2)
        ref, _ = run_serial(kernel, 16, 0)
        fc, _ = run_classic(kernel, plan, 0)
        fs, _ = run_swept(kernel, plan, 0)
        assert np.array_equal(ref, fc)
        assert np.array_equal(ref, fs)

    def test_equivalence_spot_check(self, warm_kernels):
        kernel = warm_kernels["ks"]
        plan = DecompositionPlan(48, 4)
        ref, _ = run_serial(kernel, 48, 30)
        fc, _ = run_classic(kernel, plan, 30)
        fs, _ = run_swept(kernel, plan, 30)
        assert np.array_equal(ref, fc)
        assert np.array_equal(ref, fs)

    def test_flipped_orientation_equivalent(self, warm_kernels):
        kernel = warm_kernels["euler"]
        plan = DecompositionPlan(32, 2)
        ref, _ = run_serial(kernel, 32, 40)
        flipped, _ = run_swept(kernel, plan, 40, first_send="right")
        assert np.array_equal(ref, flipped)

    def test_custom_init_override(self, warm_kernels):
        kernel = warm_kernels["gradient-chain"]
        plan = DecompositionPlan(16, 2)
        bump = lambda i, x: PointFrame((math.exp(-40 * (x - 0.5) ** 2),), 0)
        ref, _ = run_serial(kernel, 16, 9, init=bump)
        fs, _ = run_swept(kernel, plan, 9, init=bump)
        assert np.array_equal(ref, fs)

    def test_seeded_random_initial_condition_is_node_independent(self):
        kernel = build_scheme("godunov", 32, seed=7)
        plan = DecompositionPlan(32, 4)
        ref, _ = run_serial(kernel, 32, 24)
        fs, _ = run_swept(kernel, plan, 24)
        assert np.array_equal(ref, fs)
        again = build_scheme("godunov", 32, seed=7)
        ref2, _ = run_serial(again, 32, 24)
        assert np.array_equal(ref, ref2)

    def test_fallback_below_half_window_is_reported(self, warm_kernels):
        kernel = warm_kernels["ks"]
        plan = DecompositionPlan(32, 2)
        ref, _ = run_serial(kernel, 32, 5)
        fs, info = run_swept(kernel, plan, 5)  # 5 < n/2 = 8
        assert info.fell_back
        assert np.array_equal(ref, fs)

    def test_every_cell_computed_exactly_once(self, warm_kernels):
        kernel = warm_kernels["gradient-chain"]
        for p, n, T in ((2, 8, 20), (4, 8, 17), (1, 16, 24)):
            plan = DecompositionPlan(p * n, p)
            _, info = run_swept(kernel, plan, T)
            assert info.cells == p * n * T
            _, info_c = run_classic(kernel, plan, T)
            assert info_c.cells == p * n * T

    def test_message_economy(self, warm_kernels):
        kernel = warm_kernels["ks"]
        n = 16
        half = n // 2
        plan = DecompositionPlan(4 * n, 4)
        # exact multiple of the half window: stages = T / (n/2) sends per node
        for q in (2, 5, 10):
            T = q * half
            _, info = run_swept(kernel, plan, T)
            assert info.messages_sent_per_node == q
            assert info.messages_received_per_node == q
            expected = math.ceil((T - (half - 1)) / half)
            assert info.messages_sent_per_node == expected
        # a remainder of r substeps adds 2r halo sends
        _, info = run_swept(kernel, plan, 3 * half + 2)
        assert info.messages_sent_per_node == 3 + 4
        # classic: two halo sends per substep
        _, info_c = run_classic(kernel, plan, 40)
        assert info_c.messages_sent_per_node == 80
        assert info_c.messages_received_per_node == 80

    def test_determinism_across_runs_and_latency(self, warm_kernels):
        from swept1d.transport import LatencyProfile
        kernel = warm_kernels["euler"]
        plan = DecompositionPlan(16, 2)
        a, _ = run_swept(kernel, plan, 16)
        b, _ = run_swept(kernel, plan, 16)
        slow, _ = run_swept(kernel, plan, 16,
                            rings=simlatency_transport(
                                2, LatencyProfile(one_way_latency=3e-4)))
        assert np.array_equal(a, b)
        assert np.array_equal(a, slow)

    def test_ring_gather_collects_all_slices(self, warm_kernels):
        import threading
        kernel = warm_kernels["ks"]
        rings = simlatency_transport(3)

        results = [None] * 3

        def worker(i):
            rows = np.full((4, 1), float(i))
            results[i] = ring_gather(rings[i], 4 * i, 0, rows)

        threads = [threading.Thread(target=worker, args=(i,)) for i in range(3)]
        for th in threads:
            th.start()
        for th in threads:
            th.join()
        assert results[1] is None and results[2] is None
        pieces = dict(results[0])
        assert set(pieces) == {0, 4, 8}
        for start, rows in pieces.items():
            assert np.all(rows == start / 4)
