import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from twgrid.errors import InvalidStart, NoPath, OverlappingClasses
from twgrid.grid import CellClass, GridSpec, neighbors4
from twgrid.harmonic import (FREE_INIT, PotentialField, build_index_matrix, build_index_matrix_numpy,
                             cascade_initialize, coarsen, extract_path, initialize_field, jacobi_sweep,
                             relax_sweep, relax_sweep_numpy, reset_free, solve)

from oracles import dense_harmonic, goal_connected


def field_from_cls(cls: np.ndarray) -> PotentialField:
    h, w = cls.shape
    return PotentialField(GridSpec(w, h), cls.astype(np.int8).copy())


def random_cls(rng: np.random.Generator, h: int, w: int, density: float) -> np.ndarray:
    cls = np.where(rng.random((h, w)) < density, CellClass.OBSTACLE, CellClass.FREE).astype(np.int8)
    gy, gx = rng.integers(h), rng.integers(w)
    cls[gy, gx] = CellClass.GOAL
    return cls


class TestInitialize:
    def test_empty_sets_are_all_half(self):
        f = initialize_field(GridSpec(4, 3))
        assert np.all(f.phi == 0.5) and f.k == 0

    def test_single_goal(self):
        f = initialize_field(GridSpec(3, 3), [(1, 1)])
        expect = np.full((3, 3), 0.5)
        expect[1, 1] = 0.0
        assert np.array_equal(f.phi, expect)

    def test_overlap_rejected(self):
        with pytest.raises(OverlappingClasses):
            initialize_field(GridSpec(4, 4), [(2, 2)], [(2, 2), (0, 1)])

    @pytest.mark.parametrize("w", [5, 6])
    def test_outer_ring_is_one(self, w):
        f = initialize_field(GridSpec(w, 4), [(0, 0)])
        buf = f.padded_phi
        assert np.all(buf[0] == 1) and np.all(buf[-1] == 1) and np.all(buf[:, 0] == 1)
        assert np.all(buf[:, w + 1:] == 1)


class TestRelaxSweep:
    def test_uniform_interior_cell_is_a_fixed_point(self):
        cls = np.full((5, 5), CellClass.OBSTACLE, dtype=np.int8)
        cls[2, 2] = CellClass.FREE
        f = field_from_cls(cls)
        f.set_class(cls == CellClass.OBSTACLE, CellClass.OBSTACLE)
        f.phi[1:4, 1:4] = 0.5
        _, res = relax_sweep(f)
        assert f.phi[2, 2] == 0.5 and res == 0.0

    def test_fixed_cells_only_gives_zero_residual(self):
        cls = np.full((4, 4), CellClass.OBSTACLE, dtype=np.int8)
        cls[0, 0] = CellClass.GOAL
        f = field_from_cls(cls)
        before = f.phi.copy()
        _, res = relax_sweep(f)
        assert res == 0.0 and np.array_equal(f.phi, before) and f.k == 1

    def test_three_by_three_matches_dense_solve(self):
        f = initialize_field(GridSpec(3, 3), [(1, 1)])
        solve(f, 10000, 1e-15)
        assert np.allclose(f.phi, dense_harmonic(f.cls), atol=1e-12, rtol=0)
        # the edge-adjacent cells share one value, the corners another
        edge = f.phi[[0, 1, 1, 2], [1, 0, 2, 1]]
        assert np.ptp(edge) < 1e-12

    def test_one_sweep_by_hand(self):
        # 1x3 strip: G F F with walls all around
        f = initialize_field(GridSpec(3, 1), [(0, 0)])
        relax_sweep(f)
        # cell (1, 0) is odd parity, so cell (2, 0) (even) goes first: (0.5 + 1 + 1 + 1) / 4
        a = (0.5 + 1 + 1 + 1) / 4
        b = (0.0 + a + 1 + 1) / 4
        assert f.phi[0, 2] == a and f.phi[0, 1] == b

    @pytest.mark.parametrize("shape", [(20, 31), (40, 40), (7, 2), (1, 9)])
    def test_bit_identical_to_numpy_reference(self, shape):
        rng = np.random.default_rng(sum(shape))
        cls = random_cls(rng, *shape, 0.2)
        a, b = field_from_cls(cls), field_from_cls(cls)
        for _ in range(7):
            _, ra = relax_sweep(a)
            _, rb = relax_sweep_numpy(b)
            assert ra == rb
        assert np.array_equal(a.padded_phi, b.padded_phi)

    def test_solve_chain_equals_single_sweeps(self):
        rng = np.random.default_rng(3)
        cls = random_cls(rng, 17, 22, 0.15)
        a, b = field_from_cls(cls), field_from_cls(cls)
        solve(a, 25)
        for _ in range(25):
            relax_sweep(b)
        assert np.array_equal(a.phi, b.phi) and a.k == b.k == 25


class TestSolve:
    def test_zero_sweeps_is_identity(self):
        f = initialize_field(GridSpec(8, 8), [(0, 0)])
        before = f.phi.copy()
        assert solve(f, 0) is f
        assert np.array_equal(f.phi, before) and f.k == 0

    def test_default_runs_exactly_one_hundred_sweeps(self):
        f = initialize_field(GridSpec(256, 256), [(128, 128)])
        solve(f)
        assert f.k == 100

    def test_tolerance_exits_early(self):
        f = initialize_field(GridSpec(6, 6), [(0, 0)])
        solve(f, 100000, 1e-10)
        assert f.k < 100000 and f.residual < 1e-10

    def test_sixteen_square_matches_dense_solve(self):
        f = initialize_field(GridSpec(16, 16), [(0, 0)])
        solve(f, 100000, 1e-12)
        assert np.max(np.abs(f.phi - dense_harmonic(f.cls))) < 1e-9

    def test_jacobi_and_gauss_seidel_share_fixed_point(self):
        rng = np.random.default_rng(11)
        cls = random_cls(rng, 12, 10, 0.2)
        gs, jac = field_from_cls(cls), field_from_cls(cls)
        solve(gs, 200000, 1e-14)
        for _ in range(200000):
            _, r = jacobi_sweep(jac)
            if r < 1e-14:
                break
        assert np.max(np.abs(gs.phi - jac.phi)) < 1e-9

    def test_sealed_component_converges_to_one(self):
        cls = np.zeros((9, 9), dtype=np.int8)
        cls[0, 0] = CellClass.GOAL
        cls[3:8, 3] = cls[3:8, 7] = cls[3, 3:8] = cls[7, 3:8] = CellClass.OBSTACLE
        f = field_from_cls(cls)
        solve(f, 100000, 1e-13)
        assert np.allclose(f.phi[4:7, 4:7], 1.0, atol=1e-9)
        open_ = goal_connected(cls)
        assert np.all((f.phi[open_] > 0) & (f.phi[open_] < 1))

    def test_reset_free(self):
        f = initialize_field(GridSpec(5, 5), [(0, 0)], [(4, 4)])
        solve(f, 10)
        reset_free(f)
        assert np.all(f.phi[f.free_mask()] == FREE_INIT)
        assert f.phi[0, 0] == 0.0 and f.phi[4, 4] == 1.0


def test_sweep_does_not_depend_on_thread_count():
    code = (
        "import numpy as np, hashlib\n"
        "from twgrid.grid import GridSpec\n"
        "from twgrid.harmonic import initialize_field, solve\n"
        "rng = np.random.default_rng(5)\n"
        "obst = [(int(x), int(y)) for x, y in rng.integers(0, 96, (900, 2)) if (x, y) != (3, 4)]\n"
        "f = initialize_field(GridSpec(96, 80), [(3, 4)], [c for c in obst if c[1] < 80])\n"
        "solve(f, 150, workers={w})\n"
        "print(hashlib.sha256(f.phi.tobytes()).hexdigest())\n"
    )
    env = dict(os.environ, NUMBA_NUM_THREADS="4")
    digests = {subprocess.run([sys.executable, "-c", code.format(w=w)], env=env, capture_output=True,
                              text=True, check=True).stdout.strip() for w in (1, 2, 4)}
    assert len(digests) == 1


class TestIndexMatrix:
    def test_uniform_field_points_east(self):
        f = initialize_field(GridSpec(5, 4))
        d = build_index_matrix(f).direction
        assert np.all(d[:, :-1] == 0)
        # the last column has no +x neighbor inside the grid
        assert np.all(d[:, -1] == 1)

    def test_three_by_three_points_at_goal(self):
        f = initialize_field(GridSpec(3, 3), [(1, 1)])
        solve(f, 10000, 1e-15)
        idx = build_index_matrix(f)
        for x in range(3):
            for y in range(3):
                if (x, y) == (1, 1):
                    assert idx.next((x, y)) is None
                elif x == 1 or y == 1:
                    assert idx.next((x, y)) == (1, 1)
        # corners reach the goal through an edge cell within one step
        assert idx.next((0, 0)) == (1, 0)

    def test_obstacle_has_no_successor(self):
        f = initialize_field(GridSpec(4, 4), [(0, 0)], [(2, 2)])
        solve(f, 50)
        assert build_index_matrix(f).next((2, 2)) is None

    @settings(max_examples=25, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(st.integers(0, 2**32 - 1), st.integers(2, 25), st.integers(2, 25))
    def test_kernel_matches_argmin_reference(self, seed, h, w):
        rng = np.random.default_rng(seed)
        f = field_from_cls(random_cls(rng, h, w, 0.25))
        solve(f, int(rng.integers(0, 60)))
        # quantize to force exact ties somewhere
        f.phi[f.free_mask()] = np.round(f.phi[f.free_mask()], 2)
        assert np.array_equal(build_index_matrix(f).direction, build_index_matrix_numpy(f).direction)

    def test_pointer_is_lowest_neighbor(self):
        rng = np.random.default_rng(8)
        f = field_from_cls(random_cls(rng, 20, 20, 0.2))
        solve(f, 300)
        idx = build_index_matrix(f)
        for y, x in np.argwhere(f.free_mask()):
            n = idx.next((x, y))
            assert n in neighbors4((x, y), f.spec)
            assert all(f.phi[n.y, n.x] <= f.phi[m.y, m.x] for m in neighbors4((x, y), f.spec))


class TestExtractPath:
    def test_start_on_goal(self):
        f = initialize_field(GridSpec(3, 3), [(1, 1)])
        solve(f, 100)
        p = extract_path(build_index_matrix(f), f, (1, 1))
        assert p.waypoints.tolist() == [[1.0, 1.0]]

    def test_three_by_three_corner(self):
        f = initialize_field(GridSpec(3, 3), [(1, 1)])
        solve(f, 10000, 1e-15)
        p = extract_path(build_index_matrix(f), f, (0, 0))
        assert p.waypoints.tolist() == [[0, 0], [1, 0], [1, 1]]

    def test_enclosed_start(self):
        cls = np.zeros((7, 7), dtype=np.int8)
        cls[0, 0] = CellClass.GOAL
        cls[2:5, 2] = cls[2:5, 4] = cls[2, 2:5] = cls[4, 2:5] = CellClass.OBSTACLE
        f = field_from_cls(cls)
        solve(f, 2000)
        with pytest.raises(NoPath):
            extract_path(build_index_matrix(f), f, (3, 3))

    def test_start_in_obstacle(self):
        f = initialize_field(GridSpec(4, 4), [(0, 0)], [(3, 3)])
        with pytest.raises(InvalidStart):
            extract_path(build_index_matrix(f), f, (3, 3))
        with pytest.raises(InvalidStart):
            extract_path(build_index_matrix(f), f, (4, 0))

    def test_max_len(self):
        f = initialize_field(GridSpec(20, 1), [(0, 0)])
        solve(f, 100000, 1e-13)
        idx = build_index_matrix(f)
        assert len(extract_path(idx, f, (19, 0))) == 20
        with pytest.raises(NoPath):
            extract_path(idx, f, (19, 0), max_len=10)

    @settings(max_examples=20, deadline=None, suppress_health_check=[HealthCheck.too_slow])
    @given(st.integers(0, 2**32 - 1))
    def test_descent_is_strictly_decreasing(self, seed):
        rng = np.random.default_rng(seed)
        cls = random_cls(rng, 18, 18, 0.2)
        f = field_from_cls(cls)
        solve(f, 200000, 1e-12)
        idx = build_index_matrix(f)
        for y, x in np.argwhere(goal_connected(cls))[:20]:
            p = extract_path(idx, f, (x, y)).waypoints.astype(int)
            vals = f.phi[p[:, 1], p[:, 0]]
            assert np.all(np.diff(vals) < 0)
            assert cls[p[-1, 1], p[-1, 0]] == CellClass.GOAL


class TestCascade:
    def test_coarsen_rules(self):
        cls = np.zeros((4, 5), dtype=np.int8)
        cls[0, 0] = CellClass.GOAL
        cls[0, 1] = CellClass.OBSTACLE
        cls[2, 2] = cls[3, 3] = CellClass.OBSTACLE
        cls[2, 0] = CellClass.OBSTACLE
        c = coarsen(field_from_cls(cls))
        assert c.spec.shape == (2, 3) and c.spec.cell_size == pytest.approx(0.2)
        assert c.cls[0, 0] == CellClass.GOAL        # goal wins over an obstacle child
        assert c.cls[1, 1] == CellClass.OBSTACLE    # two obstacle children
        assert c.cls[1, 0] == CellClass.FREE        # one obstacle child
        # past an odd edge the missing children count as obstacles, like the outside
        assert c.cls[0, 2] == CellClass.OBSTACLE
        cls[0, 4] = CellClass.GOAL
        assert coarsen(field_from_cls(cls)).cls[0, 2] == CellClass.GOAL

    def test_fixed_cells_untouched_and_fixed_point_unchanged(self):
        rng = np.random.default_rng(2)
        cls = random_cls(rng, 32, 32, 0.15)
        f = field_from_cls(cls)
        cascade_initialize(f, levels=3, sweeps=50)
        assert np.all(f.phi[cls == CellClass.GOAL] == 0) and np.all(f.phi[cls == CellClass.OBSTACLE] == 1)
        solve(f, 200000, 1e-13)
        assert np.max(np.abs(f.phi - dense_harmonic(cls))) < 1e-9

    def test_closer_to_solution_than_plain_sweeps(self):
        spec = GridSpec(128, 128)
        fa, fb = initialize_field(spec, [(120, 120)]), initialize_field(spec, [(120, 120)])
        cascade_initialize(fa, levels=4, sweeps=100)
        solve(fb, 100)
        ref = initialize_field(spec, [(120, 120)])
        cascade_initialize(ref, levels=4, sweeps=100)
        solve(ref, 30000)
        assert np.max(np.abs(fa.phi - ref.phi)) < np.max(np.abs(fb.phi - ref.phi))
