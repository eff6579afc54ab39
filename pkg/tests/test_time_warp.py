import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from twgrid.errors import GoalSwallowed, NoSolution
from twgrid.grid import CellClass, GridSpec
from twgrid.harmonic import initialize_field
from twgrid.time_warp import (WarpGeometry, assign_warp, ellipse_lhs, footprint_mask, footprint_radius,
                              mark_future_obstacle, prediction_horizon, warp_number, warp_radius)

from oracles import ellipse_residual, warp_radius_bisection

finite = st.floats(-30, 30, allow_nan=False)
angles = st.floats(-math.pi, math.pi, allow_nan=False)


class TestWarpRadius:
    def test_at_robot(self):
        assert warp_radius(WarpGeometry(2.0, 3.0, 0.7), (2.0, 3.0)) == 0.0

    def test_on_axis_ahead(self):
        r = warp_radius(WarpGeometry(0, 0, 0), (1.9, 0))
        assert abs(r - 1.0) < 1e-12
        assert abs(ellipse_residual((0, 0, 0), (1.9, 0), r) - 1.0) < 1e-9

    def test_lateral(self):
        r = warp_radius(WarpGeometry(0, 0, 0), (0.9, 0.25))
        assert abs(r - 1.0) < 1e-12

    @pytest.mark.parametrize("d", [0.01, 0.5, 3.0, 17.0])
    def test_closed_forms(self, d):
        g = WarpGeometry(0, 0, 0)
        assert abs(warp_radius(g, (d, 0)) - d / 1.9) < 1e-9
        assert abs(warp_radius(g, (-d, 0)) - 10 * d) < 1e-9

    def test_r_max(self):
        with pytest.raises(NoSolution):
            warp_radius(WarpGeometry(0, 0, 0, r_max=5.0), (-1.0, 0.0))

    @settings(max_examples=300)
    @given(finite, finite, angles, finite, finite)
    def test_matches_bisection_and_residual(self, x, y, th, ox, oy):
        g = WarpGeometry(x, y, th)
        r = warp_radius(g, (ox, oy))
        if math.hypot(ox - x, oy - y) < 1e-6:
            return
        ref = warp_radius_bisection((x, y, th), (ox, oy))
        assert abs(r - ref) <= 1e-9 * max(1.0, ref)
        assert abs(ellipse_residual((x, y, th), (ox, oy), r) - 1.0) < 1e-9
        assert abs(ellipse_lhs(g, (ox, oy), r) - 1.0) < 1e-9

    @given(st.floats(0.01, 20.0), st.floats(0.01, 20.0))
    def test_monotone_ahead(self, a, b):
        g = WarpGeometry(0, 0, 0)
        if a < b:
            assert warp_radius(g, (a, 0)) < warp_radius(g, (b, 0))

    @given(finite, finite, angles, finite, finite, angles, finite, finite)
    def test_rigid_motion_invariance(self, x, y, th, ox, oy, rot, tx, ty):
        c, s = math.cos(rot), math.sin(rot)

        def move(px, py):
            return c * px - s * py + tx, s * px + c * py + ty

        r0 = warp_radius(WarpGeometry(x, y, th), (ox, oy))
        r1 = warp_radius(WarpGeometry(*move(x, y), th + rot), move(ox, oy))
        assert abs(r0 - r1) <= 1e-9 * max(1.0, r0)

    def test_label_decreases_for_approach(self):
        g = WarpGeometry(0, 0, 0)
        labels = [warp_number(warp_radius(g, (d, 0.0)), g) for d in np.linspace(12.0, 0.0, 200)]
        assert all(b <= a for a, b in zip(labels, labels[1:]))
        assert labels[0] > labels[-1] == 1


class TestWarpNumber:
    @pytest.mark.parametrize("r, t", [(0.0, 1), (1.0, 1), (2.3, 3), (1.0000001, 2)])
    def test_values(self, r, t):
        assert warp_number(r, WarpGeometry(0, 0, 0)) == t

    def test_spacing(self):
        assert warp_number(2.3, WarpGeometry(0, 0, 0, spacing=0.5)) == 5


class TestHorizon:
    def test_equal_speeds(self):
        assert prediction_horizon(3, 0.4, 0.4) == 3

    def test_faster_obstacle(self):
        assert prediction_horizon(4, 0.4, 0.8) == 2

    def test_stationary_clamped(self):
        assert prediction_horizon(3, 0.4, 0.0, horizon_max=20) == 20
        assert prediction_horizon(1, 0.4, 1e-9, horizon_max=7) == 7

    def test_rejects_stopped_robot(self):
        with pytest.raises(ValueError):
            prediction_horizon(1, 0.0, 1.0)

    def test_assign(self):
        w = assign_warp(3, WarpGeometry(0, 0, 0), (1.9, 0.0), 0.4, 0.4)
        assert w.obstacle_id == 3 and w.t == 1 and w.horizon_steps == 1
        assert abs(w.r_x - 1.0) < 1e-12 and w.speed_ratio == 1.0


class TestMarking:
    def test_small_disk(self):
        f = initialize_field(GridSpec(20, 20))
        # center on a cell center: the disk of 1.5 cells holds the 3x3 block
        m = footprint_mask(f, (1.05, 1.05), np.zeros((4, 4)), 0.15)
        X, Y = f.spec.cell_centers()
        brute = np.hypot(X - 1.05, Y - 1.05) <= 0.15 + 1e-12
        assert np.array_equal(m, brute) and m.sum() == 9

    def test_gaussian_radius(self):
        P = np.diag([0.04, 0.04, 1, 1])
        assert math.isclose(footprint_radius(P, 0.1), math.sqrt(2 * math.log(2) * 0.04))
        assert footprint_radius(P, 1.0) == 1.0

    def test_gaussian_threshold_matches_definition(self):
        f = initialize_field(GridSpec(40, 40))
        P = np.diag([0.09, 0.05, 1, 1])
        m = footprint_mask(f, (2.0, 2.0), P, 0.0)
        X, Y = f.spec.cell_centers()
        d2 = (X - 2.0) ** 2 + (Y - 2.0) ** 2
        sigma2 = 0.5 * (0.09 + 0.05)
        assert np.array_equal(m, np.exp(-d2 / (2 * sigma2)) >= 0.5 - 1e-12)

    def test_goal_survives(self):
        f = initialize_field(GridSpec(20, 20), [(10, 10)])
        with pytest.warns(GoalSwallowed):
            mark_future_obstacle(f, (1.05, 1.05), np.zeros((4, 4)), 0.3)
        assert f.cls[10, 10] == CellClass.GOAL and f.phi[10, 10] == 0.0
        assert f.cls[10, 11] == CellClass.OBSTACLE and f.phi[10, 11] == 1.0

    def test_union_and_idempotent(self):
        f = initialize_field(GridSpec(30, 30))
        mark_future_obstacle(f, (1.0, 1.0), np.zeros((4, 4)), 0.3)
        mark_future_obstacle(f, (1.3, 1.0), np.zeros((4, 4)), 0.3)
        once = f.cls.copy()
        expect = footprint_mask(f, (1.0, 1.0), np.zeros((4, 4)), 0.3) | footprint_mask(
            f, (1.3, 1.0), np.zeros((4, 4)), 0.3)
        assert np.array_equal(once == CellClass.OBSTACLE, expect)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            mark_future_obstacle(f, (1.3, 1.0), np.zeros((4, 4)), 0.3)
        assert np.array_equal(f.cls, once)

    def test_never_unmarks_static(self):
        f = initialize_field(GridSpec(30, 30), [(0, 0)], [(25, y) for y in range(30)])
        static = f.obstacle_mask()
        mark_future_obstacle(f, (1.5, 1.5), np.diag([0.1, 0.1, 1, 1]), 0.3)
        assert np.all(f.obstacle_mask()[static])

    def test_off_grid_footprint(self):
        f = initialize_field(GridSpec(10, 10))
        assert not footprint_mask(f, (50.0, 50.0), np.zeros((4, 4)), 0.3).any()
