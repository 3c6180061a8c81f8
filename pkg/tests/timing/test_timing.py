"""Tests for the inspection-time model and the time matrix."""
import dataclasses
import math
import time
from unittest import mock

import numpy as np
import pytest

from probepath.config import PlanConfig
from probepath.errors import MatrixFormatError, OrientationInfeasible
from probepath.geometry import Point3
from probepath.localpath import LocalPath, Rule, Waypoint, WaypointKind
from probepath.scene import NodeCloud, Panel, SceneSpec, Wall, generate_scene
from probepath.timing import (
    DEPOT_ID,
    StylusOrientation,
    build_time_matrix,
    load_matrix_csv,
    required_orientation,
    rotation_angle,
    rotation_time,
    save_matrix_csv,
    tour_time,
    transition_time,
)

R2 = 1 / math.sqrt(2)


def _path(points, feasible=True, from_mp="a", to_mp="b", transition=0.0):
    kinds = [WaypointKind.AP] + [WaypointKind.SMP] * (len(points) - 2) + [WaypointKind.AP]
    waypoints = tuple(Waypoint(Point3.of(p), k) for p, k in zip(points, kinds))
    rule = Rule.DIRECT if len(points) == 2 else Rule.RULE1
    return LocalPath(from_mp, to_mp, waypoints, feasible, rule if feasible else Rule.NONE, transition, 0)


class TestTransitionTime:
    def test_length_over_velocity(self):
        path = _path([(0, 0, 0), (0, 0, 50), (0, 120, 50)])
        assert transition_time(path, 85.0) == 2.0

    def test_infeasible_path(self):
        path = _path([(0, 0, 0), (1, 0, 0)], feasible=False)
        assert transition_time(path, 85.0, a_inf=1e6) == 1e6

    def test_velocity_must_be_positive(self):
        with pytest.raises(ValueError):
            transition_time(_path([(0, 0, 0), (1, 0, 0)]), 0.0)


class TestOrientation:
    @pytest.mark.parametrize(
        "normal, a, b",
        [
            ((0, 0, 1), 0.0, 0.0),
            ((1, 0, 0), 90.0, 180.0),
            ((0, 1, 0), 90.0, -90.0),
            ((math.sin(math.radians(40)), 0, math.cos(math.radians(40))), 37.5, 180.0),
            ((-R2, 0, R2), 45.0, 0.0),
        ],
    )
    def test_snapped_to_index_grid(self, make_mp, normal, a, b):
        o = required_orientation(make_mp("m", (0, 0, 0), normal))
        assert o.a == pytest.approx(a)
        assert o.b == pytest.approx(b)

    def test_stylus_points_against_normal(self, make_mp):
        mp = make_mp("m", (0, 0, 0), (0, 1, 0))
        direction = required_orientation(mp).direction
        assert tuple(direction) == pytest.approx((0, -1, 0), abs=1e-12)

    def test_underside_is_out_of_reach(self, make_mp):
        with pytest.raises(OrientationInfeasible):
            required_orientation(make_mp("m", (0, 0, 0), (0, 0, -1)))

    def test_snap_error_beyond_cone(self, make_mp):
        # 40 deg tilt snaps to 37.5: 2.5 deg off
        mp = make_mp("m", (0, 0, 0), (math.sin(math.radians(40)), 0, math.cos(math.radians(40))))
        required_orientation(mp, theta_max=3.0)
        with pytest.raises(OrientationInfeasible):
            required_orientation(mp, theta_max=1.0)


class TestRotation:
    def test_angle_sums_both_axes(self):
        assert rotation_angle(StylusOrientation(0, 0), StylusOrientation(22.5, 7.5)) == 30.0

    def test_swivel_takes_the_short_way(self):
        assert rotation_angle(StylusOrientation(45, 170), StylusOrientation(45, -170)) == pytest.approx(20.0)

    def test_time_outside_cone(self):
        cfg = PlanConfig(theta_max=10.0)
        to = StylusOrientation(22.5, 7.5)
        normal = -np.asarray(to.direction)
        assert rotation_time(StylusOrientation(0, 0), to, normal, cfg) == pytest.approx(30.3)

    def test_no_rotation_inside_cone(self):
        to = StylusOrientation(7.5, 0)
        normal = -np.asarray(to.direction)
        assert rotation_time(StylusOrientation(0, 0), to, normal, PlanConfig()) == 0.0


@pytest.fixture
def floor_scene(make_mp, floor_nodes):
    cloud = NodeCloud(floor_nodes(0.0, (0.0, 100.0), (0.0, 100.0)))
    mps = [make_mp("p1", (20, 20, 0), (0, 0, 1)),
           make_mp("p2", (80, 20, 0), (0, 0, 1)),
           make_mp("p3", (50, 80, 0), (0, 0, 1))]
    return cloud, mps


class TestBuildTimeMatrix:
    def test_clear_panel_is_euclidean(self, floor_scene):
        cloud, mps = floor_scene
        cfg = PlanConfig(origin=(0.0, 0.0, 100.0))
        T = build_time_matrix(mps, cloud, cfg)
        assert T.values.shape == (4, 4)
        assert T.ids == ["p1", "p2", "p3"]
        assert np.array_equal(T.values, T.values.T)
        assert np.all(np.diag(T.values) == 0)
        assert T.values[0, 1] == pytest.approx(math.dist((0, 0, 100), (20, 20, 5)) / 85)
        assert T.values[1, 2] == pytest.approx(60 / 85)
        assert T.values[2, 3] == pytest.approx(math.dist((80, 20), (50, 80)) / 85)
        for i in range(4):
            for q in range(i + 1, 4):
                path, transition, rotation = T.leg(i, q)
                assert path.rule_used is Rule.DIRECT
                assert rotation == 0.0
                assert transition == pytest.approx(T.values[i, q])

    def test_faster_probe_halves_every_entry(self, floor_scene):
        cloud, mps = floor_scene
        cfg = PlanConfig(origin=(0.0, 0.0, 100.0))
        slow = build_time_matrix(mps, cloud, cfg)
        fast = build_time_matrix(mps, cloud, dataclasses.replace(cfg, velocity=170.0))
        assert fast.values == pytest.approx(slow.values / 2)

    def test_parallel_build_matches_serial(self, floor_scene):
        cloud, mps = floor_scene
        cfg = PlanConfig(origin=(0.0, 0.0, 100.0))
        serial = build_time_matrix(mps, cloud, cfg)
        parallel = build_time_matrix(mps, cloud, dataclasses.replace(cfg, workers=3))
        assert np.array_equal(serial.values, parallel.values)

    def test_rotation_is_added_between_tilted_mps(self, make_mp, far_cloud):
        a = make_mp("a", (0, 0, 0), (0, 0, 1))
        b = make_mp("b", (100, 0, 0), (-R2, 0, R2))
        cfg = PlanConfig(origin=(0.0, 0.0, 100.0))
        T = build_time_matrix([a, b], far_cloud, cfg)
        q_b = (100 - 5 * R2, 0, 5 * R2)
        assert T.values[1, 2] == pytest.approx(math.dist((0, 0, 5), q_b) / 85 + 45.3)
        _, _, rotation = T.leg(1, 2)
        assert rotation == pytest.approx(45.3)
        # leaving the park position never costs a rotation
        assert T.leg(0, 2)[2] == 0.0

    def test_local_time_cap(self, make_mp, far_cloud):
        mps = [make_mp("a", (0, 0, 0), (0, 0, 1)), make_mp("b", (85 * 201, 0, 0), (0, 0, 1))]
        cfg = PlanConfig()
        T = build_time_matrix(mps, far_cloud, cfg)
        assert T.values[1, 2] == cfg.a_inf
        assert T.is_inf(1, 2)
        assert not T.is_inf(0, 1)

    def test_unreachable_orientation_gives_infinite_row(self, make_mp, far_cloud):
        mps = [make_mp("a", (0, 0, 0), (0, 0, 1)),
               make_mp("b", (50, 0, 0), (0, 0, 1)),
               make_mp("under", (25, 0, -10), (0, 0, -1))]
        cfg = PlanConfig()
        T = build_time_matrix(mps, far_cloud, cfg)
        assert all(T.values[3, q] == cfg.a_inf for q in range(3))
        assert all(T.values[q, 3] == cfg.a_inf for q in range(3))
        assert not T.is_inf(1, 2)

    def test_cheaper_direction_is_kept_for_both_entries(self, make_mp, far_cloud):
        a = make_mp("a", (0, 0, 0), (0, 0, 1))
        b = make_mp("b", (50, 0, 0), (0, 0, 1))

        def fake(mp_i, mp_j, cloud, cfg):
            points = [(mp_i.position[0], 0, 5), (mp_j.position[0], 0, 5)]
            cost = 3.0 if mp_i.id == "a" else 1.0
            return _path(points, from_mp=mp_i.id, to_mp=mp_j.id, transition=cost)

        with mock.patch("probepath.timing.plan_local_path", side_effect=fake):
            T = build_time_matrix([a, b], far_cloud, PlanConfig())
        assert T.values[1, 2] == T.values[2, 1] == 1.0
        path, transition, _ = T.leg(1, 2)
        assert (path.from_mp, path.to_mp) == ("a", "b")
        assert transition == 1.0
        back, _, _ = T.leg(2, 1)
        assert (back.from_mp, back.to_mp) == ("b", "a")

    def test_ties_keep_the_forward_path(self, make_mp, far_cloud):
        a = make_mp("a", (0, 0, 0), (0, 0, 1))
        b = make_mp("b", (50, 0, 0), (0, 0, 1))
        forward = _path([(0, 0, 5), (50, 0, 5)], transition=1.0)
        backward = _path([(50, 0, 5), (0, 0, 5)], from_mp="b", to_mp="a", transition=1.0)
        with mock.patch("probepath.timing.plan_local_path", side_effect=[forward, backward]):
            T = build_time_matrix([a, b], far_cloud, PlanConfig())
        assert T.leg(1, 2)[0] is forward

    def test_needs_an_mp(self, far_cloud):
        with pytest.raises(ValueError):
            build_time_matrix([], far_cloud, PlanConfig())

    def test_fifty_mp_panel_and_wall(self, make_mp):
        cloud, _ = generate_scene(SceneSpec([
            Panel("panel", (0, 0, 0), 4.0, width=200, height=100),
            Wall("wall", (100, 0, 0), 4.0, width=100, height=30),
        ]))
        mps = [make_mp(f"x{x}y{y}", (x, y, 0), (0, 0, 1))
               for x in (20, 40, 60, 75, 85, 115, 125, 140, 160, 180) for y in (10, 30, 50, 70, 90)]
        started = time.perf_counter()
        T = build_time_matrix(mps, cloud, PlanConfig(origin=(100.0, 50.0, 150.0)))
        assert time.perf_counter() - started < 30.0
        assert T.values.shape == (51, 51)
        assert np.array_equal(T.values, T.values.T)
        assert np.all(np.diag(T.values) == 0.0)
        assert np.all(T.values < T.a_inf)
        crossing = T.leg(1, 50)[0]
        assert crossing.feasible and crossing.smp_count > 0


class TestTourTime:
    def test_closed_tour(self, matrix_from_values):
        T = matrix_from_values([[0, 1, 2], [1, 0, 3], [2, 3, 0]])
        assert tour_time((1, 2), T) == (6.0, False)
        assert tour_time((2, 1), T) == (6.0, False)

    def test_tainted_by_inaccessible_leg(self, matrix_from_values):
        T = matrix_from_values([[0, 1, 2], [1, 0, 1e6], [2, 1e6, 0]])
        cost = tour_time((1, 2), T)
        assert cost.tainted
        assert cost.total == pytest.approx(1e6 + 3)

    @pytest.mark.parametrize("order", [(1,), (1, 1), (0, 1, 2), (1, 3)])
    def test_rejects_non_permutations(self, matrix_from_values, order):
        T = matrix_from_values([[0, 1, 2], [1, 0, 3], [2, 3, 0]])
        with pytest.raises(ValueError):
            tour_time(order, T)


def test_reduced_matrix_keeps_depot_first(matrix_from_values):
    T = matrix_from_values([[0, 1, 2, 3], [1, 0, 4, 5], [2, 4, 0, 6], [3, 5, 6, 0]])
    R = T.reduced([3, 1])
    assert R.ids == ["3", "1"]
    assert R.values.tolist() == [[0, 3, 1], [3, 0, 5], [1, 5, 0]]
    assert R.id_of(0) == DEPOT_ID
    assert R.id_of(1) == "3"


def test_reduced_matrix_reorients_legs(floor_scene):
    cloud, mps = floor_scene
    T = build_time_matrix(mps, cloud, PlanConfig(origin=(0.0, 0.0, 100.0)))
    R = T.reduced([3, 1])
    path, _, _ = R.leg(1, 2)
    assert (path.from_mp, path.to_mp) == ("p3", "p1")
    assert R.values[1, 2] == T.values[1, 3]


class TestMatrixCsv:
    def test_save_and_load(self, tmp_path, matrix_from_values):
        T = matrix_from_values([[0, 0.1, 1e6], [0.1, 0, 2.5], [1e6, 2.5, 0]])
        path = tmp_path / "T.csv"
        save_matrix_csv(T, str(path))
        assert path.read_text(encoding="utf-8").splitlines()[0] == "0.0,0.1,inf"
        loaded = load_matrix_csv(str(path), a_inf=1e6)
        assert np.array_equal(loaded.values, T.values)
        assert loaded.ids == ["1", "2"]

    @pytest.mark.parametrize(
        "text, message",
        [
            ("0,1\n1,x\n", r":2: not a number"),
            ("0,1,2\n1,0\n", r":2: expected 3 columns"),
            ("0,1,2\n1,0,2\n", "square"),
            ("0\n", "square"),
            ("1,1\n1,0\n", "diagonal"),
            ("0,-1\n-1,0\n", "diagonal"),
        ],
    )
    def test_format_errors(self, tmp_path, text, message):
        path = tmp_path / "T.csv"
        path.write_text(text, encoding="utf-8")
        with pytest.raises(MatrixFormatError, match=message):
            load_matrix_csv(str(path))

    def test_missing_file(self, tmp_path):
        with pytest.raises(MatrixFormatError):
            load_matrix_csv(str(tmp_path / "nope.csv"))
