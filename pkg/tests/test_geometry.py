import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from npcd.geometry import (
    Box3D,
    Rect2D,
    contains,
    from_local,
    iou_2d,
    iou_3d,
    iou_bev,
    project_box_to_image,
    project_points,
    to_local,
)

from oracles import local_coords, monte_carlo_iou, point_in_box

CAM = np.array([[100.0, 0.0, 320.0, 0.0],
                [0.0, 100.0, 96.0, 0.0],
                [0.0, 0.0, 1.0, 0.0]])
IMAGE = (640, 192)


def random_box(rng, z_range=(3.0, 40.0)):
    center = np.array([rng.uniform(-8, 8), rng.uniform(-1, 2),
                       rng.uniform(*z_range)])
    half = rng.uniform(0.3, 2.2, 3)
    return Box3D(center, half, rng.uniform(-math.pi, math.pi))


class TestToLocal:
    def test_center_maps_to_origin(self):
        box = Box3D(np.array([1.0, 2.0, 3.0]), np.array([1.0, 1.0, 1.0]), 0.7)
        assert np.allclose(to_local(box.center, box), 0.0)

    def test_axis_aligned_identity(self):
        box = Box3D(np.array([5.0, -1.0, 9.0]), np.array([2.0, 1.0, 1.0]), 0.0)
        q = to_local(box.center + np.array([1.0, 2.0, 3.0]), box)
        assert np.allclose(q, [1.0, 2.0, 3.0])

    def test_matches_rotation_matrix_oracle(self):
        rng = np.random.default_rng(42)
        box = Box3D(np.array([3.0, 0.5, 12.0]), np.array([2.0, 0.8, 1.0]),
                    math.pi / 2)
        for _ in range(50):
            p = rng.uniform(-20, 20, 3)
            assert np.allclose(to_local(p, box),
                               local_coords(p, box.center, box.yaw), atol=1e-9)

    def test_round_trip(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            box = random_box(rng)
            p = rng.uniform(-30, 30, 3)
            assert np.allclose(from_local(to_local(p, box), box), p, atol=1e-9)


class TestContains:
    def test_unit_cube_center(self):
        box = Box3D(np.zeros(3), np.array([0.5, 0.5, 0.5]), 0.0)
        assert contains(np.zeros(3), box)

    def test_face_point_is_outside(self):
        # strict inequalities: a point exactly on a face does not count
        box = Box3D(np.zeros(3), np.array([0.5, 0.5, 0.5]), 0.0)
        assert not contains(np.array([0.5, 0.0, 0.0]), box)
        assert not contains(np.array([0.0, 0.5, 0.0]), box)
        assert not contains(np.array([0.0, 0.0, -0.5]), box)

    def test_agrees_with_rotation_oracle_bulk(self):
        rng = np.random.default_rng(7)
        box = random_box(rng)
        pts = rng.uniform(-25, 25, (10_000, 3))
        got = contains(pts, box)
        want = np.array([point_in_box(p, box.center, box.half_extents, box.yaw)
                         for p in pts])
        assert np.array_equal(got, want)

    @settings(max_examples=60, deadline=None)
    @given(
        yaw=st.floats(-math.pi, math.pi),
        rot=st.floats(-math.pi, math.pi),
        shift=st.tuples(*[st.floats(-10, 10) for _ in range(3)]),
        point=st.tuples(*[st.floats(-4, 4) for _ in range(3)]),
    )
    def test_rigid_transform_invariance(self, yaw, rot, shift, point):
        """Rotating the frame about the vertical axis and translating both
        the point and the box together never changes containment."""
        box = Box3D(np.array([1.0, -0.5, 2.0]), np.array([1.5, 0.9, 0.7]), yaw)
        p = np.asarray(point, dtype=np.float64)
        q = to_local(p, box)
        margin = np.min(np.abs(np.abs(q) - box.half_extents))
        c, s = math.cos(rot), math.sin(rot)
        rot_m = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
        t = np.asarray(shift, dtype=np.float64)
        box2 = Box3D(rot_m @ box.center + t, box.half_extents, box.yaw + rot)
        p2 = rot_m @ p + t
        if margin > 1e-6:
            assert contains(p, box) == contains(p2, box2)


class TestProjection:
    def test_on_axis_box_projects_symmetrically(self):
        f, c = 100.0, 64.0
        cam = np.array([[f, 0.0, c, 0.0], [0.0, f, c, 0.0], [0.0, 0.0, 1.0, 0.0]])
        box = Box3D(np.array([0.0, 0.0, 10.0]), np.array([1.0, 1.0, 1.0]), 0.0)
        rect = project_box_to_image(box, cam, (128, 128))
        assert rect is not None
        assert rect.u_min + rect.u_max == pytest.approx(2 * c, abs=1e-9)
        assert rect.v_min + rect.v_max == pytest.approx(2 * c, abs=1e-9)

    def test_translation_moves_rect(self):
        box = Box3D(np.array([0.0, 0.0, 15.0]), np.array([1.0, 1.0, 1.0]), 0.4)
        moved = box.translated(np.array([2.0, 0.0, 0.0]))
        r1 = project_box_to_image(box, CAM, IMAGE)
        r2 = project_box_to_image(moved, CAM, IMAGE)
        assert r2.u_min > r1.u_min and r2.u_max > r1.u_max

    def test_behind_camera_rejected(self):
        box = Box3D(np.array([0.0, 0.0, 0.5]), np.array([1.0, 1.0, 1.0]), 0.0)
        assert project_box_to_image(box, CAM, IMAGE) is None

    def test_rect_matches_dense_surface_sampling(self):
        rng = np.random.default_rng(12)
        for _ in range(10):
            box = random_box(rng, z_range=(6.0, 25.0))
            rect = project_box_to_image(box, CAM, IMAGE)
            if rect is None:
                continue
            # densely sample the box surface and project every sample
            grid = np.linspace(-1.0, 1.0, 41)
            faces = []
            for axis in range(3):
                for side in (-1.0, 1.0):
                    a, b = np.meshgrid(grid, grid)
                    coords = np.zeros((a.size, 3))
                    others = [k for k in range(3) if k != axis]
                    coords[:, axis] = side
                    coords[:, others[0]] = a.ravel()
                    coords[:, others[1]] = b.ravel()
                    faces.append(coords * box.half_extents)
            local = np.vstack(faces)
            world = from_local(local, box)
            uv, w = project_points(world, CAM)
            uv = uv[w > 0]
            u_lo = max(float(uv[:, 0].min()), 0.0)
            u_hi = min(float(uv[:, 0].max()), IMAGE[0])
            v_lo = max(float(uv[:, 1].min()), 0.0)
            v_hi = min(float(uv[:, 1].max()), IMAGE[1])
            assert rect.u_min == pytest.approx(u_lo, abs=1.0)
            assert rect.u_max == pytest.approx(u_hi, abs=1.0)
            assert rect.v_min == pytest.approx(v_lo, abs=1.0)
            assert rect.v_max == pytest.approx(v_hi, abs=1.0)


class TestIoU:
    def test_identical_boxes(self):
        box = Box3D(np.array([1.0, 0.0, 8.0]), np.array([2.0, 0.8, 0.9]), 0.3)
        assert iou_bev(box, box) == pytest.approx(1.0, abs=1e-9)
        assert iou_3d(box, box) == pytest.approx(1.0, abs=1e-9)

    def test_disjoint_boxes(self):
        a = Box3D(np.array([0.0, 0.0, 5.0]), np.ones(3), 0.0)
        b = Box3D(np.array([10.0, 0.0, 5.0]), np.ones(3), 0.9)
        assert iou_bev(a, b) == 0.0
        assert iou_3d(a, b) == 0.0

    def test_rotated_square_analytic_value(self):
        # two unit squares, same center, 45 degrees apart:
        # intersection is the regular octagon of area 2(sqrt(2)-1)
        a = Box3D(np.zeros(3), np.array([0.5, 0.5, 0.5]), 0.0)
        b = Box3D(np.zeros(3), np.array([0.5, 0.5, 0.5]), math.pi / 4)
        inter = 2.0 * (math.sqrt(2.0) - 1.0)
        assert iou_bev(a, b) == pytest.approx(inter / (2.0 - inter), abs=1e-9)
        assert iou_bev(a, b) == pytest.approx(0.7071, abs=1e-4)

    def test_monte_carlo_agreement(self):
        rng = np.random.default_rng(100)
        for _ in range(8):
            a = random_box(rng)
            b = Box3D(a.center + rng.uniform(-1.5, 1.5, 3),
                      rng.uniform(0.4, 2.0, 3), rng.uniform(-math.pi, math.pi))
            mc = monte_carlo_iou(a.corners(), b.corners(),
                                 lambda p: contains(p, a),
                                 lambda p: contains(p, b),
                                 1_000_000, rng)
            assert iou_3d(a, b) == pytest.approx(mc, abs=2e-3)

    @settings(max_examples=40, deadline=None)
    @given(
        dx=st.floats(-3, 3), dz=st.floats(-3, 3),
        yaw_a=st.floats(-math.pi, math.pi), yaw_b=st.floats(-math.pi, math.pi),
    )
    def test_symmetry_and_range(self, dx, dz, yaw_a, yaw_b):
        a = Box3D(np.array([0.0, 0.0, 10.0]), np.array([1.5, 0.8, 0.9]), yaw_a)
        b = Box3D(np.array([dx, 0.0, 10.0 + dz]), np.array([1.0, 0.7, 1.2]), yaw_b)
        v1, v2 = iou_bev(a, b), iou_bev(b, a)
        assert 0.0 <= v1 <= 1.0
        assert v1 == pytest.approx(v2, abs=1e-9)
        w1, w2 = iou_3d(a, b), iou_3d(b, a)
        assert 0.0 <= w1 <= 1.0
        assert w1 == pytest.approx(w2, abs=1e-9)

    def test_iou_2d(self):
        a = Rect2D(0.0, 0.0, 10.0, 10.0)
        b = Rect2D(5.0, 5.0, 15.0, 15.0)
        assert iou_2d(a, a) == pytest.approx(1.0)
        assert iou_2d(a, b) == pytest.approx(25.0 / 175.0)
        assert iou_2d(a, Rect2D(20.0, 20.0, 30.0, 30.0)) == 0.0


class TestBoxValidation:
    def test_rejects_nonpositive_extents(self):
        with pytest.raises(ValueError):
            Box3D(np.zeros(3), np.array([1.0, 0.0, 1.0]), 0.0)

    def test_yaw_normalized(self):
        box = Box3D(np.zeros(3), np.ones(3), 3.0 * math.pi)
        assert -math.pi < box.yaw <= math.pi
        assert box.yaw == pytest.approx(math.pi)

    def test_axes_orthonormal(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            box = random_box(rng)
            assert np.allclose(box.axes @ box.axes.T, np.eye(3), atol=1e-12)
