"""Oriented 3D box algebra: local-frame transforms, containment, projection, IoU.

Boxes live in the camera frame (x right, y down, z forward) and rotate about
the vertical (y) axis only. yaw = 0 puts the box's long axis along camera x.
"""

from dataclasses import dataclass, field
import math

import numpy as np


@dataclass(frozen=True)
class Rect2D:
    """Axis-aligned pixel rectangle, continuous coordinates, max exclusive."""

    u_min: float
    v_min: float
    u_max: float
    v_max: float

    def __post_init__(self):
        if self.u_min > self.u_max or self.v_min > self.v_max:
            raise ValueError(f"degenerate rect {self}")

    @property
    def width(self) -> float:
        return self.u_max - self.u_min

    @property
    def height(self) -> float:
        return self.v_max - self.v_min

    @property
    def area(self) -> float:
        return self.width * self.height


def _normalize_yaw(yaw: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    yaw = math.fmod(yaw, 2.0 * math.pi)
    if yaw <= -math.pi:
        yaw += 2.0 * math.pi
    elif yaw > math.pi:
        yaw -= 2.0 * math.pi
    return yaw


@dataclass
class Box3D:
    """Oriented box: center, half extents (l_x, l_y, l_z), yaw about y.

    half_extents[0] spans the long axis, [1] the vertical, [2] the lateral.
    """

    center: np.ndarray
    half_extents: np.ndarray
    yaw: float = 0.0

    def __post_init__(self):
        self.center = np.asarray(self.center, dtype=np.float64)
        self.half_extents = np.asarray(self.half_extents, dtype=np.float64)
        if self.center.shape != (3,) or self.half_extents.shape != (3,):
            raise ValueError("center and half_extents must be 3-vectors")
        if not np.all(np.isfinite(self.center)):
            raise ValueError("non-finite center")
        if not np.all(self.half_extents > 0):
            raise ValueError("half_extents must be strictly positive")
        self.yaw = _normalize_yaw(float(self.yaw))

    @property
    def axes(self) -> np.ndarray:
        """Rows are the unit axes (x_c, y_c, z_c) in the camera frame."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])

    def corners(self) -> np.ndarray:
        """The 8 corners, shape (8, 3).

        Component arithmetic matches the batch kernels so projected extents
        agree bitwise between the single-box and batched paths.
        """
        cx, cy, cz = self.center
        lx, ly, lz = self.half_extents
        ct, st = math.cos(self.yaw), math.sin(self.yaw)
        out = np.empty((8, 3))
        k = 0
        for sx in (-1.0, 1.0):
            for sy in (-1.0, 1.0):
                for sz in (-1.0, 1.0):
                    ex = sx * lx
                    ez = sz * lz
                    out[k, 0] = cx + ex * ct + ez * st
                    out[k, 1] = cy + sy * ly
                    out[k, 2] = cz - ex * st + ez * ct
                    k += 1
        return out

    @property
    def bottom_center(self) -> np.ndarray:
        """Center of the bottom face (y points down, so bottom is +y)."""
        return self.center + np.array([0.0, self.half_extents[1], 0.0])

    @property
    def volume(self) -> float:
        return float(8.0 * np.prod(self.half_extents))

    def translated(self, delta) -> "Box3D":
        return Box3D(self.center + np.asarray(delta, dtype=np.float64),
                     self.half_extents.copy(), self.yaw)

    def scaled(self, factor: float) -> "Box3D":
        return Box3D(self.center.copy(), self.half_extents * factor, self.yaw)


@dataclass
class BoxArray:
    """Column-oriented batch of boxes sharing the Box3D conventions."""

    centers: np.ndarray      # (N, 3)
    half_extents: np.ndarray  # (N, 3)
    yaws: np.ndarray         # (N,)

    def __post_init__(self):
        self.centers = np.ascontiguousarray(self.centers, dtype=np.float64)
        self.half_extents = np.ascontiguousarray(self.half_extents, dtype=np.float64)
        self.yaws = np.ascontiguousarray(self.yaws, dtype=np.float64)

    def __len__(self) -> int:
        return self.centers.shape[0]

    def __getitem__(self, i) -> Box3D:
        return Box3D(self.centers[i].copy(), self.half_extents[i].copy(),
                     float(self.yaws[i]))

    def subset(self, idx) -> "BoxArray":
        return BoxArray(self.centers[idx], self.half_extents[idx], self.yaws[idx])

    @classmethod
    def from_boxes(cls, boxes) -> "BoxArray":
        if len(boxes) == 0:
            return cls(np.zeros((0, 3)), np.zeros((0, 3)), np.zeros(0))
        return cls(
            np.stack([b.center for b in boxes]),
            np.stack([b.half_extents for b in boxes]),
            np.array([b.yaw for b in boxes]),
        )


def to_local(p, box: Box3D) -> np.ndarray:
    """Express point(s) in the box frame: q_a = (p - c) . axis_a.

    Accepts a single 3-vector or an (N, 3) array.
    """
    p = np.asarray(p, dtype=np.float64)
    ax = box.axes
    d0 = p[..., 0] - box.center[0]
    d1 = p[..., 1] - box.center[1]
    d2 = p[..., 2] - box.center[2]
    # Addition order matters: the batch kernels use the same left-to-right sum.
    qx = d0 * ax[0, 0] + d1 * ax[0, 1] + d2 * ax[0, 2]
    qy = d0 * ax[1, 0] + d1 * ax[1, 1] + d2 * ax[1, 2]
    qz = d0 * ax[2, 0] + d1 * ax[2, 1] + d2 * ax[2, 2]
    return np.stack([qx, qy, qz], axis=-1)


def from_local(q, box: Box3D) -> np.ndarray:
    """Inverse of to_local."""
    q = np.asarray(q, dtype=np.float64)
    return box.center + q @ box.axes


def contains(p, box: Box3D):
    """Strict containment test; points on a face count as outside."""
    q = to_local(p, box)
    l = box.half_extents
    inside = (
        (np.abs(q[..., 0]) < l[0])
        & (np.abs(q[..., 1]) < l[1])
        & (np.abs(q[..., 2]) < l[2])
    )
    if inside.ndim == 0:
        return bool(inside)
    return inside


def project_points(points, cam: np.ndarray):
    """Project camera-frame points through a 3x4 matrix.

    Returns (uv, w): pixel coordinates (N, 2) and the homogeneous depth (N,).
    """
    p = np.asarray(points, dtype=np.float64)
    single = p.ndim == 1
    p = np.atleast_2d(p)
    x, y, z = p[:, 0], p[:, 1], p[:, 2]
    u = x * cam[0, 0] + y * cam[0, 1] + z * cam[0, 2] + cam[0, 3]
    v = x * cam[1, 0] + y * cam[1, 1] + z * cam[1, 2] + cam[1, 3]
    w = x * cam[2, 0] + y * cam[2, 1] + z * cam[2, 2] + cam[2, 3]
    uv = np.stack([u / w, v / w], axis=-1)
    if single:
        return uv[0], w[0]
    return uv, w


MIN_CORNER_DEPTH = 0.1


def project_box_to_image(box: Box3D, cam: np.ndarray, image_size) -> Rect2D | None:
    """Pixel bounding rectangle of the 8 projected corners, clamped.

    Returns None when the box must be skipped: a corner closer than
    MIN_CORNER_DEPTH, or the projection entirely off the image.
    """
    width, height = image_size
    corners = box.corners()
    if np.any(corners[:, 2] <= MIN_CORNER_DEPTH):
        return None
    uv, w = project_points(corners, cam)
    if np.any(w <= 1e-9):
        return None
    u_min = max(float(np.min(uv[:, 0])), 0.0)
    v_min = max(float(np.min(uv[:, 1])), 0.0)
    u_max = min(float(np.max(uv[:, 0])), float(width))
    v_max = min(float(np.max(uv[:, 1])), float(height))
    if u_min >= u_max or v_min >= v_max:
        return None
    return Rect2D(u_min, v_min, u_max, v_max)


def iou_2d(a: Rect2D, b: Rect2D) -> float:
    iw = min(a.u_max, b.u_max) - max(a.u_min, b.u_min)
    ih = min(a.v_max, b.v_max) - max(a.v_min, b.v_min)
    if iw <= 0.0 or ih <= 0.0:
        return 0.0
    inter = iw * ih
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def bev_corners(box: Box3D) -> np.ndarray:
    """BEV footprint as a 4x2 polygon in the (x, z) plane, CCW."""
    lx, lz = box.half_extents[0], box.half_extents[2]
    c, s = math.cos(box.yaw), math.sin(box.yaw)
    cx, cz = box.center[0], box.center[2]
    pts = []
    for ex, ez in ((lx, lz), (-lx, lz), (-lx, -lz), (lx, -lz)):
        # offset = ex * x_c + ez * z_c restricted to the (x, z) plane
        pts.append((cx + ex * c + ez * s, cz + ex * (-s) + ez * c))
    return np.array(pts)


def _polygon_area(poly) -> float:
    """Shoelace area (absolute value)."""
    n = len(poly)
    if n < 3:
        return 0.0
    acc = 0.0
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return abs(acc) * 0.5


def _clip_polygon(subject, clip) -> list:
    """Sutherland-Hodgman clip of `subject` against convex CCW `clip`."""
    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    output = list(subject)
    m = len(clip)
    for i in range(m):
        if len(output) < 3:
            return []
        cp1, cp2 = clip[i], clip[(i + 1) % m]
        inputs, output = output, []
        prev = inputs[-1]
        prev_in = cross(cp1, cp2, prev) >= 0.0
        for cur in inputs:
            cur_in = cross(cp1, cp2, cur) >= 0.0
            if cur_in != prev_in:
                # edge crosses the clip line; append the intersection
                dx, dy = cur[0] - prev[0], cur[1] - prev[1]
                ex, ey = cp2[0] - cp1[0], cp2[1] - cp1[1]
                denom = ex * dy - ey * dx
                if denom != 0.0:
                    t = -(ex * (prev[1] - cp1[1]) - ey * (prev[0] - cp1[0])) / denom
                    output.append((prev[0] + t * dx, prev[1] + t * dy))
            if cur_in:
                output.append(cur)
            prev, prev_in = cur, cur_in
    return output


def _ccw(poly: np.ndarray) -> np.ndarray:
    acc = 0.0
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        acc += x1 * y2 - x2 * y1
    return poly if acc >= 0 else poly[::-1]


def bev_intersection_area(a: Box3D, b: Box3D) -> float:
    pa = _ccw(bev_corners(a))
    pb = _ccw(bev_corners(b))
    return _polygon_area(_clip_polygon([tuple(p) for p in pa], [tuple(p) for p in pb]))


def iou_bev(a: Box3D, b: Box3D) -> float:
    inter = bev_intersection_area(a, b)
    area_a = 4.0 * a.half_extents[0] * a.half_extents[2]
    area_b = 4.0 * b.half_extents[0] * b.half_extents[2]
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)


def iou_3d(a: Box3D, b: Box3D) -> float:
    inter_area = bev_intersection_area(a, b)
    if inter_area <= 0.0:
        return 0.0
    a_lo, a_hi = a.center[1] - a.half_extents[1], a.center[1] + a.half_extents[1]
    b_lo, b_hi = b.center[1] - b.half_extents[1], b.center[1] + b.half_extents[1]
    overlap = min(a_hi, b_hi) - max(a_lo, b_lo)
    if overlap <= 0.0:
        return 0.0
    inter = inter_area * overlap
    union = a.volume + b.volume - inter
    if union <= 0.0:
        return 0.0
    return min(max(inter / union, 0.0), 1.0)
