"""Front-view XYZ map: per-pixel 3D coordinates, hole filling, patch cropping."""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .cloud import PointCloud
from .geometry import Rect2D
from .ingest.raster import write_depth_raster


@dataclass
class XYZMap:
    """Raster whose pixels hold the 3D point seen through them."""

    xyz: np.ndarray     # (H, W, 3) float64
    valid: np.ndarray   # (H, W) bool
    ground: np.ndarray  # (H, W) bool

    @property
    def width(self) -> int:
        return self.xyz.shape[1]

    @property
    def height(self) -> int:
        return self.xyz.shape[0]

    @property
    def is_dense(self) -> bool:
        return bool(self.valid.all())


@dataclass
class Patch:
    """Fixed-size resample of a map crop: hc x hc points with ground flags."""

    points: np.ndarray  # (hc, hc, 3)
    ground: np.ndarray  # (hc, hc) bool
    valid: np.ndarray   # (hc, hc) bool
    rect: Rect2D

    @property
    def size(self) -> int:
        return self.points.shape[0]


def build_xyz_map(cloud: PointCloud, cam: np.ndarray, size) -> XYZMap:
    """Project points into pixels; the nearest point (smallest z) wins a pixel."""
    width, height = size
    xyz = np.zeros((height, width, 3))
    valid = np.zeros((height, width), dtype=bool)
    ground = np.zeros((height, width), dtype=bool)
    pts = cloud.points
    if len(pts) == 0:
        return XYZMap(xyz, valid, ground)

    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    u = x * cam[0, 0] + y * cam[0, 1] + z * cam[0, 2] + cam[0, 3]
    v = x * cam[1, 0] + y * cam[1, 1] + z * cam[1, 2] + cam[1, 3]
    w = x * cam[2, 0] + y * cam[2, 1] + z * cam[2, 2] + cam[2, 3]
    ok = w > 1e-9
    cols = np.full(len(pts), -1, dtype=np.int64)
    rows = np.full(len(pts), -1, dtype=np.int64)
    cols[ok] = np.floor(u[ok] / w[ok]).astype(np.int64)
    rows[ok] = np.floor(v[ok] / w[ok]).astype(np.int64)
    ok &= (cols >= 0) & (cols < width) & (rows >= 0) & (rows < height)
    if not ok.any():
        return XYZMap(xyz, valid, ground)

    # write far-to-near so the smallest z lands last (stable for z ties)
    order = np.argsort(-z[ok], kind="stable")
    r, c = rows[ok][order], cols[ok][order]
    xyz[r, c] = pts[ok][order]
    ground[r, c] = cloud.ground_mask[ok][order]
    valid[r, c] = True
    return XYZMap(xyz, valid, ground)


def inpaint(xmap: XYZMap) -> XYZMap:
    """Fill every invalid pixel from its nearest valid pixel.

    Grid-distance BFS with left/right/up/down tie priority; ground flags
    travel with the copied values. Raises ValueError on an all-invalid map.
    """
    if xmap.is_dense:
        return XYZMap(xmap.xyz.copy(), xmap.valid.copy(), xmap.ground.copy())
    xyz, ground = _kernels.inpaint_nearest(xmap.xyz, xmap.valid, xmap.ground)
    return XYZMap(xyz, np.ones_like(xmap.valid), ground)


def crop_resize(xmap: XYZMap, rect: Rect2D, hc: int) -> Patch:
    """Nearest-neighbor resample of the rect into an hc x hc patch.

    The hc^2 sample centers are uniformly spaced inside the rect, so the
    output size never depends on the rect size.
    """
    if hc < 2:
        raise ValueError("patch size must be at least 2")
    if rect.area <= 0.0:
        raise ValueError("rect has no area")
    if (rect.u_max <= 0 or rect.v_max <= 0
            or rect.u_min >= xmap.width or rect.v_min >= xmap.height):
        raise ValueError("rect lies outside the map")

    su = (rect.u_max - rect.u_min) / hc
    sv = (rect.v_max - rect.v_min) / hc
    steps = np.arange(hc, dtype=np.float64) + 0.5
    cols = np.floor(rect.u_min + steps * su).astype(np.int64)
    rows = np.floor(rect.v_min + steps * sv).astype(np.int64)
    np.clip(cols, 0, xmap.width - 1, out=cols)
    np.clip(rows, 0, xmap.height - 1, out=rows)
    rr, cc = np.meshgrid(rows, cols, indexing="ij")
    return Patch(
        points=xmap.xyz[rr, cc],
        ground=xmap.ground[rr, cc],
        valid=xmap.valid[rr, cc],
        rect=rect,
    )


def dump_depth_channel(xmap: XYZMap, path) -> None:
    """Debug aid: write the z channel as a depth raster."""
    write_depth_raster(path, xmap.xyz[:, :, 2])
