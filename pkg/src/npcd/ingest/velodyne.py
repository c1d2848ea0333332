"""KITTI velodyne .bin scans: 4 little-endian float32 per point (x y z r)."""

import logging
from pathlib import Path

import numpy as np

from ..cloud import PointCloud
from ..errors import FormatError
from .calib import Calibration

log = logging.getLogger(__name__)

POINT_RECORD_BYTES = 16


def read_lidar_scan(path, calib: Calibration | None = None) -> PointCloud:
    """Read a velodyne scan; with a calibration, transform to the camera
    frame and drop points behind the image plane (z < 0)."""
    raw = Path(path).read_bytes()
    if len(raw) % POINT_RECORD_BYTES != 0:
        raise FormatError(
            f"{path}: length {len(raw)} is not a multiple of {POINT_RECORD_BYTES}"
        )
    data = np.frombuffer(raw, dtype="<f4").reshape(-1, 4)
    points = data[:, :3].astype(np.float64)

    finite = np.all(np.isfinite(points), axis=1)
    n_dropped = int((~finite).sum())
    if n_dropped:
        log.warning("%s: dropped %d non-finite points", path, n_dropped)
        points = points[finite]

    if calib is not None:
        points = calib.lidar_to_rect(points)
        points = points[points[:, 2] >= 0.0]
    return PointCloud(points)


def write_lidar_scan(path, points: np.ndarray, reflectance: np.ndarray | None = None) -> None:
    """Write points (N, 3) as a velodyne .bin; reflectance defaults to zero."""
    p = np.asarray(points, dtype=np.float32).reshape(-1, 3)
    r = (
        np.zeros((len(p), 1), dtype=np.float32)
        if reflectance is None
        else np.asarray(reflectance, dtype=np.float32).reshape(-1, 1)
    )
    np.hstack([p, r]).astype("<f4").tofile(path)
