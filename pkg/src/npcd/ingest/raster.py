"""Self-describing binary depth rasters and pinhole back-projection.

Layout: 12-byte header (magic, width, height; little-endian uint32) followed
by width*height row-major float32 depths in meters.
"""

import struct
from pathlib import Path

import numpy as np

from ..cloud import PointCloud
from ..errors import FormatError

MAGIC = 0x53415244  # b"DRAS"
_HEADER = struct.Struct("<III")


def write_depth_raster(path, depth: np.ndarray) -> None:
    d = np.asarray(depth, dtype=np.float32)
    if d.ndim != 2:
        raise ValueError("depth raster must be 2-D")
    height, width = d.shape
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, width, height))
        fh.write(d.astype("<f4").tobytes())


def read_depth_raster(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(f"{path}: truncated header")
    magic, width, height = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic 0x{magic:08x}")
    expected = _HEADER.size + 4 * width * height
    if len(raw) != expected:
        raise FormatError(
            f"{path}: payload is {len(raw) - _HEADER.size} bytes, "
            f"header implies {expected - _HEADER.size}"
        )
    depth = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size)
    return depth.reshape(height, width).astype(np.float64)


def depth_raster_to_cloud(depth: np.ndarray, intrinsics: np.ndarray) -> PointCloud:
    """Back-project p = depth * K^-1 (u, v, 1) for every positive-depth pixel.

    Pixel (u, v) uses the integer column/row indices directly.
    """
    d = np.asarray(depth, dtype=np.float64)
    k = np.asarray(intrinsics, dtype=np.float64).reshape(3, 3)
    k_inv = np.linalg.inv(k)
    height, width = d.shape
    vs, us = np.mgrid[0:height, 0:width]
    keep = np.isfinite(d) & (d > 0.0)
    if not keep.any():
        return PointCloud(np.zeros((0, 3)))
    uv1 = np.stack([us[keep], vs[keep], np.ones(keep.sum())], axis=1)
    rays = uv1 @ k_inv.T
    return PointCloud(rays * d[keep][:, None])
