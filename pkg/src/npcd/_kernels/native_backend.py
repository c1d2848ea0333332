"""Thin wrappers around the compiled kernels, matching numpy_backend's API."""

import numpy as np

from . import _native
from .numpy_backend import anchor_rects, gather_patches, grouped_count


def anchor_density(centers, halfs, yaws, xyz, ground, cam, hc, num_threads=1):
    return _native.density_kernel(
        np.ascontiguousarray(centers, dtype=np.float64),
        np.ascontiguousarray(halfs, dtype=np.float64),
        np.ascontiguousarray(yaws, dtype=np.float64),
        np.ascontiguousarray(xyz, dtype=np.float64),
        np.ascontiguousarray(ground, dtype=np.uint8),
        np.ascontiguousarray(cam, dtype=np.float64),
        int(hc),
        int(num_threads),
    )


def count_in_boxes(points, centers, halfs, yaws, num_threads=1):
    def inner(p_sorted, c, h, ct, st, lo, hi, threads):
        return _native.count_sorted(p_sorted, c, h, ct, st, lo, hi, int(threads))

    return grouped_count(
        np.ascontiguousarray(points, dtype=np.float64),
        np.ascontiguousarray(centers, dtype=np.float64),
        np.ascontiguousarray(halfs, dtype=np.float64),
        np.ascontiguousarray(yaws, dtype=np.float64),
        inner,
        num_threads,
    )


def inpaint_nearest(xyz, valid, ground):
    if not valid.any():
        raise ValueError("cannot inpaint a map with no valid pixels")
    out_xyz = np.ascontiguousarray(xyz, dtype=np.float64).copy()
    out_ground = np.ascontiguousarray(ground, dtype=np.uint8).copy()
    dist = np.where(valid, 0, -1).astype(np.int32)
    _native.inpaint_bfs(out_xyz, out_ground, np.ascontiguousarray(dist))
    return out_xyz, out_ground.astype(bool)
