"""RANSAC ground-plane fitting and ground-point flagging."""

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud

UP = np.array([0.0, -1.0, 0.0])  # camera y points down

DEFAULT_ITERATIONS = 200
DEFAULT_THRESHOLD_M = 0.15
DEFAULT_HEIGHT_PRIOR_M = 1.65
HEIGHT_BAND_M = 0.5


@dataclass
class GroundPlane:
    """Plane n . p + d = 0 with unit n oriented so n . up > 0."""

    normal: np.ndarray
    offset: float
    inlier_threshold: float = DEFAULT_THRESHOLD_M

    def __post_init__(self):
        self.normal = np.asarray(self.normal, dtype=np.float64).reshape(3)
        norm = float(np.linalg.norm(self.normal))
        if norm == 0.0:
            raise ValueError("zero plane normal")
        self.normal = self.normal / norm
        self.offset = float(self.offset) / norm
        if float(self.normal @ UP) < 0.0:
            self.normal = -self.normal
            self.offset = -self.offset

    def signed_distance(self, points) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64)
        return p @ self.normal + self.offset

    def height_at(self, x, z):
        """Ground y for given (x, z): solve n . p + d = 0 for y."""
        nx, ny, nz = self.normal
        return (nx * np.asarray(x) + nz * np.asarray(z) + self.offset) / (-ny)

    @classmethod
    def horizontal(cls, camera_height: float = DEFAULT_HEIGHT_PRIOR_M,
                   inlier_threshold: float = DEFAULT_THRESHOLD_M) -> "GroundPlane":
        return cls(np.array([0.0, -1.0, 0.0]), camera_height, inlier_threshold)


def _fit_plane_lsq(points: np.ndarray):
    """Least-squares plane through points via SVD; returns (normal, offset)."""
    centroid = points.mean(axis=0)
    _, svals, vt = np.linalg.svd(points - centroid, full_matrices=False)
    if svals[-2] < 1e-12:
        raise ValueError("degenerate (collinear) points")
    normal = vt[-1]
    return normal, -float(normal @ centroid)


def fit_ground(cloud: PointCloud, iterations: int = DEFAULT_ITERATIONS,
               threshold: float = DEFAULT_THRESHOLD_M, seed: int = 0,
               height_prior: float = DEFAULT_HEIGHT_PRIOR_M) -> GroundPlane:
    """Classic RANSAC plane fit on height-banded candidates.

    Samples 3 points per iteration, keeps the plane with most inliers within
    `threshold`, then refits by least squares on those inliers. Deterministic
    for a given seed. Raises ValueError when fewer than 3 usable candidates
    exist; callers may fall back to GroundPlane.horizontal().
    """
    pts = cloud.points
    band = np.abs(pts[:, 1] - height_prior) <= HEIGHT_BAND_M
    candidates = pts[band]
    if len(candidates) < 3:
        raise ValueError(f"only {len(candidates)} ground candidates; need >= 3")

    rng = np.random.default_rng(seed)
    best_count = -1
    best_inliers = None
    for _ in range(iterations):
        idx = rng.choice(len(candidates), size=3, replace=False)
        a, b, c = candidates[idx]
        normal = np.cross(b - a, c - a)
        norm = np.linalg.norm(normal)
        if norm < 1e-12:
            continue
        normal = normal / norm
        offset = -float(normal @ a)
        dist = np.abs(candidates @ normal + offset)
        inliers = dist <= threshold
        count = int(inliers.sum())
        if count > best_count:
            best_count = count
            best_inliers = inliers
    if best_inliers is None or best_count < 3:
        raise ValueError("RANSAC found no non-degenerate plane")

    normal, offset = _fit_plane_lsq(candidates[best_inliers])
    return GroundPlane(normal, offset, inlier_threshold=threshold)


def mask_ground(cloud: PointCloud, plane: GroundPlane) -> PointCloud:
    """Flag points within the plane's inlier band; never removes points."""
    dist = np.abs(plane.signed_distance(cloud.points))
    return cloud.with_ground_mask(dist <= plane.inlier_threshold)
