"""KITTI calibration files: parsing and sensor-frame transforms."""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import FormatError

REQUIRED_KEYS = ("P2", "R0_rect", "Tr_velo_to_cam")


@dataclass
class Calibration:
    """Camera projection and LiDAR-to-camera transform.

    cam_projection: 3x4, rectified camera frame -> pixels.
    rect_rotation: 3x3 rectifying rotation.
    lidar_to_cam: 3x4 rigid transform, LiDAR frame -> unrectified camera frame.
    """

    cam_projection: np.ndarray
    rect_rotation: np.ndarray
    lidar_to_cam: np.ndarray

    def __post_init__(self):
        self.cam_projection = np.asarray(self.cam_projection, dtype=np.float64).reshape(3, 4)
        self.rect_rotation = np.asarray(self.rect_rotation, dtype=np.float64).reshape(3, 3)
        self.lidar_to_cam = np.asarray(self.lidar_to_cam, dtype=np.float64).reshape(3, 4)
        if self.cam_projection[0, 0] == 0.0 or self.cam_projection[1, 1] == 0.0:
            raise FormatError("cam_projection has zero focal terms")
        r = self.rect_rotation
        if not np.allclose(r @ r.T, np.eye(3), atol=1e-3):
            raise FormatError("rect_rotation is not orthonormal")

    @classmethod
    def identity(cls) -> "Calibration":
        return cls(np.hstack([np.eye(3), np.zeros((3, 1))]), np.eye(3),
                   np.hstack([np.eye(3), np.zeros((3, 1))]))

    def lidar_to_rect(self, points: np.ndarray) -> np.ndarray:
        """Map LiDAR-frame points into the rectified camera frame."""
        p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        cam = p @ self.lidar_to_cam[:, :3].T + self.lidar_to_cam[:, 3]
        return cam @ self.rect_rotation.T

    def rect_to_lidar(self, points: np.ndarray) -> np.ndarray:
        p = np.asarray(points, dtype=np.float64).reshape(-1, 3)
        cam = p @ self.rect_rotation  # R^-1 = R^T
        rot = self.lidar_to_cam[:, :3]
        return (cam - self.lidar_to_cam[:, 3]) @ np.linalg.inv(rot).T


def read_calibration(path) -> Calibration:
    """Parse a KITTI calib txt ('key: v1 v2 ...' lines)."""
    entries = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        key, _, rest = line.partition(":")
        key = key.strip()
        try:
            values = np.array([float(tok) for tok in rest.split()])
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: malformed float ({exc})") from exc
        entries[key] = values

    for key in REQUIRED_KEYS:
        if key not in entries:
            raise FormatError(f"{path}: missing key {key}")

    def shaped(key, n, shape):
        v = entries[key]
        if v.size != n:
            raise FormatError(f"{path}: key {key} has {v.size} values, expected {n}")
        return v.reshape(shape)

    return Calibration(
        cam_projection=shaped("P2", 12, (3, 4)),
        rect_rotation=shaped("R0_rect", 9, (3, 3)),
        lidar_to_cam=shaped("Tr_velo_to_cam", 12, (3, 4)),
    )


def write_calibration(path, calib: Calibration) -> None:
    def row(values):
        return " ".join(f"{v:.12e}" for v in np.asarray(values).ravel())

    lines = [
        f"P2: {row(calib.cam_projection)}",
        f"R0_rect: {row(calib.rect_rotation)}",
        f"Tr_velo_to_cam: {row(calib.lidar_to_cam)}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")
