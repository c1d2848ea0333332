"""Point cloud container shared by the whole pipeline (camera frame)."""

from dataclasses import dataclass, field

import numpy as np


@dataclass
class PointCloud:
    """Unordered 3D points with a per-point ground flag.

    Points are float64 (x right, y down, z forward). The ground mask is
    all-False until a fitted plane marks ground returns.
    """

    points: np.ndarray
    ground_mask: np.ndarray = None

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64).reshape(-1, 3)
        if self.ground_mask is None:
            self.ground_mask = np.zeros(len(self.points), dtype=bool)
        else:
            self.ground_mask = np.asarray(self.ground_mask, dtype=bool).reshape(-1)
        if self.ground_mask.shape[0] != self.points.shape[0]:
            raise ValueError("ground_mask length must match point count")

    def __len__(self) -> int:
        return self.points.shape[0]

    def with_ground_mask(self, mask) -> "PointCloud":
        return PointCloud(self.points.copy(), np.asarray(mask, dtype=bool))

    def non_ground_points(self) -> np.ndarray:
        return self.points[~self.ground_mask]
