"""KITTI label_2 text format (read for evaluation, written for synthetic data).

Columns: type truncated occluded alpha u1 v1 u2 v2 h w l x y z rotation_y
[score]. The location is the bottom-face center in the camera frame; Box3D
uses the true center, so readers/writers convert.
"""

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import FormatError
from ..geometry import Box3D, Rect2D

EASY, MODERATE, HARD, UNKNOWN = "easy", "moderate", "hard", "unknown"

# (min bbox height px, max occlusion, max truncation) per tier
_TIER_RULES = ((EASY, 40.0, 0, 0.15), (MODERATE, 25.0, 1, 0.30), (HARD, 25.0, 2, 0.50))


def difficulty(bbox_height: float, occlusion: int, truncation: float) -> str:
    for name, min_h, max_occ, max_trunc in _TIER_RULES:
        if bbox_height >= min_h and occlusion <= max_occ and truncation <= max_trunc:
            return name
    return UNKNOWN


@dataclass
class GroundTruthBox:
    label: str
    box: Box3D
    rect: Rect2D
    truncation: float = 0.0
    occlusion: int = 0

    def __post_init__(self):
        if not np.all(self.box.half_extents > 0):
            raise ValueError("ground-truth box must have positive dimensions")

    @property
    def difficulty(self) -> str:
        return difficulty(self.rect.height, self.occlusion, self.truncation)


def _box_from_kitti(h: float, w: float, l: float, x: float, y: float, z: float,
                    ry: float) -> Box3D:
    center = np.array([x, y - h / 2.0, z])
    return Box3D(center, np.array([l / 2.0, h / 2.0, w / 2.0]), ry)


def _box_to_kitti(box: Box3D):
    lx, ly, lz = box.half_extents
    bc = box.bottom_center
    return 2.0 * ly, 2.0 * lz, 2.0 * lx, bc[0], bc[1], bc[2], box.yaw


def kitti_alpha(box: Box3D) -> float:
    """Observation angle: yaw relative to the viewing ray."""
    a = box.yaw - math.atan2(box.center[0], box.center[2])
    while a <= -math.pi:
        a += 2.0 * math.pi
    while a > math.pi:
        a -= 2.0 * math.pi
    return a


def parse_label_line(line: str):
    """Return (GroundTruthBox, score or None); None for DontCare entries."""
    parts = line.split()
    if len(parts) not in (15, 16):
        raise FormatError(f"label line has {len(parts)} columns: {line!r}")
    label = parts[0]
    if label == "DontCare":
        return None
    vals = [float(tok) for tok in parts[1:]]
    trunc, occ = vals[0], int(vals[1])
    u1, v1, u2, v2 = vals[3:7]
    h, w, l, x, y, z, ry = vals[7:14]
    score = vals[14] if len(parts) == 16 else None
    gt = GroundTruthBox(
        label=label,
        box=_box_from_kitti(h, w, l, x, y, z, ry),
        rect=Rect2D(u1, v1, u2, v2),
        truncation=trunc,
        occlusion=occ,
    )
    return gt, score


def read_labels(path) -> list[GroundTruthBox]:
    out = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        parsed = parse_label_line(line)
        if parsed is not None:
            out.append(parsed[0])
    return out


def format_label_line(label: str, box: Box3D, rect: Rect2D, truncation: float = 0.0,
                      occlusion: int = 0, score: float | None = None) -> str:
    h, w, l, x, y, z, ry = _box_to_kitti(box)
    cols = (
        f"{label} {truncation:.2f} {occlusion:d} {kitti_alpha(box):.6f} "
        f"{rect.u_min:.2f} {rect.v_min:.2f} {rect.u_max:.2f} {rect.v_max:.2f} "
        f"{h:.6f} {w:.6f} {l:.6f} {x:.6f} {y:.6f} {z:.6f} {ry:.6f}"
    )
    if score is not None:
        cols += f" {score:.6f}"
    return cols


def write_labels(path, gts: list[GroundTruthBox]) -> None:
    lines = [
        format_label_line(g.label, g.box, g.rect, g.truncation, g.occlusion)
        for g in gts
    ]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))
