"""Synthetic street scenes rendered by ray casting against boxes + ground.

Every returned point lies on a box face or on the ground plane, with the hit
source recorded per point, so tests can label points by construction. Two
sampling patterns: 'lidar' casts rays on a fixed angular grid, 'camera' casts
one ray per image pixel; both make per-object point counts fall off ~1/d^2.
"""

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from ..cloud import PointCloud
from ..errors import FormatError
from ..geometry import Box3D, iou_bev, project_box_to_image
from .calib import Calibration
from .labels import GroundTruthBox

GROUND_SPAN_Z = (0.0, 70.0)
GROUND_SPAN_X = (-35.0, 35.0)

# camera frame (x right, y down, z fwd) from lidar frame (x fwd, y left, z up)
LIDAR_TO_CAM = np.array([[0.0, -1.0, 0.0, 0.0],
                         [0.0, 0.0, -1.0, 0.0],
                         [1.0, 0.0, 0.0, 0.0]])


@dataclass(frozen=True)
class BoxPlacement:
    """A ground-resting box: BEV position, yaw, full dimensions (l, w, h)."""

    x: float
    z: float
    yaw: float = 0.0
    lwh: tuple = (3.9, 1.6, 1.56)

    def to_box(self, ground_y: float) -> Box3D:
        l, w, h = self.lwh
        center = np.array([self.x, ground_y - h / 2.0, self.z])
        return Box3D(center, np.array([l / 2.0, h / 2.0, w / 2.0]), self.yaw)


@dataclass
class SceneSpec:
    mode: str = "lidar"            # point sampling: lidar | camera
    n_scenes: int = 1              # dataset size when writing to disk
    n_boxes: int = 5
    boxes: list = field(default_factory=list)  # explicit BoxPlacement overrides
    z_min: float = 8.0
    z_max: float = 60.0
    yaw_choices: tuple = (0.0, math.pi / 2.0)
    random_yaw: bool = False
    size_lwh: tuple = (3.9, 1.6, 1.56)
    size_jitter: float = 0.05
    ground_y: float = 1.65
    max_range: float = 80.0
    # camera intrinsics (always present; the front view needs them)
    image_width: int = 640
    image_height: int = 192
    focal: float = 320.0
    # lidar angular grid
    azimuth_fov_deg: float = 84.0
    azimuth_res_deg: float = 0.12
    elevation_min_deg: float = -3.0
    elevation_max_deg: float = 14.0
    elevation_res_deg: float = 0.35

    def calibration(self) -> Calibration:
        cx = self.image_width / 2.0
        cy = self.image_height / 2.0
        p2 = np.array([[self.focal, 0.0, cx, 0.0],
                       [0.0, self.focal, cy, 0.0],
                       [0.0, 0.0, 1.0, 0.0]])
        return Calibration(p2, np.eye(3), LIDAR_TO_CAM)

    @property
    def image_size(self) -> tuple:
        return (self.image_width, self.image_height)


@dataclass
class SyntheticScene:
    spec: SceneSpec
    seed: int
    gt_boxes: list
    cloud: PointCloud
    point_source: np.ndarray  # box index per point, -1 for ground
    calibration: Calibration

    @property
    def true_ground_mask(self) -> np.ndarray:
        return self.point_source == -1

    def points_on_box(self, i: int) -> int:
        return int((self.point_source == i).sum())


def _lidar_rays(spec: SceneSpec) -> np.ndarray:
    half = math.radians(spec.azimuth_fov_deg) / 2.0
    az = np.arange(-half, half, math.radians(spec.azimuth_res_deg))
    el = np.arange(
        math.radians(spec.elevation_min_deg),
        math.radians(spec.elevation_max_deg),
        math.radians(spec.elevation_res_deg),
    )
    aa, ee = np.meshgrid(az, el)
    aa, ee = aa.ravel(), ee.ravel()
    # elevation positive is downward (+y); azimuth about y from +z
    return np.stack([np.cos(ee) * np.sin(aa), np.sin(ee), np.cos(ee) * np.cos(aa)],
                    axis=1)


def _camera_rays(spec: SceneSpec) -> np.ndarray:
    us = np.arange(spec.image_width) + 0.5
    vs = np.arange(spec.image_height) + 0.5
    uu, vv = np.meshgrid(us, vs)
    cx = spec.image_width / 2.0
    cy = spec.image_height / 2.0
    d = np.stack(
        [(uu.ravel() - cx) / spec.focal, (vv.ravel() - cy) / spec.focal,
         np.ones(uu.size)],
        axis=1,
    )
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def _ray_box_hits(dirs: np.ndarray, box: Box3D) -> np.ndarray:
    """Distance along each unit ray (from the origin) to the box; inf if missed."""
    axes = box.axes
    d = dirs @ axes.T
    o = -(axes @ box.center)
    d = np.where(np.abs(d) < 1e-12, 1e-12, d)
    lo = (-box.half_extents - o) / d
    hi = (box.half_extents - o) / d
    t_near = np.minimum(lo, hi).max(axis=1)
    t_far = np.maximum(lo, hi).min(axis=1)
    hit = (t_near <= t_far) & (t_near > 1e-6)
    return np.where(hit, t_near, np.inf)


def _validate_placements(placements, spec: SceneSpec) -> list:
    boxes = [p.to_box(spec.ground_y) for p in placements]
    for p in placements:
        if not (GROUND_SPAN_Z[0] <= p.z <= GROUND_SPAN_Z[1]):
            raise ValueError(f"box z={p.z} outside {GROUND_SPAN_Z}")
        if not (GROUND_SPAN_X[0] <= p.x <= GROUND_SPAN_X[1]):
            raise ValueError(f"box x={p.x} outside {GROUND_SPAN_X}")
    for i in range(len(boxes)):
        for j in range(i + 1, len(boxes)):
            if iou_bev(boxes[i], boxes[j]) > 0.0:
                raise ValueError(f"boxes {i} and {j} overlap in BEV")
    return boxes


def _angular_interval(p: BoxPlacement) -> tuple:
    half = math.hypot(p.lwh[0], p.lwh[1]) / 2.0
    r = math.hypot(p.x, p.z)
    spread = math.asin(min(half / max(r, half + 1e-6), 1.0))
    az = math.atan2(p.x, p.z)
    return (az - spread, az + spread)


def _sample_placements(spec: SceneSpec, rng: np.random.Generator) -> list:
    half_fov = math.atan(spec.image_width / (2.0 * spec.focal))
    az_lim = half_fov * 0.85
    n = spec.n_boxes
    # stratified distance bands, shuffled over azimuth slots
    edges = np.linspace(spec.z_min, spec.z_max, n + 1)
    bands = [(edges[i], edges[i + 1]) for i in rng.permutation(n)]
    slot = 2.0 * az_lim / n
    placements = []
    for i in range(n):
        z_lo, z_hi = bands[i]
        z = float(rng.uniform(z_lo, z_hi))
        az = -az_lim + (i + 0.5 + float(rng.uniform(-0.2, 0.2))) * slot
        x = math.tan(az) * z
        if spec.random_yaw:
            yaw = float(rng.uniform(-math.pi, math.pi))
        else:
            yaw = float(rng.choice(np.asarray(spec.yaw_choices)))
        jitter = 1.0 + rng.uniform(-spec.size_jitter, spec.size_jitter, 3)
        lwh = tuple(np.asarray(spec.size_lwh) * jitter)
        placements.append(BoxPlacement(x=x, z=z, yaw=yaw, lwh=lwh))
    return placements


def _placements_ok(placements, spec: SceneSpec) -> bool:
    try:
        boxes = _validate_placements(placements, spec)
    except ValueError:
        return False
    calib = spec.calibration()
    for box in boxes:
        if project_box_to_image(box, calib.cam_projection, spec.image_size) is None:
            return False
    ivals = sorted(_angular_interval(p) for p in placements)
    for (_, hi), (lo, _) in zip(ivals, ivals[1:]):
        if hi >= lo:
            return False
    return True


def generate_synthetic_scene(spec: SceneSpec, seed: int) -> SyntheticScene:
    """Deterministically render one scene for the given seed."""
    rng = np.random.default_rng(seed)
    if spec.boxes:
        placements = list(spec.boxes)
        boxes = _validate_placements(placements, spec)
    elif spec.n_boxes == 0:
        boxes = []
    else:
        placements = None
        for _ in range(200):
            candidate = _sample_placements(spec, rng)
            if _placements_ok(candidate, spec):
                placements = candidate
                break
        if placements is None:
            raise ValueError("could not place non-overlapping boxes; relax the spec")
        boxes = [p.to_box(spec.ground_y) for p in placements]

    if spec.mode == "lidar":
        dirs = _lidar_rays(spec)
    elif spec.mode == "camera":
        dirs = _camera_rays(spec)
    else:
        raise ValueError(f"unknown sensor mode {spec.mode!r}")

    t_all = np.full((len(dirs), len(boxes) + 1), np.inf)
    for i, box in enumerate(boxes):
        t_all[:, i] = _ray_box_hits(dirs, box)
    dy = dirs[:, 1]
    with np.errstate(divide="ignore"):
        t_ground = np.where(dy > 1e-9, spec.ground_y / np.where(dy > 1e-9, dy, 1.0),
                            np.inf)
    t_all[:, -1] = t_ground

    src = np.argmin(t_all, axis=1)
    t_hit = t_all[np.arange(len(dirs)), src]
    keep = np.isfinite(t_hit) & (t_hit <= spec.max_range)
    points = dirs[keep] * t_hit[keep][:, None]
    source = np.where(src[keep] == len(boxes), -1, src[keep]).astype(np.int64)

    calib = spec.calibration()
    gts = []
    for box in boxes:
        rect = project_box_to_image(box, calib.cam_projection, spec.image_size)
        if rect is None:
            raise ValueError("ground-truth box projects outside the camera frustum")
        gts.append(GroundTruthBox(label="Car", box=box, rect=rect))

    return SyntheticScene(spec=spec, seed=seed, gt_boxes=gts,
                          cloud=PointCloud(points), point_source=source,
                          calibration=calib)


_SPEC_FLOAT_KEYS = {
    "z_min", "z_max", "size_jitter", "ground_y", "max_range", "focal",
    "azimuth_fov_deg", "azimuth_res_deg", "elevation_min_deg",
    "elevation_max_deg", "elevation_res_deg",
}
_SPEC_INT_KEYS = {"n_scenes", "n_boxes", "image_width", "image_height"}


def read_scene_spec(path) -> SceneSpec:
    """Parse a key=value scene spec file ('#' starts a comment)."""
    spec = SceneSpec()
    boxes = []
    yaws = None
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected key=value")
        key, value = (part.strip() for part in line.split("=", 1))
        try:
            if key == "mode":
                spec.mode = value
            elif key == "random_yaw":
                spec.random_yaw = value.lower() in ("1", "true", "yes")
            elif key == "yaw_choices":
                yaws = tuple(float(tok) for tok in value.split(","))
            elif key == "size_lwh":
                spec.size_lwh = tuple(float(tok) for tok in value.split(","))
            elif key == "box":
                vals = [float(tok) for tok in value.split(",")]
                if len(vals) == 3:
                    boxes.append(BoxPlacement(vals[0], vals[1], vals[2]))
                elif len(vals) == 6:
                    boxes.append(BoxPlacement(vals[0], vals[1], vals[2],
                                              tuple(vals[3:6])))
                else:
                    raise ValueError("box needs x,z,yaw or x,z,yaw,l,w,h")
            elif key in _SPEC_FLOAT_KEYS:
                setattr(spec, key, float(value))
            elif key in _SPEC_INT_KEYS:
                setattr(spec, key, int(value))
            else:
                raise ValueError(f"unknown key {key!r}")
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: {exc}") from exc
    if yaws is not None:
        spec.yaw_choices = yaws
    if boxes:
        spec.boxes = boxes
    return spec
