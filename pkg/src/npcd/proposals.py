"""Anchor-grid proposal generation ranked by normalized point-cloud density.

The stages run in a fixed order per frame: density scoring over resampled
front-view patches, threshold selection, enlargement filtering, per-axis
alignment to the contained points, then ranking under a proposal budget.
Raw-count (pcd) and keep-everything (inc) baselines share the same anchors.
"""

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .cloud import PointCloud
from .config import Config
from .frontview import XYZMap, build_xyz_map, crop_resize, inpaint
from .geometry import Box3D, BoxArray, Rect2D, iou_bev, project_box_to_image, to_local
from .ground import GroundPlane, fit_ground, mask_ground
from .ingest.calib import Calibration
from .ingest.labels import format_label_line, parse_label_line


@dataclass
class AnchorGrid:
    """Ground-plane anchor lattice: spacing, BEV span, yaws, box template."""

    spacing: float = 0.2
    z_span: tuple = (0.0, 70.0)
    x_span: tuple = (-35.0, 35.0)
    yaws: tuple = (0.0, math.pi / 2.0)
    template_lwh: tuple = (3.9, 1.6, 1.56)

    @classmethod
    def from_config(cls, cfg: Config) -> "AnchorGrid":
        return cls(
            spacing=cfg.grid_spacing_m,
            z_span=(cfg.grid_z_min_m, cfg.grid_z_max_m),
            x_span=(cfg.grid_x_min_m, cfg.grid_x_max_m),
            yaws=tuple(cfg.grid_yaws),
            template_lwh=tuple(cfg.anchor_lwh),
        )

    def axis_positions(self, lo: float, hi: float) -> np.ndarray:
        n = math.ceil((hi - lo) / self.spacing)
        return lo + (np.arange(n) + 0.5) * self.spacing

    @property
    def total_anchors(self) -> int:
        nz = math.ceil((self.z_span[1] - self.z_span[0]) / self.spacing)
        nx = math.ceil((self.x_span[1] - self.x_span[0]) / self.spacing)
        return nz * nx * len(self.yaws)

    @property
    def half_extents(self) -> np.ndarray:
        l, w, h = self.template_lwh
        return np.array([l / 2.0, h / 2.0, w / 2.0])


def grid_boxes(plane: GroundPlane, grid: AnchorGrid) -> BoxArray:
    """All anchors resting on the plane (bottom-face center on it), unculled."""
    xs = grid.axis_positions(*grid.x_span)
    zs = grid.axis_positions(*grid.z_span)
    xx, zz = np.meshgrid(xs, zs)
    xx, zz = xx.ravel(), zz.ravel()
    half = grid.half_extents
    yy = plane.height_at(xx, zz) - half[1]

    n_pos = len(xx)
    n_yaw = len(grid.yaws)
    centers = np.empty((n_pos * n_yaw, 3))
    yaws = np.empty(n_pos * n_yaw)
    for j, yaw in enumerate(grid.yaws):
        sl = slice(j * n_pos, (j + 1) * n_pos)
        centers[sl, 0] = xx
        centers[sl, 1] = yy
        centers[sl, 2] = zz
        yaws[sl] = yaw
    halfs = np.broadcast_to(half, (n_pos * n_yaw, 3)).copy()
    return BoxArray(centers, halfs, yaws)


def generate_anchors(plane: GroundPlane, grid: AnchorGrid, cam: np.ndarray,
                     image_size) -> BoxArray:
    """Grid anchors with out-of-frustum ones dropped."""
    boxes = grid_boxes(plane, grid)
    width, height = image_size
    valid, _ = _kernels.anchor_rects(boxes.centers, boxes.half_extents,
                                     boxes.yaws, cam, width, height)
    return boxes.subset(valid)


@dataclass
class Proposal:
    box: Box3D
    density: float
    n_in: int
    aligned: bool = False
    index: int = 0

    @property
    def distance(self) -> float:
        return float(np.linalg.norm(self.box.center))


def normalized_density(box: Box3D, xmap: XYZMap, cam: np.ndarray, hc: int):
    """Density of one box: (density, n_in, inside matrix), or None when the
    box projects outside the frustum (density undefined, not zero).

    The patch is the box's projected rect resampled to hc x hc; n_in counts
    strictly-contained, non-ground patch points; density = n_in / hc^2.
    """
    rect = project_box_to_image(box, cam, (xmap.width, xmap.height))
    if rect is None:
        return None
    patch = crop_resize(xmap, rect, hc)
    q = to_local(patch.points.reshape(-1, 3), box)
    l = box.half_extents
    inside = (
        (np.abs(q[:, 0]) < l[0])
        & (np.abs(q[:, 1]) < l[1])
        & (np.abs(q[:, 2]) < l[2])
        & ~patch.ground.reshape(-1)
    )
    n_in = int(inside.sum())
    return n_in / float(hc * hc), n_in, inside.reshape(hc, hc)


def select(anchors: BoxArray, xmap: XYZMap, cam: np.ndarray, hc: int,
           delta: float, workers: int = 1) -> list:
    """Keep anchors whose density clears the threshold (density >= delta)."""
    if not (0.0 < delta < 1.0):
        raise ValueError("delta must lie in (0, 1)")
    valid, n_in = _kernels.anchor_density(
        anchors.centers, anchors.half_extents, anchors.yaws,
        xmap.xyz, xmap.ground, cam, hc, workers,
    )
    density = n_in / float(hc * hc)
    keep = valid & (density >= delta)
    return [
        Proposal(box=anchors[i], density=float(density[i]), n_in=int(n_in[i]),
                 index=int(i))
        for i in np.nonzero(keep)[0]
    ]


def enlargement_mask(proposals: list, xmap: XYZMap, cam: np.ndarray, hc: int,
                     epsilon: float, slack: int = 0, workers: int = 1) -> np.ndarray:
    """True where the (1+epsilon)-scaled box gains at most `slack` points.

    Both containment counts use the patch sampled from the enlarged box's
    projection, so the comparison sees one point set: extra points are those
    inside the enlarged box but outside the original. A box whose enlargement
    falls out of the frustum is rejected.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if not proposals:
        return np.zeros(0, dtype=bool)
    boxes = BoxArray.from_boxes([p.box for p in proposals])
    big = boxes.half_extents * (1.0 + epsilon)
    valid, pts, gnd = _kernels.gather_patches(
        boxes.centers, big, boxes.yaws, xmap.xyz, xmap.ground, cam, hc,
    )
    ct = np.cos(boxes.yaws)[:, None]
    st = np.sin(boxes.yaws)[:, None]
    dx = pts[:, :, 0] - boxes.centers[:, 0][:, None]
    dy = pts[:, :, 1] - boxes.centers[:, 1][:, None]
    dz = pts[:, :, 2] - boxes.centers[:, 2][:, None]
    qx = dx * ct - dz * st
    qz = dx * st + dz * ct

    def count_inside(halfs):
        inside = (
            (np.abs(qx) < halfs[:, 0][:, None])
            & (np.abs(dy) < halfs[:, 1][:, None])
            & (np.abs(qz) < halfs[:, 2][:, None])
            & ~gnd
        )
        return inside.sum(axis=1)

    extra = count_inside(big) - count_inside(boxes.half_extents)
    return valid & (extra <= slack)


def enlargement_filter(proposal: Proposal, xmap: XYZMap, cam: np.ndarray, hc: int,
                       epsilon: float, slack: int = 0) -> bool:
    return bool(enlargement_mask([proposal], xmap, cam, hc, epsilon, slack)[0])


def align_proposals(proposals: list, xmap: XYZMap, cam: np.ndarray, hc: int) -> list:
    """Shift each box along its own axes so the extreme contained point on
    each axis lands exactly on the box surface.

    All three axis shifts use the containment set of the original box; size
    and yaw never change. Boxes with no contained points pass through.
    """
    if not proposals:
        return []
    boxes = BoxArray.from_boxes([p.box for p in proposals])
    valid, pts, gnd = _kernels.gather_patches(
        boxes.centers, boxes.half_extents, boxes.yaws,
        xmap.xyz, xmap.ground, cam, hc,
    )
    ct = np.cos(boxes.yaws)[:, None]
    st = np.sin(boxes.yaws)[:, None]
    dx = pts[:, :, 0] - boxes.centers[:, 0][:, None]
    dy = pts[:, :, 1] - boxes.centers[:, 1][:, None]
    dz = pts[:, :, 2] - boxes.centers[:, 2][:, None]
    q = np.stack([dx * ct - dz * st, dy, dx * st + dz * ct], axis=1)  # (N, 3, P)
    l = boxes.half_extents
    inside = (
        (np.abs(q[:, 0, :]) < l[:, 0][:, None])
        & (np.abs(q[:, 1, :]) < l[:, 1][:, None])
        & (np.abs(q[:, 2, :]) < l[:, 2][:, None])
        & ~gnd
        & valid[:, None]
    )
    any_inside = inside.any(axis=1)

    shifts = np.zeros((len(proposals), 3))
    masked_abs = np.where(inside[:, None, :], np.abs(q), -1.0)  # (N, 3, P)
    arg = np.argmax(masked_abs, axis=2)  # (N, 3)
    rows = np.arange(len(proposals))
    for a in range(3):
        m = q[rows, a, arg[:, a]]
        sign = np.where(m >= 0.0, 1.0, -1.0)
        shifts[:, a] = np.where(any_inside, m - sign * l[:, a], 0.0)

    out = []
    for i, p in enumerate(proposals):
        if not any_inside[i]:
            out.append(p)
            continue
        delta = (
            shifts[i, 0] * p.box.axes[0]
            + shifts[i, 1] * p.box.axes[1]
            + shifts[i, 2] * p.box.axes[2]
        )
        out.append(replace(p, box=p.box.translated(delta), aligned=True))
    return out


def align(proposal: Proposal, xmap: XYZMap, cam: np.ndarray, hc: int) -> Proposal:
    return align_proposals([proposal], xmap, cam, hc)[0]


def rank_proposals(proposals: list, k: int, nms_iou: float | None = None) -> list:
    """Top-k by density (ties: nearer center, then lower index), with
    optional greedy BEV non-maximum suppression before truncation."""
    if k < 1:
        raise ValueError("budget must be at least 1")
    ranked = sorted(proposals, key=lambda p: (-p.density, p.distance, p.index))
    if nms_iou is None:
        return ranked[:k]
    kept = []
    for p in ranked:
        if all(iou_bev(p.box, q.box) < nms_iou for q in kept):
            kept.append(p)
            if len(kept) == k:
                break
    return kept


def raw_point_counts(anchors: BoxArray, cloud: PointCloud, workers: int = 1) -> np.ndarray:
    """Baseline score: raw count of non-ground cloud points inside each anchor."""
    return _kernels.count_in_boxes(cloud.non_ground_points(), anchors.centers,
                                   anchors.half_extents, anchors.yaws, workers)


def raw_point_count(box: Box3D, cloud: PointCloud) -> int:
    return int(raw_point_counts(BoxArray.from_boxes([box]), cloud)[0])


def rank_by_scores(anchors: BoxArray, scores: np.ndarray, k: int) -> list:
    """Top-k (box, score) pairs by score desc; ties: nearer center, lower index."""
    dist = np.linalg.norm(anchors.centers, axis=1)
    idx = np.arange(len(anchors))
    order = np.lexsort((idx, dist, -np.asarray(scores, dtype=np.float64)))
    top = order[:k]
    return [(anchors[i], float(scores[i])) for i in top]


def inclusive_order(anchors: BoxArray, k: int) -> list:
    """Keep-everything baseline: all anchors ordered by distance, then index."""
    dist = np.linalg.norm(anchors.centers, axis=1)
    idx = np.arange(len(anchors))
    order = np.lexsort((idx, dist))
    top = order[:k]
    return [(anchors[i], -float(dist[i])) for i in top]


@dataclass
class FrameStats:
    n_points: int
    n_anchors_total: int
    n_anchors_in_frustum: int
    n_selected: int
    n_after_enlargement: int
    n_output: int
    runtime_s: float


def propose_frame(cloud: PointCloud, calib: Calibration, cfg: Config,
                  workers: int = 1, plane: GroundPlane | None = None):
    """Full per-frame pipeline; returns (proposals, stats)."""
    t0 = time.perf_counter()
    grid = AnchorGrid.from_config(cfg)
    cam = calib.cam_projection
    size = (cfg.map_width, cfg.map_height)

    if plane is None:
        try:
            plane = fit_ground(cloud, cfg.ransac_iterations, cfg.ransac_threshold_m,
                               cfg.ransac_seed, cfg.ground_height_prior_m)
        except ValueError:
            plane = GroundPlane.horizontal(cfg.ground_height_prior_m,
                                           cfg.ransac_threshold_m)
    flagged = mask_ground(cloud, plane)

    xmap = build_xyz_map(flagged, cam, size)
    anchors = generate_anchors(plane, grid, cam, size)
    if not xmap.valid.any() or len(anchors) == 0:
        stats = FrameStats(len(cloud), grid.total_anchors, len(anchors),
                           0, 0, 0, time.perf_counter() - t0)
        return [], stats
    xmap = inpaint(xmap)

    selected = select(anchors, xmap, cam, cfg.h_c, cfg.delta, workers)
    keep = enlargement_mask(selected, xmap, cam, cfg.h_c, cfg.epsilon,
                            cfg.enlarge_slack, workers)
    filtered = [p for p, k in zip(selected, keep) if k]
    aligned = align_proposals(filtered, xmap, cam, cfg.h_c)
    ranked = rank_proposals(aligned, cfg.budget, cfg.nms_iou)

    stats = FrameStats(
        n_points=len(cloud),
        n_anchors_total=grid.total_anchors,
        n_anchors_in_frustum=len(anchors),
        n_selected=len(selected),
        n_after_enlargement=len(filtered),
        n_output=len(ranked),
        runtime_s=time.perf_counter() - t0,
    )
    return ranked, stats


def write_proposals(path, proposals: list, cam: np.ndarray, image_size,
                    class_name: str = "Car") -> None:
    """One KITTI-style label line per proposal with the density appended."""
    lines = []
    for p in proposals:
        rect = project_box_to_image(p.box, cam, image_size)
        if rect is None:
            rect = Rect2D(0.0, 0.0, 0.0, 0.0)
        lines.append(format_label_line(class_name, p.box, rect,
                                       truncation=-1.0, occlusion=-1,
                                       score=p.density))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + ("\n" if lines else ""))


def read_proposals(path):
    """Parse a proposal file into (GroundTruthBox-shaped entry, score) pairs."""
    out = []
    with open(path) as fh:
        for line in fh:
            if not line.strip():
                continue
            parsed = parse_label_line(line)
            if parsed is None:
                continue
            entry, score = parsed
            out.append((entry, 0.0 if score is None else score))
    return out
