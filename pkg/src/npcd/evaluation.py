"""Recall / average-precision metrics and the proposal-method ablation harness."""

import csv
from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud
from .config import Config
from .frontview import build_xyz_map, inpaint
from .geometry import Box3D, BoxArray, Rect2D, iou_2d, iou_3d, iou_bev, project_box_to_image
from .ground import GroundPlane, fit_ground, mask_ground
from .ingest.calib import Calibration
from .ingest.labels import EASY, HARD, MODERATE, GroundTruthBox
from .proposals import (
    AnchorGrid,
    align_proposals,
    enlargement_mask,
    generate_anchors,
    inclusive_order,
    rank_by_scores,
    rank_proposals,
    raw_point_counts,
    select,
)

MODES = ("2d", "bev", "3d")
METHODS = ("npcd", "pcd", "inc")

# cumulative difficulty buckets, KITTI-style
TIER_SETS = {
    EASY: {EASY},
    MODERATE: {EASY, MODERATE},
    HARD: {EASY, MODERATE, HARD},
    "all": None,
}


@dataclass
class Detection:
    box: Box3D
    score: float
    rect: Rect2D | None = None


@dataclass
class FrameData:
    cloud: PointCloud
    calib: Calibration
    gts: list


def pair_iou(det: Detection, gt: GroundTruthBox, mode: str) -> float:
    if mode == "2d":
        if det.rect is None:
            return 0.0
        return iou_2d(det.rect, gt.rect)
    if mode == "bev":
        return iou_bev(det.box, gt.box)
    if mode == "3d":
        return iou_3d(det.box, gt.box)
    raise ValueError(f"unknown mode {mode!r}")


def match_greedy(detections, gts, iou_thresh: float, mode: str):
    """Greedy one-to-one matching in detection order.

    Each detection takes the unmatched ground truth with the highest IoU at
    or above the threshold. Returns (tp flags per detection, matched flags
    per ground truth).
    """
    tp = np.zeros(len(detections), dtype=bool)
    matched = np.zeros(len(gts), dtype=bool)
    for i, det in enumerate(detections):
        best_j = -1
        best_v = -1.0
        for j, gt in enumerate(gts):
            if matched[j]:
                continue
            v = pair_iou(det, gt, mode)
            if v >= iou_thresh and v > best_v:
                best_j, best_v = j, v
        if best_j >= 0:
            tp[i] = True
            matched[best_j] = True
    return tp, matched


def recall_at(detections, gts, iou_thresh: float, mode: str, budget: int) -> float:
    """Recall of the top-`budget` ranked detections; 1.0 when gts is empty."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    if not gts:
        return 1.0
    _, matched = match_greedy(detections[:budget], gts, iou_thresh, mode)
    return float(matched.sum()) / len(gts)


def _ap_sample_points(n_points: int) -> np.ndarray:
    if n_points == 11:
        return np.linspace(0.0, 1.0, 11)
    if n_points == 40:
        return np.arange(1, 41) / 40.0
    raise ValueError("interpolation must use 11 or 40 points")


def average_precision(detections, gts, iou_thresh: float, mode: str,
                      n_points: int = 11) -> float:
    """Interpolated AP: sweep scores, greedy-match, average the precision
    envelope at 11 (or 40) evenly spaced recall points."""
    samples = _ap_sample_points(n_points)
    if not gts:
        return 1.0 if not detections else 0.0
    order = sorted(range(len(detections)), key=lambda i: -detections[i].score)
    ranked = [detections[i] for i in order]
    tp, _ = match_greedy(ranked, gts, iou_thresh, mode)
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(~tp)
    recall = tp_cum / len(gts)
    precision = tp_cum / np.maximum(tp_cum + fp_cum, 1)

    ap = 0.0
    for r in samples:
        mask = recall >= r - 1e-12
        ap += float(precision[mask].max()) if mask.any() else 0.0
    return ap / len(samples)


@dataclass
class RecallCurve:
    method: str
    mode: str
    iou: float
    samples: list = field(default_factory=list)  # (budget, recall), increasing
    tier: str = "all"

    def recall_at_budget(self, budget: int) -> float:
        for b, r in self.samples:
            if b == budget:
                return r
        raise KeyError(budget)


def _filter_tier(gts, tier: str):
    allowed = TIER_SETS[tier]
    if allowed is None:
        return list(gts)
    return [g for g in gts if g.difficulty in allowed]


def frame_method_detections(frame: FrameData, cfg: Config, workers: int = 1,
                            max_budget: int | None = None) -> dict:
    """Ranked detections per method on one frame, sharing anchors and map."""
    cam = frame.calib.cam_projection
    size = (cfg.map_width, cfg.map_height)
    grid = AnchorGrid.from_config(cfg)
    try:
        plane = fit_ground(frame.cloud, cfg.ransac_iterations,
                           cfg.ransac_threshold_m, cfg.ransac_seed,
                           cfg.ground_height_prior_m)
    except ValueError:
        plane = GroundPlane.horizontal(cfg.ground_height_prior_m,
                                       cfg.ransac_threshold_m)
    flagged = mask_ground(frame.cloud, plane)
    anchors = generate_anchors(plane, grid, cam, size)
    budget = max_budget or cfg.budget

    out = {m: [] for m in METHODS}
    if len(anchors) == 0 or len(frame.cloud) == 0:
        return out

    xmap = build_xyz_map(flagged, cam, size)
    if xmap.valid.any():
        xmap = inpaint(xmap)
        selected = select(anchors, xmap, cam, cfg.h_c, cfg.delta, workers)
        keep = enlargement_mask(selected, xmap, cam, cfg.h_c, cfg.epsilon,
                                cfg.enlarge_slack, workers)
        filtered = [p for p, k in zip(selected, keep) if k]
        aligned = align_proposals(filtered, xmap, cam, cfg.h_c)
        ranked = rank_proposals(aligned, budget, cfg.nms_iou)
        out["npcd"] = [Detection(p.box, p.density) for p in ranked]

    counts = raw_point_counts(anchors, flagged, workers)
    out["pcd"] = [Detection(b, s) for b, s in rank_by_scores(anchors, counts, budget)]
    out["inc"] = [Detection(b, s) for b, s in inclusive_order(anchors, budget)]

    for dets in out.values():
        for det in dets:
            det.rect = project_box_to_image(det.box, cam, size)
    return out


def ablation_curves(frames, cfg: Config, budgets=None, iou: float = 0.1,
                    modes=("2d", "3d"), methods=METHODS, workers: int = 1,
                    tier: str = "all"):
    """Mean recall over frames per (method, mode, budget).

    All methods see identical anchors, ground planes, and maps per frame.
    """
    budgets = sorted(budgets or cfg.budgets)
    per_frame = [
        frame_method_detections(f, cfg, workers, max_budget=max(budgets))
        for f in frames
    ]
    curves = []
    for method in sorted(methods):
        for mode in modes:
            samples = []
            for budget in budgets:
                vals = [
                    recall_at(dets[method], _filter_tier(f.gts, tier), iou,
                              mode, budget)
                    for f, dets in zip(frames, per_frame)
                ]
                samples.append((budget, float(np.mean(vals))))
            curves.append(RecallCurve(method=method.upper(), mode=mode,
                                      iou=iou, samples=samples, tier=tier))
    return curves


def dataset_average_precision(frame_dets, frame_gts, iou_thresh: float,
                              mode: str, n_points: int = 11) -> float:
    """AP pooled over frames: one global score sweep, per-frame matching."""
    samples = _ap_sample_points(n_points)
    n_gt = sum(len(g) for g in frame_gts)
    entries = [
        (det.score, fi, det)
        for fi, dets in enumerate(frame_dets)
        for det in dets
    ]
    if n_gt == 0:
        return 1.0 if not entries else 0.0
    entries.sort(key=lambda e: -e[0])
    matched = [np.zeros(len(g), dtype=bool) for g in frame_gts]
    tp = np.zeros(len(entries), dtype=bool)
    for i, (_, fi, det) in enumerate(entries):
        gts = frame_gts[fi]
        best_j = -1
        best_v = -1.0
        for j, gt in enumerate(gts):
            if matched[fi][j]:
                continue
            v = pair_iou(det, gt, mode)
            if v >= iou_thresh and v > best_v:
                best_j, best_v = j, v
        if best_j >= 0:
            tp[i] = True
            matched[fi][best_j] = True
    tp_cum = np.cumsum(tp)
    fp_cum = np.cumsum(~tp)
    recall = tp_cum / n_gt
    precision = tp_cum / np.maximum(tp_cum + fp_cum, 1)
    ap = 0.0
    for r in samples:
        mask = recall >= r - 1e-12
        ap += float(precision[mask].max()) if mask.any() else 0.0
    return ap / len(samples)


def dataset_recall_at(frame_dets, frame_gts, iou_thresh: float, mode: str,
                      budget: int) -> float:
    """Micro-averaged recall: per-frame top-`budget` matching, pooled counts."""
    n_gt = sum(len(g) for g in frame_gts)
    if n_gt == 0:
        return 1.0
    n_matched = 0
    for dets, gts in zip(frame_dets, frame_gts):
        if not gts:
            continue
        ranked = sorted(dets, key=lambda d: -d.score)[:budget]
        _, matched = match_greedy(ranked, gts, iou_thresh, mode)
        n_matched += int(matched.sum())
    return n_matched / n_gt


def write_recall_curves(path, curves) -> None:
    rows = sorted(
        (c.method, c.mode, c.iou, b, r)
        for c in curves
        for b, r in c.samples
    )
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "mode", "iou", "budget", "recall"])
        for method, mode, iou, budget, rec in rows:
            writer.writerow([method, mode, f"{iou:g}", budget, f"{rec:.6f}"])


def write_ap_summary(path, rows) -> None:
    """rows: iterable of (mode, iou, tier, n_points, ap)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mode", "iou", "difficulty", "ap_points", "ap"])
        for mode, iou, tier, n_points, ap in sorted(rows):
            writer.writerow([mode, f"{iou:g}", tier, n_points, f"{ap:.6f}"])


def write_recall_table(path, rows) -> None:
    """rows: iterable of (mode, iou, tier, budget, recall)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["mode", "iou", "difficulty", "budget", "recall"])
        for mode, iou, tier, budget, rec in sorted(rows):
            writer.writerow([mode, f"{iou:g}", tier, budget, f"{rec:.6f}"])
