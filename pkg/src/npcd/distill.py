"""Teacher-score rectification and rotation targets for distillation.

Teacher confidences inside the confusion zone [s_l, s_h] are masked out of
the loss entirely; confidences outside it become soft labels through a
sigmoid-shaped map with soft threshold s_t and slope k. Rotation is a
16-bin distribution over the circle whose output angle is the circular
expectation.
"""

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Box3D, iou_3d
from .ingest.synth import SyntheticScene

STUDENT_CLAMP = 1e-7


@dataclass(frozen=True)
class RectifyParams:
    s_t: float = 0.6
    k: float = 50.0
    s_l: float = 0.4
    s_h: float = 0.6

    def __post_init__(self):
        if not (0.0 < self.s_t < 1.0):
            raise ValueError("s_t must lie in (0, 1)")
        if self.k <= 0.0:
            raise ValueError("k must be positive")
        if not (0.0 <= self.s_l <= self.s_h <= 1.0):
            raise ValueError("need 0 <= s_l <= s_h <= 1")


def rectified_label(s, params: RectifyParams):
    """Soft label (1 + e^{(s_t-1)k}) / (1 + e^{(s_t-s)k}).

    Strictly increasing in s with rectified_label(1) == 1 exactly. Evaluated
    via logaddexp so large k cannot overflow. Accepts scalars or arrays.
    """
    s = np.asarray(s, dtype=np.float64)
    a = (params.s_t - 1.0) * params.k
    b = (params.s_t - s) * params.k
    out = np.exp(np.logaddexp(0.0, a) - np.logaddexp(0.0, b))
    if out.ndim == 0:
        return float(out)
    return out


def in_confusion_zone(s, params: RectifyParams):
    s = np.asarray(s, dtype=np.float64)
    zone = (s >= params.s_l) & (s <= params.s_h)
    if zone.ndim == 0:
        return bool(zone)
    return zone


def _check_teacher_scores(s):
    s = np.asarray(s, dtype=np.float64)
    if np.any(s < 0.0) or np.any(s > 1.0):
        raise ValueError("teacher confidence must lie in [0, 1]")
    return s


def rectified_ce_loss(s_teacher, s_student, params: RectifyParams):
    """Cross entropy against the rectified label, masked to zero inside the
    confusion zone. The student prediction is clamped away from {0, 1}."""
    s = _check_teacher_scores(s_teacher)
    st = np.clip(np.asarray(s_student, dtype=np.float64), STUDENT_CLAMP,
                 1.0 - STUDENT_CLAMP)
    s_hat = rectified_label(s, params)
    loss = -(s_hat * np.log(st) + (1.0 - s_hat) * np.log(1.0 - st))
    out = np.where(in_confusion_zone(s, params), 0.0, loss)
    if out.ndim == 0:
        return float(out)
    return out


def rectified_ce_grad(s_teacher, s_student, params: RectifyParams):
    """Analytic d(loss)/d(student): (s~ - s^) / (s~ (1 - s~)), masked."""
    s = _check_teacher_scores(s_teacher)
    st = np.clip(np.asarray(s_student, dtype=np.float64), STUDENT_CLAMP,
                 1.0 - STUDENT_CLAMP)
    s_hat = rectified_label(s, params)
    grad = (st - s_hat) / (st * (1.0 - st))
    out = np.where(in_confusion_zone(s, params), 0.0, grad)
    if out.ndim == 0:
        return float(out)
    return out


def bin_centers(n_bins: int = 16) -> np.ndarray:
    """Angular bin centers, offset by half a bin so none straddles 0/2pi."""
    return 2.0 * math.pi * np.arange(n_bins) / n_bins + math.pi / n_bins


def rotation_expectation(weights, n_bins: int | None = None) -> float:
    """Circular expectation of the bin distribution, in (-pi, pi].

    Invariant under positive rescaling of the weights; wraps correctly where
    naive averaging of angles would not.
    """
    w = np.asarray(weights, dtype=np.float64)
    if n_bins is None:
        n_bins = len(w)
    if len(w) != n_bins:
        raise ValueError(f"expected {n_bins} weights, got {len(w)}")
    if np.any(w < 0.0):
        raise ValueError("bin weights must be nonnegative")
    total = float(w.sum())
    if total == 0.0:
        raise ValueError("all-zero bin weights")
    theta = bin_centers(n_bins)
    return math.atan2(float(w @ np.sin(theta)), float(w @ np.cos(theta)))


@dataclass
class TeacherScore:
    """Classification confidence plus a normalized rotation-bin distribution."""

    s: float
    rotation_bins: np.ndarray

    def __post_init__(self):
        self.rotation_bins = np.asarray(self.rotation_bins, dtype=np.float64)
        if not (0.0 <= self.s <= 1.0):
            raise ValueError("confidence must lie in [0, 1]")
        if abs(float(self.rotation_bins.sum()) - 1.0) > 1e-6:
            raise ValueError("rotation bins must sum to 1")


def mock_teacher(box: Box3D, scene: SyntheticScene, n_bins: int = 16,
                 concentration: float = 8.0) -> TeacherScore:
    """Geometric stand-in for a pretrained recognizer.

    Confidence is sqrt(best 3D IoU against the scene's boxes); rotation bins
    are von-Mises-shaped weights peaked at the best match's yaw (uniform when
    nothing overlaps). Deterministic.
    """
    best_iou = 0.0
    best_yaw = 0.0
    for gt in scene.gt_boxes:
        v = iou_3d(box, gt.box)
        if v > best_iou:
            best_iou, best_yaw = v, gt.box.yaw
    if best_iou <= 0.0:
        bins = np.full(n_bins, 1.0 / n_bins)
        return TeacherScore(0.0, bins)
    theta = bin_centers(n_bins)
    w = np.exp(concentration * np.cos(theta - best_yaw))
    return TeacherScore(math.sqrt(best_iou), w / w.sum())


def make_mock_teacher(scene: SyntheticScene, n_bins: int = 16,
                      concentration: float = 8.0):
    """Bind a scene into a scorer callable: Box3D -> TeacherScore."""
    def scorer(box: Box3D) -> TeacherScore:
        return mock_teacher(box, scene, n_bins, concentration)

    return scorer


@dataclass
class LabeledProposal:
    index: int
    s: float
    masked: bool
    s_hat: float | None
    target_yaw: float | None


@dataclass
class LabelCounts:
    positives: int  # s > s_h
    negatives: int  # s < s_l
    masked: int     # s in [s_l, s_h]


def label_batch(boxes, scorer, params: RectifyParams):
    """Teacher-side training targets for a batch of proposal boxes.

    Returns (labels, counts); masked entries carry no soft label or yaw.
    """
    labels = []
    pos = neg = masked = 0
    for i, box in enumerate(boxes):
        score = scorer(box)
        if in_confusion_zone(score.s, params):
            masked += 1
            labels.append(LabeledProposal(i, score.s, True, None, None))
            continue
        if score.s > params.s_h:
            pos += 1
        else:
            neg += 1
        labels.append(
            LabeledProposal(
                i,
                score.s,
                False,
                rectified_label(score.s, params),
                rotation_expectation(score.rotation_bins),
            )
        )
    return labels, LabelCounts(pos, neg, masked)


def write_label_batch(path, labels) -> None:
    """Tab-separated dump: index, raw s, masked flag, soft label, target yaw."""
    with open(path, "w") as fh:
        for lab in labels:
            s_hat = "nan" if lab.s_hat is None else f"{lab.s_hat:.9f}"
            yaw = "nan" if lab.target_yaw is None else f"{lab.target_yaw:.9f}"
            fh.write(f"{lab.index}\t{lab.s:.9f}\t{int(lab.masked)}\t{s_hat}\t{yaw}\n")
