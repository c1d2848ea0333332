"""Independent reference implementations used to check the library.

Everything here is deliberately written from the definitions in plain
scalar Python (or brute-force numpy), separate from the library's code
paths, so tests compare two independent derivations.
"""

import math

import numpy as np


def rotation_matrix_y(yaw: float) -> np.ndarray:
    c, s = math.cos(yaw), math.sin(yaw)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def local_coords(p, center, yaw) -> np.ndarray:
    """Rotation-matrix route into the box frame: R^T (p - c)."""
    return rotation_matrix_y(yaw).T @ (np.asarray(p, dtype=np.float64) - center)


def point_in_box(p, center, half, yaw) -> bool:
    q = local_coords(p, center, yaw)
    return bool(abs(q[0]) < half[0] and abs(q[1]) < half[1] and abs(q[2]) < half[2])


def brute_force_density(center, half, yaw, xyz, ground, cam, hc, width, height):
    """Scalar re-derivation of the patch-density computation.

    Projects the 8 corners, clamps the bounding rect, samples hc^2 nearest
    pixels, rotates each into the box frame, and counts strict containment of
    non-ground points. Returns (n_in, inside list) or None if culled.
    """
    cx, cy, cz = (float(v) for v in center)
    lx, ly, lz = (float(v) for v in half)
    ct, st = math.cos(yaw), math.sin(yaw)

    u_min = v_min = math.inf
    u_max = v_max = -math.inf
    for sx in (-1.0, 1.0):
        for sy in (-1.0, 1.0):
            for sz in (-1.0, 1.0):
                ex = sx * lx
                ez = sz * lz
                px = cx + ex * ct + ez * st
                py = cy + sy * ly
                pz = cz - ex * st + ez * ct
                if pz <= 0.1:
                    return None
                u = px * cam[0][0] + py * cam[0][1] + pz * cam[0][2] + cam[0][3]
                v = px * cam[1][0] + py * cam[1][1] + pz * cam[1][2] + cam[1][3]
                w = px * cam[2][0] + py * cam[2][1] + pz * cam[2][2] + cam[2][3]
                if w <= 1e-9:
                    return None
                u, v = u / w, v / w
                u_min, u_max = min(u_min, u), max(u_max, u)
                v_min, v_max = min(v_min, v), max(v_max, v)

    u_min = max(u_min, 0.0)
    v_min = max(v_min, 0.0)
    u_max = min(u_max, float(width))
    v_max = min(v_max, float(height))
    if u_min >= u_max or v_min >= v_max:
        return None

    su = (u_max - u_min) / hc
    sv = (v_max - v_min) / hc
    n_in = 0
    inside = []
    for r in range(hc):
        row = math.floor(v_min + (r + 0.5) * sv)
        row = min(max(row, 0), height - 1)
        for c in range(hc):
            col = math.floor(u_min + (c + 0.5) * su)
            col = min(max(col, 0), width - 1)
            if ground[row][col]:
                inside.append(False)
                continue
            p = xyz[row][col]
            ok = point_in_box(p, np.array([cx, cy, cz]), (lx, ly, lz), yaw)
            inside.append(ok)
            n_in += int(ok)
    return n_in, inside


def monte_carlo_iou(corners_a, corners_b, contains_a, contains_b, n_samples,
                    rng) -> float:
    """Volume-sampling IoU estimate over the joint bounding box."""
    lo = np.minimum(corners_a.min(axis=0), corners_b.min(axis=0))
    hi = np.maximum(corners_a.max(axis=0), corners_b.max(axis=0))
    pts = rng.uniform(lo, hi, size=(n_samples, 3))
    in_a = contains_a(pts)
    in_b = contains_b(pts)
    union = int((in_a | in_b).sum())
    if union == 0:
        return 0.0
    return float((in_a & in_b).sum()) / union


def max_matching_recall(iou_matrix, thresh) -> int:
    """Maximum bipartite matching size (brute force over GT subsets).

    iou_matrix: (n_det, n_gt). Counts the best achievable number of matched
    ground truths with one-to-one assignments above the threshold.
    """
    n_det, n_gt = iou_matrix.shape
    edges = [
        [j for j in range(n_gt) if iou_matrix[i, j] >= thresh]
        for i in range(n_det)
    ]
    best = 0

    def backtrack(i, used, count):
        nonlocal best
        best = max(best, count)
        if i == n_det or count == n_gt:
            return
        remaining = n_det - i
        if count + remaining <= best:
            return
        backtrack(i + 1, used, count)
        for j in edges[i]:
            if j not in used:
                backtrack(i + 1, used | {j}, count + 1)

    backtrack(0, frozenset(), 0)
    return best
