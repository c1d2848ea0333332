"""Pure-numpy implementations of the hot kernels.

The compiled extension in _native.pyx mirrors this arithmetic expression for
expression (and is built with -ffp-contract=off), so both backends produce
bit-identical results. Keep the operation order in sync when editing either.
"""

import numpy as np

MIN_CORNER_DEPTH = 0.1
_CHUNK = 4096

_CORNER_SIGNS = [
    (sx, sy, sz)
    for sx in (-1.0, 1.0)
    for sy in (-1.0, 1.0)
    for sz in (-1.0, 1.0)
]


def anchor_rects(centers, halfs, yaws, cam, width, height):
    """Projected, clamped pixel rectangles for a batch of boxes.

    Returns (valid, rects): valid is False where a corner is too close to the
    image plane or the projection misses the image; rects is (N, 4) as
    (u_min, v_min, u_max, v_max).
    """
    cx, cy, cz = centers[:, 0], centers[:, 1], centers[:, 2]
    lx, ly, lz = halfs[:, 0], halfs[:, 1], halfs[:, 2]
    ct, st = np.cos(yaws), np.sin(yaws)

    n = len(centers)
    valid = np.ones(n, dtype=bool)
    u_min = np.full(n, np.inf)
    v_min = np.full(n, np.inf)
    u_max = np.full(n, -np.inf)
    v_max = np.full(n, -np.inf)

    for sx, sy, sz in _CORNER_SIGNS:
        ex = sx * lx
        ez = sz * lz
        px = cx + ex * ct + ez * st
        py = cy + sy * ly
        pz = cz - ex * st + ez * ct
        valid &= pz > MIN_CORNER_DEPTH
        u = px * cam[0, 0] + py * cam[0, 1] + pz * cam[0, 2] + cam[0, 3]
        v = px * cam[1, 0] + py * cam[1, 1] + pz * cam[1, 2] + cam[1, 3]
        w = px * cam[2, 0] + py * cam[2, 1] + pz * cam[2, 2] + cam[2, 3]
        valid &= w > 1e-9
        w = np.where(w > 1e-9, w, 1.0)
        u = u / w
        v = v / w
        u_min = np.minimum(u_min, u)
        u_max = np.maximum(u_max, u)
        v_min = np.minimum(v_min, v)
        v_max = np.maximum(v_max, v)

    u_min = np.maximum(u_min, 0.0)
    v_min = np.maximum(v_min, 0.0)
    u_max = np.minimum(u_max, float(width))
    v_max = np.minimum(v_max, float(height))
    valid &= (u_min < u_max) & (v_min < v_max)
    rects = np.stack([u_min, v_min, u_max, v_max], axis=1)
    return valid, rects


def _patch_flat_indices(rects, hc, width, height):
    """Nearest-neighbor sample indices (N, hc*hc) into a flattened map."""
    u0 = rects[:, 0][:, None]
    v0 = rects[:, 1][:, None]
    su = (rects[:, 2] - rects[:, 0])[:, None] / hc
    sv = (rects[:, 3] - rects[:, 1])[:, None] / hc
    steps = np.arange(hc, dtype=np.float64) + 0.5
    cols = np.floor(u0 + steps * su).astype(np.int64)  # (N, hc)
    rows = np.floor(v0 + steps * sv).astype(np.int64)
    # guard against rounding at the clamped rect border
    np.clip(cols, 0, width - 1, out=cols)
    np.clip(rows, 0, height - 1, out=rows)
    return (rows[:, :, None] * width + cols[:, None, :]).reshape(len(rects), hc * hc)


def gather_patches(centers, halfs, yaws, xyz, ground, cam, hc):
    """Patch sample points and flags for each valid box.

    Returns (valid, pts (N, hc*hc, 3), gnd (N, hc*hc)); entries for invalid
    boxes are zeros.
    """
    height, width = ground.shape
    valid, rects = anchor_rects(centers, halfs, yaws, cam, width, height)
    n = len(centers)
    pts = np.zeros((n, hc * hc, 3))
    gnd = np.zeros((n, hc * hc), dtype=bool)
    if valid.any():
        idx = _patch_flat_indices(rects[valid], hc, width, height)
        pts[valid] = xyz.reshape(-1, 3)[idx]
        gnd[valid] = ground.reshape(-1)[idx]
    return valid, pts, gnd


def _count_inside(centers, halfs, yaws, pts, gnd):
    dx = pts[:, :, 0] - centers[:, 0][:, None]
    dy = pts[:, :, 1] - centers[:, 1][:, None]
    dz = pts[:, :, 2] - centers[:, 2][:, None]
    ct = np.cos(yaws)[:, None]
    st = np.sin(yaws)[:, None]
    qx = dx * ct - dz * st
    qz = dx * st + dz * ct
    inside = (
        (np.abs(qx) < halfs[:, 0][:, None])
        & (np.abs(dy) < halfs[:, 1][:, None])
        & (np.abs(qz) < halfs[:, 2][:, None])
        & ~gnd
    )
    return inside.sum(axis=1).astype(np.int64)


def anchor_density(centers, halfs, yaws, xyz, ground, cam, hc, num_threads=1):
    """Containment counts over resampled front-view patches.

    Returns (valid, n_in). num_threads is accepted for API parity with the
    compiled backend and ignored here.
    """
    n = len(centers)
    valid = np.zeros(n, dtype=bool)
    n_in = np.zeros(n, dtype=np.int64)
    for start in range(0, n, _CHUNK):
        sl = slice(start, min(start + _CHUNK, n))
        v, pts, gnd = gather_patches(
            centers[sl], halfs[sl], yaws[sl], xyz, ground, cam, hc
        )
        valid[sl] = v
        counts = _count_inside(centers[sl], halfs[sl], yaws[sl], pts, gnd)
        n_in[sl] = np.where(v, counts, 0)
    return valid, n_in


def count_sorted(p_sorted, centers, halfs, ct, st, lo, hi, num_threads=1):
    """Strict containment counts over pre-sliced candidate ranges."""
    counts = np.zeros(len(centers), dtype=np.int64)
    for k in range(len(centers)):
        if lo[k] >= hi[k]:
            continue
        cand = p_sorted[lo[k]:hi[k]]
        dx = cand[:, 0] - centers[k, 0]
        dy = cand[:, 1] - centers[k, 1]
        dz = cand[:, 2] - centers[k, 2]
        qx = dx * ct - dz * st
        qz = dx * st + dz * ct
        inside = (
            (np.abs(qx) < halfs[k, 0])
            & (np.abs(dy) < halfs[k, 1])
            & (np.abs(qz) < halfs[k, 2])
        )
        counts[k] = int(inside.sum())
    return counts


def grouped_count(points, centers, halfs, yaws, count_fn, num_threads=1):
    """Per-yaw-group orchestration for point-in-box counting.

    Sorts points along each group's box x-axis and prefilters candidates with
    an epsilon-widened interval; `count_fn` applies the exact test.
    """
    n = len(centers)
    counts = np.zeros(n, dtype=np.int64)
    if n == 0 or len(points) == 0:
        return counts

    px, pz = points[:, 0], points[:, 2]
    for yaw in np.unique(yaws):
        sel = np.nonzero(yaws == yaw)[0]
        ct, st = float(np.cos(yaw)), float(np.sin(yaw))
        rx = px * ct - pz * st
        order = np.argsort(rx, kind="stable")
        rx_sorted = rx[order]
        p_sorted = np.ascontiguousarray(points[order])

        c = np.ascontiguousarray(centers[sel])
        h = np.ascontiguousarray(halfs[sel])
        cx_r = c[:, 0] * ct - c[:, 2] * st
        lo = np.searchsorted(rx_sorted, cx_r - h[:, 0] - 1e-6, side="left")
        hi = np.searchsorted(rx_sorted, cx_r + h[:, 0] + 1e-6, side="right")
        counts[sel] = count_fn(p_sorted, c, h, ct, st,
                               lo.astype(np.int64), hi.astype(np.int64),
                               num_threads)
    return counts


def count_in_boxes(points, centers, halfs, yaws, num_threads=1):
    """Exact per-box counts of strictly-contained points."""
    return grouped_count(points, centers, halfs, yaws, count_sorted, num_threads)


# neighbor offsets in tie-break priority order: left, right, up, down
_NEIGHBORS = ((0, -1), (0, 1), (-1, 0), (1, 0))


def inpaint_nearest(xyz, valid, ground):
    """Fill invalid pixels from the nearest valid pixel (4-connected BFS).

    Ties at equal grid distance resolve in left, right, up, down order.
    Returns (xyz, ground) with every pixel assigned.
    """
    if not valid.any():
        raise ValueError("cannot inpaint a map with no valid pixels")
    xyz = xyz.copy()
    ground = ground.copy()
    filled = valid.astype(bool).copy()
    nb_filled = np.empty_like(filled)
    while not filled.all():
        assigned = np.zeros_like(filled)
        for dr, dc in _NEIGHBORS:
            # nb_filled[p] = filled[p + (dr, dc)] as of the previous wave
            nb_filled[:] = False
            if dr == 0:
                dst = (slice(None), slice(1, None)) if dc < 0 else (slice(None), slice(None, -1))
                src = (slice(None), slice(None, -1)) if dc < 0 else (slice(None), slice(1, None))
            else:
                dst = (slice(1, None), slice(None)) if dr < 0 else (slice(None, -1), slice(None))
                src = (slice(None, -1), slice(None)) if dr < 0 else (slice(1, None), slice(None))
            nb_filled[dst] = filled[src]
            take = ~filled & ~assigned & nb_filled
            if take.any():
                tr, tc = np.nonzero(take)
                xyz[tr, tc] = xyz[tr + dr, tc + dc]
                ground[tr, tc] = ground[tr + dr, tc + dc]
                assigned |= take
        filled |= assigned
    return xyz, ground
