# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels.

Arithmetic mirrors numpy_backend expression for expression; together with
-ffp-contract=off this keeps both backends bit-identical. Keep them in sync.
"""

from cython.parallel cimport prange
from libc.math cimport cos, fabs, floor, sin
from libc.stdlib cimport free, malloc

import numpy as np

cimport numpy as cnp

cnp.import_array()

ctypedef cnp.uint8_t u8
ctypedef cnp.int64_t i64
ctypedef cnp.int32_t i32

DEF MIN_CORNER_DEPTH = 0.1


cdef i64 _density_one(const double[:, ::1] centers, const double[:, ::1] halfs,
                      const double[::1] yaws, const double[:, :, ::1] xyz,
                      const u8[:, ::1] ground, const double[:, ::1] cam,
                      int hc, int width, int height, Py_ssize_t i,
                      u8* ok_out) nogil:
    cdef double cx = centers[i, 0]
    cdef double cy = centers[i, 1]
    cdef double cz = centers[i, 2]
    cdef double lx = halfs[i, 0]
    cdef double ly = halfs[i, 1]
    cdef double lz = halfs[i, 2]
    cdef double ct = cos(yaws[i])
    cdef double st = sin(yaws[i])
    cdef double c00 = cam[0, 0], c01 = cam[0, 1], c02 = cam[0, 2], c03 = cam[0, 3]
    cdef double c10 = cam[1, 0], c11 = cam[1, 1], c12 = cam[1, 2], c13 = cam[1, 3]
    cdef double c20 = cam[2, 0], c21 = cam[2, 1], c22 = cam[2, 2], c23 = cam[2, 3]

    cdef double u_min = 1e300, v_min = 1e300, u_max = -1e300, v_max = -1e300
    cdef double sx, sy, sz, ex, ez, px, py, pz, u, v, w
    cdef int k
    for k in range(8):
        sx = -1.0 if (k & 4) == 0 else 1.0
        sy = -1.0 if (k & 2) == 0 else 1.0
        sz = -1.0 if (k & 1) == 0 else 1.0
        ex = sx * lx
        ez = sz * lz
        px = cx + ex * ct + ez * st
        py = cy + sy * ly
        pz = cz - ex * st + ez * ct
        if pz <= MIN_CORNER_DEPTH:
            ok_out[0] = 0
            return 0
        u = px * c00 + py * c01 + pz * c02 + c03
        v = px * c10 + py * c11 + pz * c12 + c13
        w = px * c20 + py * c21 + pz * c22 + c23
        if w <= 1e-9:
            ok_out[0] = 0
            return 0
        u = u / w
        v = v / w
        if u < u_min: u_min = u
        if u > u_max: u_max = u
        if v < v_min: v_min = v
        if v > v_max: v_max = v

    if u_min < 0.0: u_min = 0.0
    if v_min < 0.0: v_min = 0.0
    if u_max > width: u_max = width
    if v_max > height: v_max = height
    if u_min >= u_max or v_min >= v_max:
        ok_out[0] = 0
        return 0

    cdef double su = (u_max - u_min) / hc
    cdef double sv = (v_max - v_min) / hc
    cdef i64 count = 0
    cdef int r, c
    cdef long row, col
    cdef double us, vs, dx, dy, dz, qx, qz
    for r in range(hc):
        vs = v_min + (r + 0.5) * sv
        row = <long>floor(vs)
        if row < 0: row = 0
        elif row >= height: row = height - 1
        for c in range(hc):
            us = u_min + (c + 0.5) * su
            col = <long>floor(us)
            if col < 0: col = 0
            elif col >= width: col = width - 1
            if ground[row, col]:
                continue
            dx = xyz[row, col, 0] - cx
            dy = xyz[row, col, 1] - cy
            dz = xyz[row, col, 2] - cz
            qx = dx * ct - dz * st
            qz = dx * st + dz * ct
            if fabs(qx) < lx and fabs(dy) < ly and fabs(qz) < lz:
                count = count + 1
    ok_out[0] = 1
    return count


def density_kernel(const double[:, ::1] centers, const double[:, ::1] halfs,
                   const double[::1] yaws, const double[:, :, ::1] xyz,
                   const u8[:, ::1] ground, const double[:, ::1] cam,
                   int hc, int num_threads):
    cdef Py_ssize_t n = centers.shape[0]
    cdef int height = <int>xyz.shape[0]
    cdef int width = <int>xyz.shape[1]
    valid_arr = np.zeros(n, dtype=np.uint8)
    nin_arr = np.zeros(n, dtype=np.int64)
    cdef u8[::1] valid = valid_arr
    cdef i64[::1] nin = nin_arr
    cdef Py_ssize_t i
    if num_threads < 1:
        num_threads = 1
    with nogil:
        for i in prange(n, num_threads=num_threads, schedule='static'):
            nin[i] = _density_one(centers, halfs, yaws, xyz, ground, cam,
                                  hc, width, height, i, &valid[i])
    return valid_arr.astype(bool), nin_arr


def count_sorted(const double[:, ::1] p_sorted, const double[:, ::1] centers,
                 const double[:, ::1] halfs, double ct, double st,
                 const i64[::1] lo, const i64[::1] hi, int num_threads):
    cdef Py_ssize_t n = centers.shape[0]
    counts_arr = np.zeros(n, dtype=np.int64)
    cdef i64[::1] counts = counts_arr
    cdef Py_ssize_t k, j
    cdef double cx, cy, cz, lx, ly, lz, dx, dy, dz, qx, qz
    cdef i64 acc
    if num_threads < 1:
        num_threads = 1
    with nogil:
        for k in prange(n, num_threads=num_threads, schedule='static'):
            cx = centers[k, 0]
            cy = centers[k, 1]
            cz = centers[k, 2]
            lx = halfs[k, 0]
            ly = halfs[k, 1]
            lz = halfs[k, 2]
            acc = 0
            for j in range(lo[k], hi[k]):
                dx = p_sorted[j, 0] - cx
                dy = p_sorted[j, 1] - cy
                dz = p_sorted[j, 2] - cz
                qx = dx * ct - dz * st
                qz = dx * st + dz * ct
                if fabs(qx) < lx and fabs(dy) < ly and fabs(qz) < lz:
                    acc = acc + 1
            counts[k] = acc
    return counts_arr


def inpaint_bfs(double[:, :, ::1] xyz, u8[:, ::1] ground, i32[:, ::1] dist):
    """In-place nearest-valid fill; dist holds 0 for valid, -1 elsewhere.

    Level-synchronous 4-connected BFS; each filled pixel copies from its
    first neighbor (left, right, up, down order) settled at an earlier level.
    """
    cdef Py_ssize_t height = xyz.shape[0]
    cdef Py_ssize_t width = xyz.shape[1]
    cdef Py_ssize_t total = height * width
    cdef i64* cur = <i64*>malloc(total * sizeof(i64))
    cdef i64* nxt = <i64*>malloc(total * sizeof(i64))
    if cur == NULL or nxt == NULL:
        free(cur)
        free(nxt)
        raise MemoryError()

    cdef Py_ssize_t n_cur = 0, n_nxt, r, c, rr, cc, q, idx
    cdef int level = 0, d, found
    cdef i64* tmp
    # fixed scan priority: left, right, up, down
    cdef int[4] dr = [0, 0, -1, 1]
    cdef int[4] dc = [-1, 1, 0, 0]

    with nogil:
        for r in range(height):
            for c in range(width):
                if dist[r, c] == 0:
                    cur[n_cur] = r * width + c
                    n_cur += 1
        while n_cur > 0:
            level += 1
            n_nxt = 0
            for q in range(n_cur):
                r = cur[q] // width
                c = cur[q] - r * width
                for d in range(4):
                    rr = r + dr[d]
                    cc = c + dc[d]
                    if rr < 0 or rr >= height or cc < 0 or cc >= width:
                        continue
                    if dist[rr, cc] != -1:
                        continue
                    dist[rr, cc] = level
                    # choose the value source by neighbor priority
                    found = 0
                    for idx in range(4):
                        if found:
                            break
                        if (rr + dr[idx] >= 0 and rr + dr[idx] < height
                                and cc + dc[idx] >= 0 and cc + dc[idx] < width
                                and dist[rr + dr[idx], cc + dc[idx]] >= 0
                                and dist[rr + dr[idx], cc + dc[idx]] < level):
                            xyz[rr, cc, 0] = xyz[rr + dr[idx], cc + dc[idx], 0]
                            xyz[rr, cc, 1] = xyz[rr + dr[idx], cc + dc[idx], 1]
                            xyz[rr, cc, 2] = xyz[rr + dr[idx], cc + dc[idx], 2]
                            ground[rr, cc] = ground[rr + dr[idx], cc + dc[idx]]
                            found = 1
                    nxt[n_nxt] = rr * width + cc
                    n_nxt += 1
            tmp = cur
            cur = nxt
            nxt = tmp
            n_cur = n_nxt
    free(cur)
    free(nxt)
