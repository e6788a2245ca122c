# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled geometry kernels (native backend).

Expression-for-expression mirror of ``pure.py``; both backends must produce
bit-identical results.  The build passes -ffp-contract=off so C arithmetic
rounds every intermediate exactly like the numpy fallback.  No trigonometry:
callers pass precomputed direction vectors.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs

cnp.import_array()

BACKEND = "native"

cdef double PARALLEL_EPS = 1e-12
cdef double RAY_T_EPS = 1e-9


def min_clearance_sq(double[:, ::1] segs, double x, double y):
    """Squared distance from point (x, y) to the nearest segment.

    Returns (distance^2, segment index); (inf, -1) for an empty soup.
    Ties keep the lowest index.
    """
    cdef Py_ssize_t n = segs.shape[0]
    if n == 0:
        return INFINITY, -1
    cdef double ax, ay, dx, dy, wx, wy, l2, t, ex, ey, d2
    cdef double best = INFINITY
    cdef Py_ssize_t besti = -1
    cdef Py_ssize_t i
    for i in range(n):
        ax = segs[i, 0]
        ay = segs[i, 1]
        dx = segs[i, 2] - ax
        dy = segs[i, 3] - ay
        wx = x - ax
        wy = y - ay
        l2 = dx * dx + dy * dy
        if l2 > 0.0:
            t = (wx * dx + wy * dy) / l2
        else:
            t = 0.0
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        ex = wx - t * dx
        ey = wy - t * dy
        d2 = ex * ex + ey * ey
        if d2 < best:
            best = d2
            besti = i
    return best, besti


def ray_hit(
    double[:, ::1] segs,
    double[::1] band_lo,
    double[::1] band_hi,
    cnp.uint16_t[::1] instance_ids,
    double ox,
    double oy,
    double rdx,
    double rdy,
    double height,
):
    """First intersection of ray (ox,oy)+t*(rdx,rdy) with a segment whose
    height band contains ``height``.

    Returns (t, segment index) or (inf, -1).  Exact-distance ties are broken
    by the lowest instance id, then the lowest segment index.
    """
    cdef Py_ssize_t n = segs.shape[0]
    if n == 0:
        return INFINITY, -1
    cdef double ax, ay, ex, ey, qx, qy, den, t, s
    cdef double best_t = INFINITY
    cdef long best_inst = 0
    cdef Py_ssize_t besti = -1
    cdef long inst
    cdef Py_ssize_t i
    for i in range(n):
        if band_lo[i] <= height and height <= band_hi[i]:
            ax = segs[i, 0]
            ay = segs[i, 1]
            ex = segs[i, 2] - ax
            ey = segs[i, 3] - ay
            qx = ax - ox
            qy = ay - oy
            den = rdx * ey - rdy * ex
            if fabs(den) > PARALLEL_EPS:
                t = (qx * ey - qy * ex) / den
                s = (qx * rdy - qy * rdx) / den
                if t > RAY_T_EPS and s >= 0.0 and s <= 1.0:
                    inst = <long>instance_ids[i]
                    if t < best_t or (t == best_t and inst < best_inst):
                        best_t = t
                        best_inst = inst
                        besti = i
    if besti < 0:
        return INFINITY, -1
    return best_t, <Py_ssize_t>besti


def render_scene(
    double[:, ::1] segs,
    double[::1] band_lo,
    double[::1] band_hi,
    cnp.uint8_t[::1] class_ids,
    cnp.uint16_t[::1] instance_ids,
    double ox,
    double oy,
    double cam_h,
    double cos_yaw,
    double sin_yaw,
    int width,
    int height,
    double f_px,
    double max_range,
    double ceil_h,
    int floor_class,
    int ceil_class,
    double[:, ::1] depth_out,
    cnp.uint8_t[:, ::1] class_out,
    cnp.uint16_t[:, ::1] inst_out,
):
    """Column raycaster over extruded segments (see pure.py for semantics)."""
    cdef double fwd_x = cos_yaw
    cdef double fwd_y = sin_yaw
    cdef double right_x = sin_yaw
    cdef double right_y = -cos_yaw

    cdef Py_ssize_t n = segs.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] t_buf = np.empty(max(n, 1), dtype=np.float64)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] i_buf = np.empty(max(n, 1), dtype=np.int64)
    cdef double[::1] ht = t_buf
    cdef long[::1] hi = i_buf

    cdef double ax, ay, ex, ey, qx, qy, den, t, s
    cdef double su, rdx, rdy, v, vfr, z_fill, numer, tk, h_at, d
    cdef double tkey
    cdef long ikey
    cdef int fill_c
    cdef Py_ssize_t col, row, i, j, k, nhits
    cdef bint assigned

    for col in range(width):
        su = (col - 0.5 * width) / f_px
        rdx = fwd_x + su * right_x
        rdy = fwd_y + su * right_y

        nhits = 0
        for i in range(n):
            ax = segs[i, 0]
            ay = segs[i, 1]
            ex = segs[i, 2] - ax
            ey = segs[i, 3] - ay
            qx = ax - ox
            qy = ay - oy
            den = rdx * ey - rdy * ex
            if fabs(den) > PARALLEL_EPS:
                t = (qx * ey - qy * ex) / den
                s = (qx * rdy - qy * rdx) / den
                if t > RAY_T_EPS and s >= 0.0 and s <= 1.0:
                    ht[nhits] = t
                    hi[nhits] = i
                    nhits += 1

        # stable insertion sort by t (equal t keeps ascending segment order)
        for k in range(1, nhits):
            tkey = ht[k]
            ikey = hi[k]
            j = k - 1
            while j >= 0 and ht[j] > tkey:
                ht[j + 1] = ht[j]
                hi[j + 1] = hi[j]
                j -= 1
            ht[j + 1] = tkey
            hi[j + 1] = ikey

        for row in range(height):
            v = row - 0.5 * height
            vfr = v / f_px
            if v >= 0.0:
                numer = cam_h * f_px
                fill_c = floor_class
            else:
                numer = (cam_h - ceil_h) * f_px
                fill_c = ceil_class
            if v == 0.0:
                z_fill = INFINITY  # horizon row: fill clamps to max_range
            else:
                z_fill = numer / v

            assigned = False
            for k in range(nhits):
                tk = ht[k]
                if not tk <= z_fill:
                    break
                i = hi[k]
                h_at = cam_h - tk * vfr
                if band_lo[i] <= h_at and h_at <= band_hi[i]:
                    d = tk
                    if d > max_range:
                        d = max_range
                    depth_out[row, col] = d
                    class_out[row, col] = class_ids[i]
                    inst_out[row, col] = instance_ids[i]
                    assigned = True
                    break
            if not assigned:
                d = z_fill
                if d > max_range:
                    d = max_range
                depth_out[row, col] = d
                class_out[row, col] = <cnp.uint8_t>fill_c
                inst_out[row, col] = 0
