"""Pure-numpy geometry kernels (fallback backend).

The compiled backend in ``_native.pyx`` mirrors these routines expression for
expression; both must produce bit-identical results.  Keep every arithmetic
step (operation order, comparison direction, tie-breaking) in sync when
editing either file.  No trigonometry here: callers pass precomputed
direction vectors.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "pure"

PARALLEL_EPS = 1e-12
RAY_T_EPS = 1e-9


def min_clearance_sq(segs: np.ndarray, x: float, y: float) -> tuple[float, int]:
    """Squared distance from point (x, y) to the nearest segment.

    Returns (distance^2, segment index); (inf, -1) for an empty soup.
    Ties keep the lowest index.
    """
    n = segs.shape[0]
    if n == 0:
        return math.inf, -1
    ax = segs[:, 0]
    ay = segs[:, 1]
    dx = segs[:, 2] - ax
    dy = segs[:, 3] - ay
    wx = x - ax
    wy = y - ay
    l2 = dx * dx + dy * dy
    safe = np.where(l2 > 0.0, l2, 1.0)
    t = (wx * dx + wy * dy) / safe
    t = np.where(l2 > 0.0, t, 0.0)
    t = np.minimum(np.maximum(t, 0.0), 1.0)
    ex = wx - t * dx
    ey = wy - t * dy
    d2 = ex * ex + ey * ey
    idx = int(np.argmin(d2))
    return float(d2[idx]), idx


def ray_hit(
    segs: np.ndarray,
    band_lo: np.ndarray,
    band_hi: np.ndarray,
    instance_ids: np.ndarray,
    ox: float,
    oy: float,
    rdx: float,
    rdy: float,
    height: float,
) -> tuple[float, int]:
    """First intersection of ray (ox,oy)+t*(rdx,rdy) with a segment whose
    height band contains ``height``.

    Returns (t, segment index) or (inf, -1).  Exact-distance ties are broken
    by the lowest instance id, then the lowest segment index.
    """
    n = segs.shape[0]
    if n == 0:
        return math.inf, -1
    ax = segs[:, 0]
    ay = segs[:, 1]
    ex = segs[:, 2] - ax
    ey = segs[:, 3] - ay
    qx = ax - ox
    qy = ay - oy
    den = rdx * ey - rdy * ex
    safe = np.where(np.abs(den) > PARALLEL_EPS, den, 1.0)
    t = (qx * ey - qy * ex) / safe
    s = (qx * rdy - qy * rdx) / safe
    ok = (
        (np.abs(den) > PARALLEL_EPS)
        & (t > RAY_T_EPS)
        & (s >= 0.0)
        & (s <= 1.0)
        & (band_lo <= height)
        & (height <= band_hi)
    )
    if not np.any(ok):
        return math.inf, -1
    idxs = np.nonzero(ok)[0]
    tt = t[idxs]
    inst = instance_ids[idxs].astype(np.int64)
    order = np.lexsort((idxs, inst, tt))
    best = idxs[order[0]]
    return float(t[best]), int(best)


def render_scene(
    segs: np.ndarray,
    band_lo: np.ndarray,
    band_hi: np.ndarray,
    class_ids: np.ndarray,
    instance_ids: np.ndarray,
    ox: float,
    oy: float,
    cam_h: float,
    cos_yaw: float,
    sin_yaw: float,
    width: int,
    height: int,
    f_px: float,
    max_range: float,
    ceil_h: float,
    floor_class: int,
    ceil_class: int,
    depth_out: np.ndarray,
    class_out: np.ndarray,
    inst_out: np.ndarray,
) -> None:
    """Column raycaster over extruded segments.

    One ray per column through the pixel's left edge (u = x - W/2), direction
    fwd + (u/f)*right so the ray parameter equals z-depth.  Rows project the
    hit band; rows that miss every band fill with floor (below / at the
    horizon) or ceiling (above), at the depth where the fill plane crosses
    the row's view ray.  Depth is clamped to max_range.
    """
    fwd_x = cos_yaw
    fwd_y = sin_yaw
    right_x = sin_yaw
    right_y = -cos_yaw

    ax = segs[:, 0]
    ay = segs[:, 1]
    ex = segs[:, 2] - ax
    ey = segs[:, 3] - ay
    qx = ax - ox
    qy = ay - oy

    v_rows = np.arange(height, dtype=np.float64) - 0.5 * height
    vf = v_rows / f_px
    with np.errstate(divide="ignore"):
        z_fill = np.where(v_rows >= 0.0, cam_h * f_px, (cam_h - ceil_h) * f_px) / v_rows
    fill_cls = np.where(v_rows >= 0.0, floor_class, ceil_class).astype(np.uint8)

    for col in range(width):
        su = (col - 0.5 * width) / f_px
        rdx = fwd_x + su * right_x
        rdy = fwd_y + su * right_y

        den = rdx * ey - rdy * ex
        safe = np.where(np.abs(den) > PARALLEL_EPS, den, 1.0)
        t = (qx * ey - qy * ex) / safe
        s = (qx * rdy - qy * rdx) / safe
        ok = (
            (np.abs(den) > PARALLEL_EPS)
            & (t > RAY_T_EPS)
            & (s >= 0.0)
            & (s <= 1.0)
        )
        idxs = np.nonzero(ok)[0]
        order = np.argsort(t[idxs], kind="stable")
        hit_idx = idxs[order]
        hit_t = t[hit_idx]

        depth_col = z_fill.copy()
        class_col = fill_cls.copy()
        inst_col = np.zeros(height, dtype=np.uint16)
        assigned = np.zeros(height, dtype=bool)
        for k in range(hit_idx.shape[0]):
            tk = hit_t[k]
            seg_i = hit_idx[k]
            h_at = cam_h - tk * vf
            hit_rows = (
                ~assigned
                & (tk <= z_fill)
                & (band_lo[seg_i] <= h_at)
                & (h_at <= band_hi[seg_i])
            )
            if hit_rows.any():
                depth_col[hit_rows] = tk
                class_col[hit_rows] = class_ids[seg_i]
                inst_col[hit_rows] = instance_ids[seg_i]
                assigned |= hit_rows
                if assigned.all():
                    break

        depth_out[:, col] = np.minimum(depth_col, max_range)
        class_out[:, col] = class_col
        inst_out[:, col] = inst_col
