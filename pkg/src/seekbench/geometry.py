"""Planar geometry shared by the world model, physics, and sensors.

Obstacle footprints are reduced to flat arrays of wall segments ("soups")
so the hot kernels can iterate them without touching Python objects.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass

import numpy as np

TAU = 2.0 * math.pi


def wrap_angle(a: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    w = math.remainder(a, TAU)
    if w <= -math.pi:
        w += TAU
    return w


def heading(yaw: float) -> tuple[float, float]:
    return (math.cos(yaw), math.sin(yaw))


def hash64(*parts) -> int:
    """Stable 64-bit stream id derived from arbitrary parts (seed derivation)."""
    h = hashlib.sha256(repr(parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "little")


def polygon_signed_area(vertices) -> float:
    area = 0.0
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        area += x0 * y1 - x1 * y0
    return 0.5 * area


def point_in_polygon(x: float, y: float, vertices) -> bool:
    """Even-odd crossing test; points on an edge may land either way."""
    inside = False
    n = len(vertices)
    for i in range(n):
        x0, y0 = vertices[i]
        x1, y1 = vertices[(i + 1) % n]
        if (y0 > y) != (y1 > y):
            xi = x0 + (y - y0) * (x1 - x0) / (y1 - y0)
            if x < xi:
                inside = not inside
    return inside


def polygon_is_simple(vertices) -> bool:
    """No two non-adjacent edges may cross."""
    n = len(vertices)
    if n < 3:
        return False

    def seg(i):
        return vertices[i], vertices[(i + 1) % n]

    for i in range(n):
        (ax, ay), (bx, by) = seg(i)
        if ax == bx and ay == by:
            return False
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue
            (cx, cy), (dx, dy) = seg(j)
            if _segments_cross(ax, ay, bx, by, cx, cy, dx, dy):
                return False
    return True


def _segments_cross(ax, ay, bx, by, cx, cy, dx, dy) -> bool:
    def orient(px, py, qx, qy, rx, ry):
        v = (qx - px) * (ry - py) - (qy - py) * (rx - px)
        return (v > 0) - (v < 0)

    o1 = orient(ax, ay, bx, by, cx, cy)
    o2 = orient(ax, ay, bx, by, dx, dy)
    o3 = orient(cx, cy, dx, dy, ax, ay)
    o4 = orient(cx, cy, dx, dy, bx, by)
    return o1 != o2 and o3 != o4 and 0 not in (o1, o2, o3, o4)


@dataclass
class SegmentSoup:
    """Flat, kernel-ready view of extruded wall segments.

    segs[i] = (ax, ay, bx, by); the wall occupies heights [band_lo, band_hi].
    """

    segs: np.ndarray        # (S, 4) float64, C-contiguous
    band_lo: np.ndarray     # (S,)  float64
    band_hi: np.ndarray     # (S,)  float64
    class_ids: np.ndarray   # (S,)  uint8
    instance_ids: np.ndarray  # (S,) uint16

    def __len__(self) -> int:
        return self.segs.shape[0]

    @staticmethod
    def empty() -> "SegmentSoup":
        return SegmentSoup(
            segs=np.zeros((0, 4), dtype=np.float64),
            band_lo=np.zeros(0, dtype=np.float64),
            band_hi=np.zeros(0, dtype=np.float64),
            class_ids=np.zeros(0, dtype=np.uint8),
            instance_ids=np.zeros(0, dtype=np.uint16),
        )


def soup_from_polygons(entries) -> SegmentSoup:
    """entries: iterable of (vertices, band_lo, band_hi, class_id, instance_id)."""
    segs, lo, hi, cls, inst = [], [], [], [], []
    for vertices, b_lo, b_hi, class_id, instance_id in entries:
        n = len(vertices)
        for i in range(n):
            ax, ay = vertices[i]
            bx, by = vertices[(i + 1) % n]
            segs.append((ax, ay, bx, by))
            lo.append(b_lo)
            hi.append(b_hi)
            cls.append(class_id)
            inst.append(instance_id)
    if not segs:
        return SegmentSoup.empty()
    return SegmentSoup(
        segs=np.ascontiguousarray(segs, dtype=np.float64),
        band_lo=np.asarray(lo, dtype=np.float64),
        band_hi=np.asarray(hi, dtype=np.float64),
        class_ids=np.asarray(cls, dtype=np.uint8),
        instance_ids=np.asarray(inst, dtype=np.uint16),
    )


def soup_concat(a: SegmentSoup, b: SegmentSoup) -> SegmentSoup:
    if len(a) == 0:
        return b
    if len(b) == 0:
        return a
    return SegmentSoup(
        segs=np.ascontiguousarray(np.concatenate([a.segs, b.segs])),
        band_lo=np.concatenate([a.band_lo, b.band_lo]),
        band_hi=np.concatenate([a.band_hi, b.band_hi]),
        class_ids=np.concatenate([a.class_ids, b.class_ids]),
        instance_ids=np.concatenate([a.instance_ids, b.instance_ids]),
    )
