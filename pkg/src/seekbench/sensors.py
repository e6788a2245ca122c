"""Ground-truth sensor suite.

Column-raycast renderer over extruded 2.5D geometry (color/depth/semantic/
instance images), planar lidar, single-ray casts, and the mIoU metric.  All
functions are pure in (world, pose) and deterministic bit-for-bit; the heavy
loops live in seekbench._kernels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _kernels
from .geometry import TAU, SegmentSoup
from .semantics import CEILING, CEILING_HEIGHT, FLOOR, PALETTE
from .worldgen import WorldMap, sensor_soup

DEFAULT_CAMERA_HEIGHT = 1.2


@dataclass(frozen=True)
class CameraIntrinsics:
    width: int = 160
    height: int = 120
    hfov: float = 80.0
    max_range: float = 20.0
    camera_height: float = DEFAULT_CAMERA_HEIGHT

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        if not 0.0 < self.hfov < 180.0:
            raise ValueError("hfov must be in (0, 180) degrees")
        if self.max_range <= 0.0:
            raise ValueError("max_range must be positive")

    @property
    def focal_px(self) -> float:
        return (self.width / 2.0) / math.tan(math.radians(self.hfov) / 2.0)


@dataclass(frozen=True)
class RayHit:
    distance: float
    class_id: int
    instance_id: int


@dataclass(frozen=True)
class LidarScan:
    n_beams: int
    angles: np.ndarray
    ranges: np.ndarray


@dataclass(frozen=True)
class Frames:
    color: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) float32, z-depth in meters
    seg: np.ndarray    # (H, W) uint8 class ids
    inst: np.ndarray   # (H, W) uint16 instance ids, 0 = none


@lru_cache(maxsize=32)
def _cached_sensor_soup(world: WorldMap) -> SegmentSoup:
    return sensor_soup(world)


def _as_soup(world) -> SegmentSoup:
    if isinstance(world, SegmentSoup):
        return world
    return _cached_sensor_soup(world)


def raycast(world, origin, direction, max_range: float = 20.0,
            slice_height: float = DEFAULT_CAMERA_HEIGHT) -> RayHit | None:
    """Nearest obstacle hit of a horizontal ray at ``slice_height``.

    ``direction`` must be a unit vector; the returned distance is Euclidean.
    Ties at equal distance go to the lowest instance id.  Returns None when
    nothing is hit within ``max_range``.
    """
    soup = _as_soup(world)
    if len(soup) == 0:
        return None
    t, idx = _kernels.ray_hit(
        soup.segs, soup.band_lo, soup.band_hi, soup.instance_ids,
        float(origin[0]), float(origin[1]),
        float(direction[0]), float(direction[1]),
        float(slice_height),
    )
    if idx < 0 or t > max_range:
        return None
    return RayHit(float(t), int(soup.class_ids[idx]), int(soup.instance_ids[idx]))


def render_frames(world, pose, intrinsics: CameraIntrinsics = CameraIntrinsics()) -> Frames:
    """Render one frame from ``pose`` = (x, y, yaw).

    One ray per column through the pinhole model; rows are filled by
    perspective projection of each hit's extruded height band, with floor
    below and ceiling above.  Depth stores z-depth (perpendicular distance
    to the camera plane); the no-hit sentinel is max_range.
    """
    soup = _as_soup(world)
    x, y, yaw = float(pose[0]), float(pose[1]), float(pose[2])
    w, h = intrinsics.width, intrinsics.height
    depth64 = np.empty((h, w), dtype=np.float64)
    seg = np.empty((h, w), dtype=np.uint8)
    inst = np.empty((h, w), dtype=np.uint16)
    _kernels.render_scene(
        soup.segs, soup.band_lo, soup.band_hi, soup.class_ids, soup.instance_ids,
        x, y, intrinsics.camera_height, math.cos(yaw), math.sin(yaw),
        w, h, intrinsics.focal_px, intrinsics.max_range, CEILING_HEIGHT,
        FLOOR, CEILING, depth64, seg, inst,
    )
    depth = depth64.astype(np.float32)
    shade = 1.0 / (1.0 + depth.astype(np.float64) / 10.0)
    color = (PALETTE[seg].astype(np.float64) * shade[:, :, None]).astype(np.uint8)
    return Frames(color=color, depth=depth, seg=seg, inst=inst)


def lidar_scan(world, pose, n_beams: int = 360, max_range: float = 20.0,
               slice_height: float = DEFAULT_CAMERA_HEIGHT) -> LidarScan:
    """360° planar scan at ``slice_height``; beam i points at yaw + i*step in
    the world frame.  Misses report max_range."""
    if n_beams <= 0:
        raise ValueError("n_beams must be positive")
    soup = _as_soup(world)
    x, y, yaw = float(pose[0]), float(pose[1]), float(pose[2])
    step = TAU / n_beams
    angles = yaw + step * np.arange(n_beams, dtype=np.float64)
    ranges = np.full(n_beams, max_range, dtype=np.float64)
    if len(soup) > 0:
        for i in range(n_beams):
            a = angles[i]
            t, idx = _kernels.ray_hit(
                soup.segs, soup.band_lo, soup.band_hi, soup.instance_ids,
                x, y, math.cos(a), math.sin(a), slice_height,
            )
            if idx >= 0 and t <= max_range:
                ranges[i] = t
    return LidarScan(n_beams=n_beams, angles=angles, ranges=ranges)


def mean_iou(predicted: np.ndarray, truth: np.ndarray, n_classes: int) -> float:
    """Mean per-class intersection-over-union; classes absent from both
    images are excluded from the mean."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise ValueError(f"shape mismatch: {predicted.shape} vs {truth.shape}")
    p = predicted.astype(np.int64).ravel()
    t = truth.astype(np.int64).ravel()
    if p.size and (p.max() >= n_classes or t.max() >= n_classes):
        raise ValueError("class id out of range")
    conf = np.bincount(t * n_classes + p, minlength=n_classes * n_classes)
    conf = conf.reshape(n_classes, n_classes)
    inter = np.diag(conf).astype(np.float64)
    union = conf.sum(axis=0) + conf.sum(axis=1) - np.diag(conf)
    present = union > 0
    if not present.any():
        return 1.0
    return float(np.mean(inter[present] / union[present]))
