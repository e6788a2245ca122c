"""Procedural office-floor worlds: generation, validation, serialization, mesh export.

Layout recipe: a central corridor spine with rooms budded off both sides.
Rooms own their perimeter walls (inset strips), so every obstacle lies inside
a room; doorways are 1 m gaps in the corridor-facing wall topped by a
door-class lintel band, leaving the opening passable and visible.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import ndimage

from . import semantics as sem
from .geometry import (
    SegmentSoup,
    hash64,
    point_in_polygon,
    polygon_is_simple,
    polygon_signed_area,
    soup_concat,
    soup_from_polygons,
)


class GenerationError(Exception):
    """Raised when generation parameters are infeasible."""


class SceneFormatError(Exception):
    """Raised when scene JSON violates the published schema."""


Point = tuple[float, float]


@dataclass(frozen=True)
class Obstacle:
    polygon: tuple[Point, ...]
    class_id: int
    instance_id: int
    height: float

    @property
    def base(self) -> float:
        return sem.class_base(self.class_id)


@dataclass(frozen=True)
class Room:
    polygon: tuple[Point, ...]
    type: str


@dataclass(frozen=True)
class WorldMap:
    bounds: tuple[float, float, float, float]  # xmin, ymin, xmax, ymax
    rooms: tuple[Room, ...]
    obstacles: tuple[Obstacle, ...]
    spawn_points: tuple[Point, ...]
    scene_seed: int


@dataclass(frozen=True)
class GenParams:
    width: float = 18.0
    depth: float = 14.0
    min_rooms: int = 8
    max_rooms: int = 12
    corridor_width: float = 2.0
    min_room_span: float = 3.0
    max_room_span: float = 5.0
    wall_thickness: float = 0.08
    door_width: float = 1.0
    n_spawn_points: int = 6
    agent_radius: float = 0.3


# Furniture footprints (width x depth, meters) and placement clearances.
_SIZES = {
    "table_office": (1.2, 0.7),
    "table_conf": (1.6, 0.9),
    "monitor": (0.5, 0.12),
    "chair": (0.45, 0.45),
    "storage": (0.9, 0.35),
    "storage_bath": (0.6, 0.35),
    "couch": (1.5, 0.65),
    "clutter": (0.3, 0.3),
}
_ITEM_GAP = 0.8       # min gap between blocking furniture rects
_WALL_CLEAR = 0.55    # min gap from furniture to inner wall faces
_DOOR_CLEAR = 1.3     # furniture keep-out radius around doorway centers
_ROOM_TYPE_SHARES = (("office", 0.50), ("conference", 0.15), ("storage", 0.15), ("bathroom", 0.10))


def _rect(x0: float, y0: float, x1: float, y1: float) -> tuple[Point, ...]:
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def _rect_bbox(poly) -> tuple[float, float, float, float]:
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    return min(xs), min(ys), max(xs), max(ys)


def _rect_gap(a, b) -> float:
    ax0, ay0, ax1, ay1 = a
    bx0, by0, bx1, by1 = b
    dx = max(ax0 - bx1, bx0 - ax1, 0.0)
    dy = max(ay0 - by1, by0 - ay1, 0.0)
    return math.hypot(dx, dy)


def _rect_point_dist(r, p) -> float:
    x0, y0, x1, y1 = r
    dx = max(x0 - p[0], 0.0, p[0] - x1)
    dy = max(y0 - p[1], 0.0, p[1] - y1)
    return math.hypot(dx, dy)


class _Builder:
    def __init__(self) -> None:
        self.obstacles: list[Obstacle] = []
        self._next_instance = 1

    def add(self, poly, class_id: int) -> Obstacle:
        obs = Obstacle(
            polygon=tuple((float(x), float(y)) for x, y in poly),
            class_id=class_id,
            instance_id=self._next_instance,
            height=sem.class_height(class_id),
        )
        self._next_instance += 1
        self.obstacles.append(obs)
        return obs


def _partition_spans(rng, total: float, k: int, lo: float, hi: float) -> list[float]:
    """k spans in [lo, hi] summing to total (rejection with an equal-split fallback)."""
    for _ in range(100):
        raw = lo + rng.random(k) * (hi - lo)
        spans = raw * (total / raw.sum())
        if np.all(spans >= lo - 1e-9) and np.all(spans <= hi + 1e-9):
            return [float(s) for s in spans]
    return [total / k] * k


def generate_scene(scene_seed: int, params: GenParams | None = None) -> WorldMap:
    params = params or GenParams()
    w, d = params.width, params.depth
    cw = params.corridor_width
    th = params.wall_thickness
    band_depth = (d - cw) / 2.0

    if band_depth < 2.0:
        raise GenerationError(
            f"infeasible params: room band depth {band_depth:.2f} m < 2.00 m "
            f"(extents {w:g} x {d:g}, corridor {cw:g})"
        )
    k_lo = max(1, math.ceil(w / params.max_room_span))
    k_hi = math.floor(w / params.min_room_span)
    if k_hi < k_lo:
        raise GenerationError(
            f"infeasible params: width {w:g} m cannot be split into rooms of "
            f"{params.min_room_span:g}-{params.max_room_span:g} m span"
        )
    max_total = 2 * k_hi + 1
    if params.min_rooms > max_total:
        raise GenerationError(
            f"infeasible params: min_rooms {params.min_rooms} exceeds the "
            f"{max_total} rooms achievable at extents {w:g} x {d:g}"
        )

    rng_layout = np.random.default_rng(hash64(scene_seed, "layout"))

    lo_total = 2 * k_lo + 1
    target = int(rng_layout.integers(params.min_rooms, params.max_rooms + 1))
    target = min(max(target, lo_total), max_total)
    budded = target - 1
    k_top = budded // 2 + (budded % 2) * int(rng_layout.integers(0, 2))
    k_top = min(max(k_top, k_lo), k_hi)
    k_bot = min(max(budded - k_top, k_lo), k_hi)

    y_c0 = band_depth
    y_c1 = band_depth + cw

    rooms: list[Room] = [Room(_rect(0.0, y_c0, w, y_c1), "hallway")]
    room_boxes: list[tuple[float, float, float, float]] = [(0.0, y_c0, w, y_c1)]
    facing: list[str] = ["corridor"]

    for side, k in (("bottom", k_bot), ("top", k_top)):
        spans = _partition_spans(rng_layout, w, k, params.min_room_span, params.max_room_span)
        x = 0.0
        for s in spans:
            if side == "bottom":
                box = (x, 0.0, x + s, y_c0)
            else:
                box = (x, y_c1, x + s, d)
            rooms.append(Room(_rect(*box), "office"))  # type re-assigned below
            room_boxes.append(box)
            facing.append(side)
            x += s

    n_budded = len(rooms) - 1
    counts: list[tuple[str, int]] = []
    used = 0
    for name, share in _ROOM_TYPE_SHARES:
        c = int(n_budded * share + 0.5)
        if name == "office":
            c = max(c, 1)
        counts.append((name, c))
        used += c
    types = [name for name, c in counts for _ in range(c)][:n_budded]
    while len(types) < n_budded:
        types.append("hallway")
    types = [types[i] for i in rng_layout.permutation(n_budded)]
    rooms = [rooms[0]] + [Room(r.polygon, t) for r, t in zip(rooms[1:], types)]

    builder = _Builder()
    door_centers: list[Point] = []

    # Corridor end caps.
    builder.add(_rect(0.0, y_c0, th, y_c1), sem.WALL)
    builder.add(_rect(w - th, y_c0, w, y_c1), sem.WALL)

    # Per-room perimeter walls with a door gap on the corridor-facing edge.
    for box, face in zip(room_boxes[1:], facing[1:]):
        x0, y0, x1, y1 = box
        builder.add(_rect(x0, y0, x0 + th, y1), sem.WALL)
        builder.add(_rect(x1 - th, y0, x1, y1), sem.WALL)
        margin = 0.8 + params.door_width / 2.0
        gx = float(rng_layout.uniform(x0 + margin, x1 - margin))
        g0, g1 = gx - params.door_width / 2.0, gx + params.door_width / 2.0
        if face == "bottom":  # corridor side is the top edge
            solid_y = (y0, y0 + th)
            gap_y = (y1 - th, y1)
            door_centers.append((gx, y1))
        else:
            solid_y = (y1 - th, y1)
            gap_y = (y0, y0 + th)
            door_centers.append((gx, y0))
        builder.add(_rect(x0, solid_y[0], x1, solid_y[1]), sem.WALL)
        builder.add(_rect(x0, gap_y[0], g0, gap_y[1]), sem.WALL)
        builder.add(_rect(g1, gap_y[0], x1, gap_y[1]), sem.WALL)
        builder.add(_rect(g0, gap_y[0], g1, gap_y[1]), sem.DOOR)

    structural = len(builder.obstacles)

    last_error: list[str] = []
    for attempt in range(10):
        del builder.obstacles[structural:]
        builder._next_instance = builder.obstacles[-1].instance_id + 1
        rng_furn = np.random.default_rng(hash64(scene_seed, "furniture", attempt))
        _furnish(builder, rng_furn, room_boxes, ["hallway"] + types, facing, door_centers, th)

        rng_spawn = np.random.default_rng(hash64(scene_seed, "spawn", attempt))
        spawns = _sample_spawns(rng_spawn, builder.obstacles, (0.0, 0.0, w, d),
                                (th + 0.5, y_c0 + 0.45, w - th - 0.5, y_c1 - 0.45),
                                params)
        world = WorldMap(
            bounds=(0.0, 0.0, float(w), float(d)),
            rooms=tuple(rooms),
            obstacles=tuple(builder.obstacles),
            spawn_points=tuple(spawns),
            scene_seed=int(scene_seed),
        )
        last_error = validate_scene(world, agent_radius=params.agent_radius)
        if not last_error:
            return world
    raise GenerationError(f"generation failed validation after retries: {last_error[:3]}")


def _furnish(builder, rng, room_boxes, types, facing, door_centers, th) -> None:
    blocking: list[tuple[float, float, float, float]] = []

    def try_place(box, size, flush_side=None, door_pts=()):
        iw, id_ = size
        if rng.random() < 0.5 and flush_side is None:
            iw, id_ = id_, iw
        x0, y0, x1, y1 = box
        ax0, ay0 = x0 + th + _WALL_CLEAR, y0 + th + _WALL_CLEAR
        ax1, ay1 = x1 - th - _WALL_CLEAR, y1 - th - _WALL_CLEAR
        for _ in range(60):
            if flush_side == "left":
                rx0, rx1 = x0 + th, x0 + th + id_
                if ay1 - iw < ay0:
                    return None
                cy = float(rng.uniform(ay0 + iw / 2, ay1 - iw / 2))
                ry0, ry1 = cy - iw / 2, cy + iw / 2
            elif flush_side == "right":
                rx0, rx1 = x1 - th - id_, x1 - th
                if ay1 - iw < ay0:
                    return None
                cy = float(rng.uniform(ay0 + iw / 2, ay1 - iw / 2))
                ry0, ry1 = cy - iw / 2, cy + iw / 2
            elif flush_side == "bottom":
                ry0, ry1 = y0 + th, y0 + th + id_
                if ax1 - iw < ax0:
                    return None
                cx = float(rng.uniform(ax0 + iw / 2, ax1 - iw / 2))
                rx0, rx1 = cx - iw / 2, cx + iw / 2
            elif flush_side == "top":
                ry0, ry1 = y1 - th - id_, y1 - th
                if ax1 - iw < ax0:
                    return None
                cx = float(rng.uniform(ax0 + iw / 2, ax1 - iw / 2))
                rx0, rx1 = cx - iw / 2, cx + iw / 2
            else:
                if ax1 - iw < ax0 or ay1 - id_ < ay0:
                    return None
                cx = float(rng.uniform(ax0 + iw / 2, ax1 - iw / 2))
                cy = float(rng.uniform(ay0 + id_ / 2, ay1 - id_ / 2))
                rx0, rx1 = cx - iw / 2, cx + iw / 2
                ry0, ry1 = cy - id_ / 2, cy + id_ / 2
            rect = (rx0, ry0, rx1, ry1)
            if any(_rect_gap(rect, other) < _ITEM_GAP for other in blocking):
                continue
            if any(_rect_point_dist(rect, dc) < _DOOR_CLEAR for dc in door_pts):
                continue
            blocking.append(rect)
            return rect
        return None

    def flush_sides(face):
        # any side except the corridor-facing one
        sides = ["left", "right", "bottom", "top"]
        sides.remove("top" if face == "bottom" else "bottom" if face == "top" else "left")
        return sides

    for box, rtype, face, door in zip(room_boxes, types, facing, [None] + list(door_centers)):
        door_pts = door_centers if face == "corridor" else ([door] if door else [])
        if rtype == "office":
            t = try_place(box, _SIZES["table_office"], door_pts=door_pts)
            if t is not None:
                builder.add(_rect(*t), sem.TABLE)
                _add_monitor(builder, rng, t)
            for _ in range(int(rng.integers(1, 4))):
                c = try_place(box, _SIZES["chair"], door_pts=door_pts)
                if c is not None:
                    builder.add(_rect(*c), sem.CHAIR)
            if rng.random() < 0.25:
                side = flush_sides(face)[int(rng.integers(0, 3))]
                s = try_place(box, _SIZES["couch"], flush_side=side, door_pts=door_pts)
                if s is not None:
                    builder.add(_rect(*s), sem.COUCH)
            for _ in range(int(rng.integers(0, 3))):
                c = try_place(box, _SIZES["clutter"], door_pts=door_pts)
                if c is not None:
                    builder.add(_rect(*c), sem.CLUTTER)
        elif rtype == "conference":
            t = try_place(box, _SIZES["table_conf"], door_pts=door_pts)
            if t is not None:
                builder.add(_rect(*t), sem.TABLE)
                if rng.random() < 0.5:
                    _add_monitor(builder, rng, t)
            for _ in range(int(rng.integers(2, 5))):
                c = try_place(box, _SIZES["chair"], door_pts=door_pts)
                if c is not None:
                    builder.add(_rect(*c), sem.CHAIR)
            if rng.random() < 0.5:
                side = flush_sides(face)[int(rng.integers(0, 3))]
                s = try_place(box, _SIZES["couch"], flush_side=side, door_pts=door_pts)
                if s is not None:
                    builder.add(_rect(*s), sem.COUCH)
        elif rtype == "storage":
            for _ in range(int(rng.integers(2, 4))):
                side = flush_sides(face)[int(rng.integers(0, 3))]
                s = try_place(box, _SIZES["storage"], flush_side=side, door_pts=door_pts)
                if s is not None:
                    builder.add(_rect(*s), sem.STORAGE)
            for _ in range(int(rng.integers(0, 3))):
                c = try_place(box, _SIZES["clutter"], door_pts=door_pts)
                if c is not None:
                    builder.add(_rect(*c), sem.CLUTTER)
        elif rtype == "bathroom":
            side = flush_sides(face)[int(rng.integers(0, 3))]
            s = try_place(box, _SIZES["storage_bath"], flush_side=side, door_pts=door_pts)
            if s is not None:
                builder.add(_rect(*s), sem.STORAGE)
            if rng.random() < 0.5:
                c = try_place(box, _SIZES["clutter"], door_pts=door_pts)
                if c is not None:
                    builder.add(_rect(*c), sem.CLUTTER)
        else:  # hallway rooms and the corridor itself
            for _ in range(int(rng.integers(0, 3)) if face == "corridor" else int(rng.integers(0, 2))):
                c = try_place(box, _SIZES["clutter"], door_pts=door_pts)
                if c is not None:
                    builder.add(_rect(*c), sem.CLUTTER)


def _add_monitor(builder, rng, table_rect) -> None:
    tx0, ty0, tx1, ty1 = table_rect
    mw, md = _SIZES["monitor"]
    if tx1 - tx0 < ty1 - ty0:
        mw, md = md, mw
    fx = (tx1 - tx0) - mw - 0.04
    fy = (ty1 - ty0) - md - 0.04
    if fx < 0 or fy < 0:
        return
    mx0 = tx0 + 0.02 + rng.random() * fx
    my0 = ty0 + 0.02 + rng.random() * fy
    builder.add(_rect(mx0, my0, mx0 + mw, my0 + md), sem.MONITOR)


def _sample_spawns(rng, obstacles, bounds, corridor_box, params) -> list[Point]:
    soup = _blocking_soup(obstacles, bounds)
    from . import _kernels

    r2 = (params.agent_radius + 0.05) ** 2
    pts: list[Point] = []
    x0, y0, x1, y1 = corridor_box
    for _ in range(400):
        if len(pts) >= params.n_spawn_points:
            break
        p = (float(rng.uniform(x0, x1)), float(rng.uniform(y0, y1)))
        d2, _idx = _kernels.min_clearance_sq(soup.segs, p[0], p[1])
        if d2 < r2:
            continue
        if any(math.hypot(p[0] - q[0], p[1] - q[1]) < 1.0 for q in pts):
            continue
        pts.append(p)
    if not pts:
        raise GenerationError("could not sample any collision-free spawn point")
    return pts


# --- segment soups ---------------------------------------------------------


def _bounds_entries(bounds):
    x0, y0, x1, y1 = bounds
    ring = ((x0, y0), (x1, y0), (x1, y1), (x0, y1))
    return [(ring, 0.0, sem.CEILING_HEIGHT, sem.WALL, 0)]


def _blocking_soup(obstacles, bounds) -> SegmentSoup:
    entries = [
        (o.polygon, 0.0, o.height, o.class_id, o.instance_id)
        for o in obstacles
        if sem.class_base(o.class_id) == 0.0
    ]
    entries.extend(_bounds_entries(bounds))
    return soup_from_polygons(entries)


def collision_soup(world: WorldMap) -> SegmentSoup:
    """Segments the agent disc collides with: ground-standing obstacles plus
    the world boundary."""
    return _blocking_soup(world.obstacles, world.bounds)


def sensor_soup(world: WorldMap) -> SegmentSoup:
    """Segments visible to sensors: every obstacle at its extrusion band."""
    entries = [
        (o.polygon, o.base, o.height, o.class_id, o.instance_id) for o in world.obstacles
    ]
    return soup_from_polygons(entries)


# --- validation ------------------------------------------------------------


def validate_scene(world: WorldMap, agent_radius: float = 0.3) -> list[str]:
    """Returns violation descriptors; empty list iff all invariants hold."""
    out: list[str] = []
    x0, y0, x1, y1 = world.bounds
    if not (x1 > x0 and y1 > y0):
        out.append("bounds: empty or inverted rectangle")
        return out

    seen_inst: set[int] = set()
    for o in world.obstacles:
        tag = f"obstacle {o.instance_id}"
        if len(o.polygon) < 3:
            out.append(f"{tag}: fewer than 3 vertices")
            continue
        if not polygon_is_simple(o.polygon):
            out.append(f"{tag}: polygon self-intersects")
        if polygon_signed_area(o.polygon) <= 0:
            out.append(f"{tag}: vertices not counter-clockwise")
        if o.height <= 0:
            out.append(f"{tag}: height {o.height} not positive")
        if o.class_id not in sem.OBSTACLE_CLASSES:
            out.append(f"{tag}: class {o.class_id} not an obstacle class")
        if o.instance_id <= 0 or o.instance_id in seen_inst:
            out.append(f"{tag}: instance id not positive-unique")
        seen_inst.add(o.instance_id)

    try:
        from shapely.geometry import Polygon as ShPolygon
    except ImportError:  # pragma: no cover
        ShPolygon = None

    if ShPolygon is not None:
        room_polys = [ShPolygon(r.polygon) for r in world.rooms]
        for i in range(len(room_polys)):
            for j in range(i + 1, len(room_polys)):
                inter = room_polys[i].intersection(room_polys[j]).area
                if inter > 1e-9:
                    out.append(
                        f"rooms {i} ({world.rooms[i].type}) and {j} "
                        f"({world.rooms[j].type}) overlap by {inter:.3g} m^2"
                    )
        for o in world.obstacles:
            op = ShPolygon(o.polygon)
            if not any(rp.buffer(1e-6).contains(op) for rp in room_polys):
                out.append(f"obstacle {o.instance_id}: not inside any room")

    soup = collision_soup(world)
    from . import _kernels

    blocking = [o for o in world.obstacles if sem.class_base(o.class_id) == 0.0
                and len(o.polygon) >= 3]
    for k, p in enumerate(world.spawn_points):
        d2, _ = _kernels.min_clearance_sq(soup.segs, p[0], p[1])
        # interior points are far from every segment, so containment needs
        # its own check
        if d2 < agent_radius * agent_radius or any(
            point_in_polygon(p[0], p[1], o.polygon) for o in blocking
        ):
            out.append(f"spawn {k}: not collision-free at radius {agent_radius}")

    out.extend(_check_connectivity(world, soup, agent_radius))
    return out


def _check_connectivity(world: WorldMap, soup: SegmentSoup, agent_radius: float) -> list[str]:
    """Flood fill over a 0.1 m occupancy grid inflated by the agent radius."""
    cell = 0.1
    x0, y0, x1, y1 = world.bounds
    nx = max(1, int(round((x1 - x0) / cell)))
    ny = max(1, int(round((y1 - y0) / cell)))
    cx = x0 + (np.arange(nx) + 0.5) * cell
    cy = y0 + (np.arange(ny) + 0.5) * cell
    px, py = np.meshgrid(cx, cy, indexing="ij")
    pts = np.stack([px.ravel(), py.ravel()], axis=1)

    # vectorized point-to-segment distances, chunked over segments
    d2 = np.full(pts.shape[0], np.inf)
    segs = soup.segs
    for s0 in range(0, segs.shape[0], 128):
        chunk = segs[s0 : s0 + 128]
        ax, ay = chunk[:, 0], chunk[:, 1]
        dx, dy = chunk[:, 2] - ax, chunk[:, 3] - ay
        l2 = np.maximum(dx * dx + dy * dy, 1e-300)
        wx = pts[:, 0:1] - ax
        wy = pts[:, 1:2] - ay
        t = np.clip((wx * dx + wy * dy) / l2, 0.0, 1.0)
        ex = wx - t * dx
        ey = wy - t * dy
        d2 = np.minimum(d2, (ex * ex + ey * ey).min(axis=1))

    free = (d2 >= agent_radius * agent_radius).reshape(nx, ny)
    labels, _n = ndimage.label(free, structure=np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]]))

    out: list[str] = []
    spawn_labels: list[int] = []
    for k, p in enumerate(world.spawn_points):
        i = min(nx - 1, max(0, int((p[0] - x0) / cell)))
        j = min(ny - 1, max(0, int((p[1] - y0) / cell)))
        lab = int(labels[i, j])
        if lab == 0:
            out.append(f"spawn {k}: lies in occupied space on the connectivity grid")
        else:
            spawn_labels.append(lab)
    if not spawn_labels:
        return out
    if len(set(spawn_labels)) > 1:
        out.append("spawn points lie in disconnected free-space components")
    main = spawn_labels[0]

    for ridx, room in enumerate(world.rooms):
        bx0, by0, bx1, by1 = _rect_bbox(room.polygon)
        i0 = max(0, int((bx0 - x0) / cell))
        i1 = min(nx, int(math.ceil((bx1 - x0) / cell)))
        j0 = max(0, int((by0 - y0) / cell))
        j1 = min(ny, int(math.ceil((by1 - y0) / cell)))
        sub = labels[i0:i1, j0:j1]
        reached = False
        ii, jj = np.nonzero(sub == main)
        for a, b in zip(ii, jj):
            px_ = x0 + (i0 + a + 0.5) * cell
            py_ = y0 + (j0 + b + 0.5) * cell
            if point_in_polygon(px_, py_, room.polygon):
                reached = True
                break
        if not reached:
            out.append(f"connectivity: room {ridx} ({room.type}) unreachable from spawn points")
    return out


# --- serialization ---------------------------------------------------------

_OBSTACLE_CLASS_IDS = sorted(sem.OBSTACLE_CLASSES)

SCENE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["bounds", "rooms", "obstacles", "spawn_points", "scene_seed"],
    "additionalProperties": False,
    "properties": {
        "scene_seed": {"type": "integer"},
        "bounds": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 4,
            "maxItems": 4,
        },
        "rooms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["polygon", "type"],
                "additionalProperties": False,
                "properties": {
                    "polygon": {"$ref": "#/$defs/polygon"},
                    "type": {"enum": list(sem.ROOM_TYPES)},
                },
            },
        },
        "obstacles": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["polygon", "class", "instance_id", "height"],
                "additionalProperties": False,
                "properties": {
                    "polygon": {"$ref": "#/$defs/polygon"},
                    "class": {"enum": _OBSTACLE_CLASS_IDS},
                    "instance_id": {"type": "integer", "minimum": 1},
                    "height": {"type": "number", "exclusiveMinimum": 0},
                },
            },
        },
        "spawn_points": {"type": "array", "items": {"$ref": "#/$defs/point"}},
    },
    "$defs": {
        "point": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
        "polygon": {"type": "array", "items": {"$ref": "#/$defs/point"}, "minItems": 3},
    },
}


def scene_to_json(world: WorldMap) -> str:
    payload = {
        "scene_seed": world.scene_seed,
        "bounds": list(world.bounds),
        "rooms": [{"polygon": [list(p) for p in r.polygon], "type": r.type} for r in world.rooms],
        "obstacles": [
            {
                "polygon": [list(p) for p in o.polygon],
                "class": o.class_id,
                "instance_id": o.instance_id,
                "height": o.height,
            }
            for o in world.obstacles
        ],
        "spawn_points": [list(p) for p in world.spawn_points],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def scene_from_json(text: str) -> WorldMap:
    import jsonschema

    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneFormatError(f"not valid JSON: {exc}") from exc
    validator = jsonschema.Draft202012Validator(SCENE_SCHEMA)
    errors = sorted(validator.iter_errors(payload), key=lambda e: list(e.absolute_path))
    if errors:
        err = jsonschema.exceptions.best_match(errors)
        raise SceneFormatError(f"schema violation at {err.json_path}: {err.message}")
    return WorldMap(
        bounds=tuple(float(v) for v in payload["bounds"]),
        rooms=tuple(
            Room(tuple((float(x), float(y)) for x, y in r["polygon"]), r["type"])
            for r in payload["rooms"]
        ),
        obstacles=tuple(
            Obstacle(
                polygon=tuple((float(x), float(y)) for x, y in o["polygon"]),
                class_id=int(o["class"]),
                instance_id=int(o["instance_id"]),
                height=float(o["height"]),
            )
            for o in payload["obstacles"]
        ),
        spawn_points=tuple((float(x), float(y)) for x, y in payload["spawn_points"]),
        scene_seed=int(payload["scene_seed"]),
    )


# --- mesh export ------------------------------------------------------------

_PLY_VERTEX = struct.Struct("<fff3BBH")


def export_mesh(world: WorldMap, format: str = "ply") -> bytes:
    fmt = format.lower()
    if fmt == "ply":
        return _export_ply(world)
    if fmt == "obj":
        return _export_obj(world)
    raise ValueError(f"unsupported mesh format: {format!r}")


def _mesh_elements(world: WorldMap):
    """Yields (vertices, faces, class_id, instance_id, group) per element.

    vertices: list of (x, y, z); faces: list of index tuples local to the
    element, outward-facing, counter-clockwise seen from outside.
    """
    x0, y0, x1, y1 = world.bounds
    floor_ring = [(x0, y0), (x1, y0), (x1, y1), (x0, y1)]
    yield (
        [(x, y, 0.0) for x, y in floor_ring],
        [(0, 1, 2, 3)],
        sem.FLOOR,
        0,
        "floor",
    )
    yield (
        [(x, y, sem.CEILING_HEIGHT) for x, y in floor_ring],
        [(3, 2, 1, 0)],
        sem.CEILING,
        0,
        "ceiling",
    )
    for o in world.obstacles:
        n = len(o.polygon)
        base, top = o.base, o.height
        verts = [(x, y, base) for x, y in o.polygon] + [(x, y, top) for x, y in o.polygon]
        faces = [(i, (i + 1) % n, (i + 1) % n + n, i + n) for i in range(n)]
        faces.append(tuple(range(n, 2 * n)))  # top ring, CCW from above
        if base > 0.0:
            faces.append(tuple(range(n - 1, -1, -1)))  # bottom ring, facing down
        yield verts, faces, o.class_id, o.instance_id, f"instance_{o.instance_id}"


def _export_ply(world: WorldMap) -> bytes:
    vert_chunks: list[bytes] = []
    face_rows: list[tuple[int, ...]] = []
    n_verts = 0
    for verts, faces, class_id, instance_id, _g in _mesh_elements(world):
        r, g, b = (int(v) for v in sem.PALETTE[class_id])
        for x, y, z in verts:
            vert_chunks.append(_PLY_VERTEX.pack(x, y, z, r, g, b, class_id, instance_id))
        for f in faces:
            face_rows.append(tuple(i + n_verts for i in f))
        n_verts += len(verts)

    header = (
        "ply\n"
        "format binary_little_endian 1.0\n"
        f"element vertex {n_verts}\n"
        "property float x\n"
        "property float y\n"
        "property float z\n"
        "property uchar red\n"
        "property uchar green\n"
        "property uchar blue\n"
        "property uchar class\n"
        "property ushort instance\n"
        f"element face {len(face_rows)}\n"
        "property list uchar int vertex_indices\n"
        "end_header\n"
    )
    out = [header.encode("ascii")]
    out.extend(vert_chunks)
    for f in face_rows:
        out.append(struct.pack(f"<B{len(f)}i", len(f), *f))
    return b"".join(out)


def _export_obj(world: WorldMap) -> bytes:
    lines = ["# semantic scene mesh", "# groups per instance, materials per class"]
    n_verts = 0
    for verts, faces, class_id, _instance_id, group in _mesh_elements(world):
        lines.append(f"g {group}")
        lines.append(f"usemtl {sem.CLASS_NAMES[class_id]}")
        for x, y, z in verts:
            lines.append(f"v {x!r} {y!r} {z!r}")
        for f in faces:
            lines.append("f " + " ".join(str(i + n_verts + 1) for i in f))
        n_verts += len(verts)
    return ("\n".join(lines) + "\n").encode("ascii")


@lru_cache(maxsize=16)
def canonical_scene(scene_id: int) -> WorldMap:
    """The shipped scenes 1-5 (ids 4-5 are the evaluation pair)."""
    return generate_scene(scene_id, GenParams())
