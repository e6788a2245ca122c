"""Shared fixtures and hand-built world helpers."""

from __future__ import annotations

import numpy as np
import pytest

from seekbench import semantics as sem
from seekbench.geometry import SegmentSoup
from seekbench.worldgen import Obstacle, Room, WorldMap, canonical_scene


def rect(x0: float, y0: float, x1: float, y1: float):
    return ((x0, y0), (x1, y0), (x1, y1), (x0, y1))


def make_world(bounds=(0.0, 0.0, 10.0, 10.0), rooms=(), obstacles=(),
               spawns=((5.0, 5.0),), seed=0) -> WorldMap:
    return WorldMap(
        bounds=tuple(bounds),
        rooms=tuple(rooms),
        obstacles=tuple(obstacles),
        spawn_points=tuple(spawns),
        scene_seed=seed,
    )


def segment_soup(rows) -> SegmentSoup:
    """rows: iterable of (ax, ay, bx, by, band_lo, band_hi, class_id, inst)."""
    rows = list(rows)
    if not rows:
        return SegmentSoup.empty()
    arr = np.asarray([r[:4] for r in rows], dtype=np.float64)
    return SegmentSoup(
        segs=np.ascontiguousarray(arr),
        band_lo=np.asarray([r[4] for r in rows], dtype=np.float64),
        band_hi=np.asarray([r[5] for r in rows], dtype=np.float64),
        class_ids=np.asarray([r[6] for r in rows], dtype=np.uint8),
        instance_ids=np.asarray([r[7] for r in rows], dtype=np.uint16),
    )


def wall_soup(x: float = 2.0, half: float = 200.0, height: float = 2.5) -> SegmentSoup:
    """A single long wall crossing the +x axis, fronto-parallel for yaw=0."""
    return segment_soup([(x, -half, x, half, 0.0, height, sem.WALL, 1)])


def square_room_soup(half: float = 5.0, height: float = 2.5) -> SegmentSoup:
    """Axis-aligned square of walls centered on the origin."""
    h = half
    return segment_soup([
        (h, -h, h, h, 0.0, height, sem.WALL, 1),
        (-h, h, h, h, 0.0, height, sem.WALL, 2),
        (-h, -h, -h, h, 0.0, height, sem.WALL, 3),
        (-h, -h, h, -h, 0.0, height, sem.WALL, 4),
    ])


@pytest.fixture(scope="session")
def scene4() -> WorldMap:
    return canonical_scene(4)


@pytest.fixture(scope="session")
def scene5() -> WorldMap:
    return canonical_scene(5)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One pass/fail line per acceptance criterion at the end of the run."""
    try:
        from test_acceptance import CRITERIA
    except ImportError:
        return
    outcomes: dict[str, str] = {}
    for status, label in (("passed", "PASS"), ("failed", "FAIL"),
                          ("error", "FAIL"), ("skipped", "SKIP")):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            if getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            name = nodeid.split("::")[-1]
            if name in CRITERIA and (name not in outcomes or label == "FAIL"):
                outcomes[name] = label
    if not outcomes:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for name in sorted(CRITERIA):
        label = outcomes.get(name)
        if label is None:
            continue
        terminalreporter.write_line(f"[{label}] {CRITERIA[name]}")


def office_world(seed: int = 0) -> WorldMap:
    """Tiny hand-built world: one office room filling most of the bounds,
    one interior wall slab, generous spawns."""
    wall = Obstacle(polygon=rect(4.0, 2.0, 4.2, 8.0), class_id=sem.WALL,
                    instance_id=1, height=2.5)
    return make_world(
        bounds=(0.0, 0.0, 10.0, 10.0),
        rooms=(Room(polygon=rect(0.0, 0.0, 10.0, 10.0), type="office"),),
        obstacles=(wall,),
        spawns=((1.0, 1.0), (8.0, 8.0)),
        seed=seed,
    )
