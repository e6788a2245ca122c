"""Semantic class table, palette, room types, and per-class extrusion bands.

Class ids are stable across scenes and runs; the palette maps id -> RGB.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SemanticClass:
    id: int
    name: str


CLASS_NAMES = (
    "floor",
    "ceiling",
    "wall",
    "monitor",
    "door",
    "table",
    "chair",
    "storage",
    "couch",
    "clutter",
    "target",
)

FLOOR, CEILING, WALL, MONITOR, DOOR, TABLE, CHAIR, STORAGE, COUCH, CLUTTER, TARGET = range(11)

N_CLASSES = 11

CLASSES = tuple(SemanticClass(i, n) for i, n in enumerate(CLASS_NAMES))
CLASS_BY_NAME = {c.name: c for c in CLASSES}

# Fixed id -> RGB palette (flat-shaded rendering and mesh vertex colors).
PALETTE = np.array(
    [
        (120, 120, 120),  # floor
        (210, 210, 210),  # ceiling
        (170, 120, 80),   # wall
        (40, 40, 200),    # monitor
        (140, 70, 20),    # door
        (110, 70, 30),    # table
        (200, 60, 60),    # chair
        (130, 90, 160),   # storage
        (60, 160, 200),   # couch
        (230, 180, 40),   # clutter
        (40, 200, 80),    # target
    ],
    dtype=np.uint8,
)

ROOM_TYPES = ("office", "hallway", "conference", "storage", "bathroom")

# Extrusion band per obstacle class: top height and base elevation (meters).
# Doors are lintel bands above a passable 1 m opening; monitors sit atop tables.
CLASS_HEIGHTS = {
    WALL: 2.5,
    DOOR: 2.5,
    MONITOR: 1.2,
    TABLE: 0.75,
    CHAIR: 0.9,
    STORAGE: 2.0,
    COUCH: 0.9,
    CLUTTER: 0.5,
}

CLASS_BASES = {
    MONITOR: 0.75,
    DOOR: 2.1,
}

CEILING_HEIGHT = 2.5

# Episode-level target markers (not scene obstacles): small non-blocking posts.
TARGET_HEIGHT = 0.3
TARGET_HALF_SIZE = 0.1

OBSTACLE_CLASSES = frozenset(CLASS_HEIGHTS)


def class_base(class_id: int) -> float:
    return CLASS_BASES.get(class_id, 0.0)


def class_height(class_id: int) -> float:
    return CLASS_HEIGHTS[class_id]
