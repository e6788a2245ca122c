"""Object-search episode machinery.

Target placement inside offices, the collect rule (range + field of view +
line of sight), per-step episode bookkeeping with per-action collision
counting, the episode score, and the explored-area metric.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import hash64, point_in_polygon, wrap_angle
from .kinematics import (
    MOVE_FORWARD, TURN_LEFT, TURN_RIGHT,
    AgentState, execute_discrete_action,
)
from .semantics import TARGET, TARGET_HALF_SIZE, TARGET_HEIGHT
from .sensors import CameraIntrinsics, raycast
from .worldgen import WorldMap, sensor_soup
from .geometry import SegmentSoup, soup_concat, soup_from_polygons

COLLECT = 3
ACTION_NAMES = ("MOVE_FORWARD", "TURN_LEFT", "TURN_RIGHT", "COLLECT")
MOVEMENT_ACTIONS = (MOVE_FORWARD, TURN_LEFT, TURN_RIGHT)

_TARGET_CLEARANCE = 0.1
_TARGET_SPACING = 0.5
_PLACEMENT_SAMPLES = 10_000


class PlacementError(Exception):
    pass


class EpisodeFinishedError(Exception):
    pass


@dataclass(frozen=True)
class ScoreWeights:
    w_p: float = 0.1
    w_c: float = 0.1
    w_a: float = 0.1

    def __post_init__(self):
        if self.w_p < 0 or self.w_c < 0 or self.w_a < 0:
            raise ValueError("weights must be non-negative")


@dataclass(frozen=True)
class TaskConfig:
    n_targets: int = 30
    episode_limit: int = 400
    collect_range: float = 2.0
    require_los: bool = True
    weights: ScoreWeights = ScoreWeights()
    cell_size: float = 0.5
    visit_radius: float = 1.0

    def __post_init__(self):
        if self.n_targets < 1:
            raise ValueError("n_targets must be >= 1")
        if self.episode_limit < 1:
            raise ValueError("episode_limit must be >= 1")
        if self.collect_range <= 0:
            raise ValueError("collect_range must be positive")


@dataclass
class Target:
    position: tuple[float, float]
    found: bool = False


@dataclass(frozen=True)
class EpisodeResult:
    recall: float
    precision: float
    collisions: int
    actions: int
    limit: int
    score: float
    explored_m2: float


@dataclass
class EpisodeState:
    world: WorldMap
    config: TaskConfig
    targets: list
    agent: AgentState
    episode_seed: int
    steps_taken: int = 0
    collisions: int = 0
    collect_attempts: int = 0
    collect_successes: int = 0
    trajectory: list = field(default_factory=list)
    done: bool = False
    actuation_rng: object = None
    event_log: list = field(default_factory=list)
    last_trace: list = field(default_factory=list)
    _soup_cache: tuple = field(default=None, repr=False)

    @property
    def found_count(self) -> int:
        return sum(1 for t in self.targets if t.found)


def compute_score(r: float, p: float, c: float, a: float, l: float,
                  weights: ScoreWeights = ScoreWeights()) -> float:
    """s = r + w_p*p - w_c*(c/l) - w_a*(a/l); exact arithmetic, no clamping."""
    if l <= 0:
        raise ValueError("episode limit l must be positive")
    return r + weights.w_p * p - weights.w_c * (c / l) - weights.w_a * (a / l)


def place_targets(world: WorldMap, n: int, rng) -> list[tuple[float, float]]:
    """Rejection-sample n points strictly inside office rooms, >= 0.1 m clear
    of every obstacle, pairwise >= 0.5 m apart."""
    offices = [r for r in world.rooms if r.type == "office"]
    if not offices:
        raise PlacementError("world has no office rooms")
    soup = sensor_soup(world)
    boxes = []
    areas = []
    for room in offices:
        xs = [p[0] for p in room.polygon]
        ys = [p[1] for p in room.polygon]
        boxes.append((min(xs), min(ys), max(xs), max(ys)))
        areas.append((max(xs) - min(xs)) * (max(ys) - min(ys)))
    cum = np.cumsum(areas)
    total = float(cum[-1])

    ob_boxes = []
    for ob in world.obstacles:
        xs = [p[0] for p in ob.polygon]
        ys = [p[1] for p in ob.polygon]
        ob_boxes.append((min(xs), min(ys), max(xs), max(ys)))

    points: list[tuple[float, float]] = []
    clear2 = _TARGET_CLEARANCE * _TARGET_CLEARANCE
    space2 = _TARGET_SPACING * _TARGET_SPACING
    for _ in range(_PLACEMENT_SAMPLES):
        if len(points) == n:
            break
        k = int(np.searchsorted(cum, rng.random() * total, side="right"))
        k = min(k, len(offices) - 1)
        x0, y0, x1, y1 = boxes[k]
        x = float(rng.uniform(x0, x1))
        y = float(rng.uniform(y0, y1))
        if not point_in_polygon(x, y, offices[k].polygon):
            continue
        if len(soup) > 0:
            d2, _ = _kernels.min_clearance_sq(soup.segs, x, y)
            if d2 < clear2:
                continue
        inside = False
        for ob, (bx0, by0, bx1, by1) in zip(world.obstacles, ob_boxes):
            if bx0 <= x <= bx1 and by0 <= y <= by1 and point_in_polygon(x, y, ob.polygon):
                inside = True
                break
        if inside:
            continue
        if any((x - px) ** 2 + (y - py) ** 2 < space2 for px, py in points):
            continue
        points.append((x, y))
    if len(points) < n:
        raise PlacementError(
            f"placed {len(points)} of {n} targets within {_PLACEMENT_SAMPLES} samples; "
            "insufficient office free area"
        )
    return points


def target_soup(world: WorldMap, targets) -> SegmentSoup:
    """Square markers for not-yet-found targets, instanced after the scene's
    obstacles."""
    base = max((o.instance_id for o in world.obstacles), default=0) + 1
    h = TARGET_HALF_SIZE
    entries = []
    for i, t in enumerate(targets):
        if t.found:
            continue
        x, y = t.position
        poly = ((x - h, y - h), (x + h, y - h), (x + h, y + h), (x - h, y + h))
        entries.append((poly, 0.0, TARGET_HEIGHT, TARGET, base + i))
    return soup_from_polygons(entries)


def episode_sensor_soup(state: EpisodeState) -> SegmentSoup:
    """World geometry plus markers for the remaining targets (cached per
    found-mask)."""
    mask = tuple(t.found for t in state.targets)
    if state._soup_cache is not None and state._soup_cache[0] == mask:
        return state._soup_cache[1]
    soup = soup_concat(sensor_soup(state.world), target_soup(state.world, state.targets))
    state._soup_cache = (mask, soup)
    return soup


def start_episode(world: WorldMap, config: TaskConfig, episode_seed: int,
                  actuation_noise: bool = False) -> EpisodeState:
    """Place targets, pick a spawn pose, and initialize counters; all draws
    come from streams derived from episode_seed."""
    rng_place = np.random.default_rng(hash64(episode_seed, "targets"))
    targets = [Target(p) for p in place_targets(world, config.n_targets, rng_place)]
    rng_spawn = np.random.default_rng(hash64(episode_seed, "spawn"))
    idx = int(rng_spawn.integers(0, len(world.spawn_points)))
    yaw = float(rng_spawn.uniform(-math.pi, math.pi))
    agent = AgentState(position=tuple(world.spawn_points[idx]), yaw=yaw)
    actuation_rng = (
        np.random.default_rng(hash64(episode_seed, "actuation")) if actuation_noise else None
    )
    state = EpisodeState(
        world=world, config=config, targets=targets, agent=agent,
        episode_seed=episode_seed, actuation_rng=actuation_rng,
    )
    state.trajectory.append(agent.position)
    state.last_trace = [agent]
    return state


def attempt_collect(agent: AgentState, state: EpisodeState, config: TaskConfig,
                    camera: CameraIntrinsics) -> list[int]:
    """Collect every not-yet-found target within range, inside the horizontal
    FOV, and (if required) with clear line of sight at camera height.  The
    attempt counter always advances; the success counter advances iff at
    least one target was collected."""
    half_fov = math.radians(camera.hfov) / 2.0
    ax, ay = agent.position
    collected: list[int] = []
    world_soup = sensor_soup(state.world)
    for i, t in enumerate(state.targets):
        if t.found:
            continue
        dx, dy = t.position[0] - ax, t.position[1] - ay
        dist = math.hypot(dx, dy)
        if dist > config.collect_range:
            continue
        if abs(wrap_angle(math.atan2(dy, dx) - agent.yaw)) > half_fov:
            continue
        if config.require_los and dist > 0.0:
            hit = raycast(world_soup, (ax, ay), (dx / dist, dy / dist),
                          max_range=dist, slice_height=camera.camera_height)
            if hit is not None and hit.distance < dist - 1e-9:
                continue
        collected.append(i)
    state.collect_attempts += 1
    if collected:
        state.collect_successes += 1
        for i in collected:
            state.targets[i].found = True
    return collected


def step_episode(state: EpisodeState, action: int,
                 camera: CameraIntrinsics = CameraIntrinsics()):
    """Advance one discrete step.  Movement actions run the PD controller; a
    collision anywhere in the action counts exactly once.  Returns
    (state, done)."""
    if state.done:
        raise EpisodeFinishedError("episode already finished")
    collected: list[int] = []
    collided = False
    if action in MOVEMENT_ACTIONS:
        final, trace, collided = execute_discrete_action(
            state.agent, action, state.world, noise_rng=state.actuation_rng,
        )
        state.agent = final
        state.last_trace = trace
        if collided:
            state.collisions += 1
    elif action == COLLECT:
        collected = attempt_collect(state.agent, state, state.config, camera)
        state.last_trace = [state.agent]
    else:
        raise ValueError(f"unknown action: {action}")
    state.steps_taken += 1
    state.trajectory.append(state.agent.position)
    reward = float(len(collected)) - 0.1
    state.event_log.append({
        "step": state.steps_taken,
        "action": int(action),
        "pose": [state.agent.position[0], state.agent.position[1], state.agent.yaw],
        "collided": bool(collided),
        "collected_ids": list(collected),
        "reward": reward,
    })
    if state.found_count == len(state.targets) or state.steps_taken >= state.config.episode_limit:
        state.done = True
    return state, state.done


def episode_result(state: EpisodeState) -> EpisodeResult:
    cfg = state.config
    r = state.found_count / cfg.n_targets
    p = state.collect_successes / max(state.collect_attempts, 1)
    s = compute_score(r, p, state.collisions, state.steps_taken, cfg.episode_limit, cfg.weights)
    return EpisodeResult(
        recall=r, precision=p, collisions=state.collisions, actions=state.steps_taken,
        limit=cfg.episode_limit, score=s,
        explored_m2=explored_area(state.trajectory, cfg.cell_size, cfg.visit_radius),
    )


def explored_area(trajectory, cell_size: float = 0.5, visit_radius: float = 1.0) -> float:
    """cell_size^2 times the number of grid cells whose center lies within
    visit_radius of any trajectory point."""
    if not len(trajectory):
        raise ValueError("trajectory must be non-empty")
    visited: set[tuple[int, int]] = set()
    r2 = visit_radius * visit_radius
    reach = int(math.ceil(visit_radius / cell_size)) + 1
    for x, y in trajectory:
        ci = int(math.floor(x / cell_size))
        cj = int(math.floor(y / cell_size))
        for i in range(ci - reach, ci + reach + 1):
            for j in range(cj - reach, cj + reach + 1):
                if (i, j) in visited:
                    continue
                cx = (i + 0.5) * cell_size
                cy = (j + 0.5) * cell_size
                if (cx - x) ** 2 + (cy - y) ** 2 <= r2:
                    visited.add((i, j))
    return cell_size * cell_size * len(visited)


def event_log_jsonl(state: EpisodeState) -> str:
    """Episode event log as JSON-lines, one record per step."""
    return "\n".join(json.dumps(e, separators=(",", ":")) for e in state.event_log)


def score_event_log(events, n_targets: int, episode_limit: int,
                    weights: ScoreWeights = ScoreWeights(),
                    cell_size: float = 0.5, visit_radius: float = 1.0) -> EpisodeResult:
    """Recompute an EpisodeResult from a parsed event log (list of per-step
    records), e.g. one saved by the teleop client."""
    events = list(events)
    if not events:
        raise ValueError("event log is empty")
    found: set[int] = set()
    attempts = 0
    successes = 0
    collisions = 0
    poses = []
    for e in events:
        if e["action"] == COLLECT:
            attempts += 1
            if e["collected_ids"]:
                successes += 1
        found.update(e["collected_ids"])
        collisions += 1 if e["collided"] else 0
        poses.append((e["pose"][0], e["pose"][1]))
    a = len(events)
    r = len(found) / n_targets
    p = successes / max(attempts, 1)
    s = compute_score(r, p, collisions, a, episode_limit, weights)
    return EpisodeResult(
        recall=r, precision=p, collisions=collisions, actions=a,
        limit=episode_limit, score=s,
        explored_m2=explored_area(poses, cell_size, visit_radius),
    )
