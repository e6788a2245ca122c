"""Fixed-timestep physics backend.

Semi-implicit Euler on a unicycle model (forward force + yaw torque), stop-
and-slide collision resolution against extruded wall segments, PD-controlled
discrete actions, and odometry sampling.  Simulation time is tick_count * dt
exactly; nothing here reads a wall clock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

from . import _kernels
from .geometry import SegmentSoup, wrap_angle
from .worldgen import WorldMap, collision_soup

MOVE_FORWARD = 0
TURN_LEFT = 1
TURN_RIGHT = 2

MOVE_DISTANCE = 0.5
TURN_ANGLE = math.radians(8.0)

CONTACT_SLACK = 0.001  # standoff from contact along the surface normal (m)


@dataclass(frozen=True)
class PhysicsParams:
    dt: float = 0.005
    mass: float = 1.0
    linear_damping: float = 0.5
    angular_damping: float = 0.5
    agent_radius: float = 0.3
    max_force: float = 40.0
    max_torque: float = 40.0


@dataclass(frozen=True)
class ControlCommand:
    forward_force: float = 0.0
    torque: float = 0.0


@dataclass(frozen=True)
class PDGains:
    kp_lin: float = 8.0
    kd_lin: float = 4.0
    kp_ang: float = 6.0
    kd_ang: float = 2.0
    position_tolerance: float = 0.01
    angle_tolerance: float = 0.0087
    timeout: float = 2.0


@dataclass(frozen=True)
class AgentState:
    position: tuple[float, float]
    yaw: float
    linear_speed: float = 0.0
    angular_rate: float = 0.0
    in_contact: bool = False


@dataclass(frozen=True)
class Odometry:
    tick: int
    position: tuple[float, float]
    yaw: float
    velocity: tuple[float, float]
    acceleration: tuple[float, float]
    angular_rate: float
    collision: bool


@lru_cache(maxsize=32)
def _cached_collision_soup(world: WorldMap) -> SegmentSoup:
    return collision_soup(world)


def _as_soup(world) -> SegmentSoup:
    if isinstance(world, SegmentSoup):
        return world
    return _cached_collision_soup(world)


def clamp_command(cmd: ControlCommand, params: PhysicsParams) -> ControlCommand:
    f = min(max(cmd.forward_force, -params.max_force), params.max_force)
    t = min(max(cmd.torque, -params.max_torque), params.max_torque)
    return ControlCommand(f, t)


def integrate_tick(state: AgentState, cmd: ControlCommand, params: PhysicsParams) -> AgentState:
    """One semi-implicit Euler step; no collision handling."""
    values = (
        state.position[0], state.position[1], state.yaw, state.linear_speed,
        state.angular_rate, cmd.forward_force, cmd.torque,
    )
    if not all(math.isfinite(v) for v in values):
        raise ValueError("non-finite state or command")
    dt = params.dt
    speed = state.linear_speed + dt * (cmd.forward_force / params.mass - params.linear_damping * state.linear_speed)
    omega = state.angular_rate + dt * (cmd.torque / params.mass - params.angular_damping * state.angular_rate)
    yaw = wrap_angle(state.yaw + omega * dt)
    vx = speed * math.cos(yaw)
    vy = speed * math.sin(yaw)
    return AgentState(
        position=(state.position[0] + vx * dt, state.position[1] + vy * dt),
        yaw=yaw,
        linear_speed=speed,
        angular_rate=omega,
        in_contact=False,
    )


def _segment_normal(seg, cx: float, cy: float) -> tuple[float, float]:
    """Unit vector from the nearest point of ``seg`` toward (cx, cy)."""
    ax, ay, bx, by = seg
    dx, dy = bx - ax, by - ay
    l2 = dx * dx + dy * dy
    if l2 > 0.0:
        t = ((cx - ax) * dx + (cy - ay) * dy) / l2
        t = min(max(t, 0.0), 1.0)
    else:
        t = 0.0
    nx_, ny_ = cx - (ax + t * dx), cy - (ay + t * dy)
    norm = math.hypot(nx_, ny_)
    if norm == 0.0:
        return 0.0, 0.0
    return nx_ / norm, ny_ / norm


def resolve_collision(prev: AgentState, proposed: AgentState, world, params: PhysicsParams):
    """Stop-and-slide: project a colliding motion back to contact minus slack,
    keep the tangential remainder, zero the normal speed component.

    Returns (state, collided).
    """
    soup = _as_soup(world)
    r2 = params.agent_radius * params.agent_radius
    px, py = proposed.position
    d2, _ = _kernels.min_clearance_sq(soup.segs, px, py)
    if d2 >= r2:
        return proposed, False

    ax, ay = prev.position
    mx, my = px - ax, py - ay
    lo, hi = 0.0, 1.0
    for _ in range(40):
        mid = 0.5 * (lo + hi)
        d2m, _ = _kernels.min_clearance_sq(soup.segs, ax + mid * mx, ay + mid * my)
        if d2m >= r2:
            lo = mid
        else:
            hi = mid
    cx, cy = ax + lo * mx, ay + lo * my
    _d2c, seg_i = _kernels.min_clearance_sq(soup.segs, cx, cy)
    nx_, ny_ = _segment_normal(soup.segs[seg_i], cx, cy)

    bx, by = cx + CONTACT_SLACK * nx_, cy + CONTACT_SLACK * ny_
    d2b, _ = _kernels.min_clearance_sq(soup.segs, bx, by)
    if d2b < r2:
        bx, by = ax, ay

    remx, remy = px - cx, py - cy
    dot = remx * nx_ + remy * ny_
    tx, ty = remx - dot * nx_, remy - dot * ny_
    if tx != 0.0 or ty != 0.0:
        fx, fy = bx + tx, by + ty
        d2f, _ = _kernels.min_clearance_sq(soup.segs, fx, fy)
        if d2f >= r2:
            bx, by = fx, fy

    hx, hy = math.cos(proposed.yaw), math.sin(proposed.yaw)
    vx, vy = proposed.linear_speed * hx, proposed.linear_speed * hy
    vn = vx * nx_ + vy * ny_
    new_speed = (vx - vn * nx_) * hx + (vy - vn * ny_) * hy
    state = AgentState(
        position=(bx, by),
        yaw=proposed.yaw,
        linear_speed=new_speed,
        angular_rate=proposed.angular_rate,
        in_contact=True,
    )
    return state, True


def execute_discrete_action(
    state: AgentState,
    action: int,
    world,
    gains: PDGains | None = None,
    params: PhysicsParams | None = None,
    noise_rng=None,
    noise_sigma: float = 0.05,
):
    """Run one discrete action through the PD loop.

    Returns (final state, tick trace including the start state, collided).
    With ``noise_rng`` set, each tick's force/torque is perturbed by zero-mean
    Gaussian noise with sigma = noise_sigma * |command|.
    """
    gains = gains or PDGains()
    params = params or PhysicsParams()
    soup = _as_soup(world)

    if action == MOVE_FORWARD:
        h0x, h0y = math.cos(state.yaw), math.sin(state.yaw)
        wx = state.position[0] + MOVE_DISTANCE * h0x
        wy = state.position[1] + MOVE_DISTANCE * h0y
        yaw_target = state.yaw
    elif action == TURN_LEFT:
        yaw_target = wrap_angle(state.yaw + TURN_ANGLE)
    elif action == TURN_RIGHT:
        yaw_target = wrap_angle(state.yaw - TURN_ANGLE)
    else:
        raise ValueError(f"not a movement action: {action}")

    n_ticks = int(round(gains.timeout / params.dt))
    trace = [replace(state, in_contact=False)]
    cur = trace[0]
    collided = False
    for _ in range(n_ticks):
        aerr = wrap_angle(yaw_target - cur.yaw)
        if action == MOVE_FORWARD:
            err = (wx - cur.position[0]) * h0x + (wy - cur.position[1]) * h0y
            if abs(err) <= gains.position_tolerance:
                break
            force = gains.kp_lin * err - gains.kd_lin * cur.linear_speed
        else:
            if abs(aerr) <= gains.angle_tolerance:
                break
            force = -gains.kd_lin * cur.linear_speed
        torque = gains.kp_ang * aerr - gains.kd_ang * cur.angular_rate
        if noise_rng is not None:
            force = force + float(noise_rng.normal(0.0, noise_sigma * abs(force)))
            torque = torque + float(noise_rng.normal(0.0, noise_sigma * abs(torque)))
        cmd = clamp_command(ControlCommand(force, torque), params)
        nxt = integrate_tick(cur, cmd, params)
        nxt, hit = resolve_collision(cur, nxt, soup, params)
        collided = collided or hit
        trace.append(nxt)
        cur = nxt
    return cur, trace, collided


def run_ticks(state: AgentState, cmd: ControlCommand, n_ticks: int, world, params: PhysicsParams):
    """Advance n physics ticks under a constant (clamped) command.

    Returns (final state, trace including the start state, collided).
    """
    params = params or PhysicsParams()
    soup = _as_soup(world)
    cmd = clamp_command(cmd, params)
    trace = [replace(state, in_contact=False)]
    cur = trace[0]
    collided = False
    for _ in range(n_ticks):
        nxt = integrate_tick(cur, cmd, params)
        nxt, hit = resolve_collision(cur, nxt, soup, params)
        collided = collided or hit
        trace.append(nxt)
        cur = nxt
    return cur, trace, collided


def sample_odometry(trace, params: PhysicsParams) -> list[Odometry]:
    """One Odometry per tick transition; acceleration is the exact finite
    difference of consecutive velocities."""
    if len(trace) < 2:
        raise ValueError("trace must contain at least 2 consecutive tick states")
    out: list[Odometry] = []
    prev = trace[0]
    pvx = prev.linear_speed * math.cos(prev.yaw)
    pvy = prev.linear_speed * math.sin(prev.yaw)
    for i, st in enumerate(trace[1:], start=1):
        vx = st.linear_speed * math.cos(st.yaw)
        vy = st.linear_speed * math.sin(st.yaw)
        out.append(
            Odometry(
                tick=i,
                position=st.position,
                yaw=st.yaw,
                velocity=(vx, vy),
                acceleration=((vx - pvx) / params.dt, (vy - pvy) / params.dt),
                angular_rate=st.angular_rate,
                collision=st.in_contact,
            )
        )
        pvx, pvy = vx, vy
    return out
