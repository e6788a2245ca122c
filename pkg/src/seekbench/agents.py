"""Baseline policies and the transport-agnostic episode loop.

run_episode drives either the in-process simulator or the network client —
both expose the same reset/get_obs/act/info surface — so a seeded policy
produces identical event logs over either path.
"""

from __future__ import annotations

import math
from collections import deque

import numpy as np

from .client import TransportError
from .geometry import hash64, wrap_angle
from .kinematics import MOVE_FORWARD, TURN_LEFT, TURN_RIGHT
from .semantics import CEILING, DOOR, FLOOR, TARGET
from .sensors import CameraIntrinsics
from .task import COLLECT, EpisodeResult

_GRID = 0.25
_FREE, _OCCUPIED = 1, 2
_NEIGHBORS = ((1, 0), (-1, 0), (0, 1), (0, -1))


class EpisodeAborted(Exception):
    """Transport failure mid-episode; the episode is excluded from stats."""


def random_policy_act(rng) -> int:
    """Uniform over the 4 discrete actions."""
    return int(rng.integers(0, 4))


class RandomPolicy:
    """Takes each available action with equal probability."""

    modalities = ("pose",)

    def __init__(self, seed: int = 0):
        self.seed = seed

    def reset(self, start_info: dict):
        return np.random.default_rng(hash64(self.seed, start_info.get("episode_seed", 0), "random"))

    def act(self, obs: dict, memory) -> int:
        return random_policy_act(memory)


class _FrontierMemory:
    def __init__(self, rng):
        self.cells: dict[tuple[int, int], int] = {}
        self.rng = rng
        self.collect_block = 0
        self.target: tuple[int, int] | None = None
        self.target_age = 0
        self.banned: set[tuple[int, int]] = set()
        self.last_pose: tuple[float, float] | None = None
        self.since_move = 0
        self.pending_move: tuple[float, float] | None = None
        self.move_fails = 0
        self.prev_target_cbar: float | None = None


class FrontierPolicy:
    """Scripted explorer: fuses depth+seg frames into a 0.25 m occupancy
    grid (floor pixels certify free cells, obstacle pixels mark occupied),
    commits to the nearest frontier until it is resolved, and collects when
    target pixels are near and centered."""

    modalities = ("depth", "seg", "pose")

    def __init__(self, seed: int = 0, camera: CameraIntrinsics = CameraIntrinsics(),
                 fuse_range: float = 6.0):
        self.seed = seed
        self.camera = camera
        self.fuse_range = fuse_range
        f = camera.focal_px
        su = (np.arange(camera.width) - 0.5 * camera.width) / f
        self._ray_angle = -np.arctan(su)          # relative to agent yaw
        self._planar_scale = np.sqrt(1.0 + su * su)  # z-depth -> planar range

    def reset(self, start_info: dict):
        return _FrontierMemory(
            np.random.default_rng(hash64(self.seed, start_info.get("episode_seed", 0), "frontier"))
        )

    # -- grid fusion -----------------------------------------------------

    def _fuse(self, mem: _FrontierMemory, depth, seg, pose):
        x, y, yaw = pose
        z = depth.astype(np.float64)
        planar = z * self._planar_scale[None, :]
        ang = yaw + self._ray_angle
        valid = (z < self.camera.max_range - 1e-3) & (planar <= self.fuse_range)
        # doors are passable openings (their band is the lintel overhead) and
        # target markers are collectible, so neither blocks a cell
        occ = valid & (seg != FLOOR) & (seg != CEILING) & (seg != DOOR) & (seg != TARGET)
        free = valid & (seg == FLOOR)

        cells = mem.cells
        for mask, state in ((free, _FREE), (occ, _OCCUPIED)):
            if not mask.any():
                continue
            r = planar[mask]
            a = np.broadcast_to(ang[None, :], mask.shape)[mask]
            px = x + r * np.cos(a)
            py = y + r * np.sin(a)
            gi = np.floor(px / _GRID).astype(np.int64)
            gj = np.floor(py / _GRID).astype(np.int64)
            # pack the pair into one int64 so dedup is a 1-D unique instead
            # of a row-wise sort
            keys = np.unique((gi << 32) | (gj & 0xFFFFFFFF))
            ui = keys >> 32
            uj = (keys & 0xFFFFFFFF) - ((keys & 0x80000000) << 1)
            if state == _FREE:
                for i, j in zip(ui, uj):
                    c = (int(i), int(j))
                    if cells.get(c) != _OCCUPIED:
                        cells[c] = _FREE
            else:
                for i, j in zip(ui, uj):
                    cells[(int(i), int(j))] = _OCCUPIED

        # stitch the near-field floor blind spot along the traveled path
        agent_cell = (int(math.floor(x / _GRID)), int(math.floor(y / _GRID)))
        if mem.last_pose is not None:
            mx = 0.5 * (mem.last_pose[0] + x)
            my = 0.5 * (mem.last_pose[1] + y)
            for cx, cy in ((mx, my), (x, y)):
                c = (int(math.floor(cx / _GRID)), int(math.floor(cy / _GRID)))
                if cells.get(c) != _OCCUPIED:
                    cells[c] = _FREE
        mem.last_pose = (x, y)
        if cells.get(agent_cell) != _OCCUPIED:
            cells[agent_cell] = _FREE
        return agent_cell

    # -- frontier navigation ----------------------------------------------

    def _search(self, mem: _FrontierMemory, agent_cell):
        """BFS over free cells (agent cell treated as free).  Returns
        (dist, parent, frontiers)."""
        cells = mem.cells
        dist = {agent_cell: 0}
        parent: dict = {agent_cell: None}
        queue = deque([agent_cell])
        frontiers = []
        while queue:
            cur = queue.popleft()
            d = dist[cur]
            if cur != agent_cell and cur not in mem.banned and any(
                (cur[0] + di, cur[1] + dj) not in cells for di, dj in _NEIGHBORS
            ):
                frontiers.append(cur)
            for di, dj in _NEIGHBORS:
                nxt = (cur[0] + di, cur[1] + dj)
                if nxt in dist or cells.get(nxt) != _FREE:
                    continue
                dist[nxt] = d + 1
                parent[nxt] = cur
                queue.append(nxt)
        return dist, parent, frontiers

    def _is_frontier(self, mem: _FrontierMemory, cell) -> bool:
        cells = mem.cells
        return cells.get(cell) == _FREE and cell not in mem.banned and any(
            (cell[0] + di, cell[1] + dj) not in cells for di, dj in _NEIGHBORS
        )

    def _frontier_action(self, mem: _FrontierMemory, agent_cell, pose):
        x, y, yaw = pose
        # a committed target survives until resolved, reached, or stale
        if mem.target is not None:
            mem.target_age += 1
            if mem.target_age > 60:
                mem.banned.add(mem.target)
                mem.target = None
            elif not self._is_frontier(mem, mem.target):
                mem.target = None

        dist, parent, frontiers = self._search(mem, agent_cell)
        if mem.target is not None and mem.target not in dist:
            mem.target = None  # no longer reachable
        if mem.target is None:
            if not frontiers:
                # map saturated — with a drifting pose estimate the stale
                # grid walls the agent in, so rebuild it from here on out
                mem.cells.clear()
                mem.banned.clear()
                mem.target = None
                return int(mem.rng.integers(0, 3))  # movement actions only
            best = None
            for c in frontiers:
                hx = (c[0] + 0.5) * _GRID - x
                hy = (c[1] + 0.5) * _GRID - y
                rel = abs(wrap_angle(math.atan2(hy, hx) - yaw))
                cand = (dist[c], rel, c)
                if best is None or cand < best:
                    best = cand
            mem.target = best[2]
            mem.target_age = 0

        target = mem.target
        if dist.get(target, 99) <= 1:
            # standing at the frontier: the unknown beyond may be inside the
            # camera's near-field blind spot, so probe it as free and re-plan
            for di, dj in _NEIGHBORS:
                nxt = (target[0] + di, target[1] + dj)
                if nxt not in mem.cells:
                    mem.cells[nxt] = _FREE
            mem.target = None
            return self._step_toward(mem, target, pose)

        # walk the BFS path with a small lookahead to smooth the heading
        path = []
        cur = target
        while cur is not None and cur != agent_cell:
            path.append(cur)
            cur = parent.get(cur)
        if not path:
            mem.target = None
            return int(mem.rng.integers(0, 3))  # movement actions only
        path.reverse()
        aim = path[min(2, len(path) - 1)]
        return self._step_toward(mem, aim, pose)

    def _step_toward(self, mem: _FrontierMemory, cell, pose):
        x, y, yaw = pose
        tx = (cell[0] + 0.5) * _GRID
        ty = (cell[1] + 0.5) * _GRID
        dyaw = wrap_angle(math.atan2(ty - y, tx - x) - yaw)
        if abs(dyaw) > math.radians(22.5):
            return TURN_LEFT if dyaw > 0 else TURN_RIGHT
        return MOVE_FORWARD

    def act(self, obs: dict, mem: _FrontierMemory) -> int:
        depth = obs["depth"]
        seg = obs["seg"]
        pose = obs["pose"]
        self._note_move_result(mem, pose)
        agent_cell = self._fuse(mem, depth, seg, pose)

        h, w = seg.shape
        action = None
        seen_cbar = None
        if mem.collect_block > 0:
            mem.collect_block -= 1
        else:
            tmask = seg == TARGET
            if tmask.any():
                # steer toward the nearest target blob only: a second target
                # flickering at the frame edge must not drag the centroid
                rows, cols = np.nonzero(tmask)
                dvals = depth[rows, cols]
                near_col = int(cols[int(np.argmin(dvals))])
                window = np.abs(cols - near_col) <= 10
                cbar = float(cols[window].mean())
                zmin = float(dvals[window].min())
                # persistence gate: segmentation noise paints phantom target
                # blobs that relocate every frame, so only chase a blob seen
                # in roughly the same direction twice in a row
                persistent = (mem.prev_target_cbar is not None
                              and abs(cbar - mem.prev_target_cbar) <= 30.0)
                seen_cbar = cbar
                if persistent:
                    if zmin <= 1.8 and abs(cbar - 0.5 * w) <= w / 6:
                        mem.prev_target_cbar = None
                        mem.collect_block = 4
                        return COLLECT
                    if cbar < 0.5 * w - w / 12:
                        action = TURN_LEFT
                    elif cbar > 0.5 * w + w / 12:
                        action = TURN_RIGHT
                    else:
                        action = MOVE_FORWARD
        mem.prev_target_cbar = seen_cbar
        if action is None:
            action = self._frontier_action(mem, agent_cell, pose)
        # after repeated blocked moves, turn away instead of grinding
        if action == MOVE_FORWARD and mem.move_fails >= 2:
            mem.move_fails = 0
            action = TURN_LEFT if mem.rng.random() < 0.5 else TURN_RIGHT
        # safety valve: too long without forward progress means some steering
        # loop is live-locked, so barge ahead when the way is clear
        if action == MOVE_FORWARD:
            mem.since_move = 0
        else:
            mem.since_move += 1
            if mem.since_move > 30:
                ahead = float(depth[h // 2, w // 2 - 8: w // 2 + 8].min())
                if ahead > 0.9:
                    mem.since_move = 0
                    action = MOVE_FORWARD
        if action == MOVE_FORWARD:
            mem.pending_move = (pose[0], pose[1], pose[2])
        return action

    def _note_move_result(self, mem: _FrontierMemory, pose):
        """A MOVE that barely displaced the agent hit something the camera
        never saw (low clutter in the near-field blind spot); mark the cell
        just ahead occupied so the planner routes around it."""
        if mem.pending_move is None:
            return
        px, py, pyaw = mem.pending_move
        mem.pending_move = None
        if math.hypot(pose[0] - px, pose[1] - py) >= 0.1:
            mem.move_fails = 0
            return
        mem.move_fails += 1
        bx = px + 0.45 * math.cos(pyaw)
        by = py + 0.45 * math.sin(pyaw)
        cell = (int(math.floor(bx / _GRID)), int(math.floor(by / _GRID)))
        mem.cells[cell] = _OCCUPIED


def run_episode(policy, sim, session_cfg, modalities=None):
    """reset -> (get_obs -> act -> step) until done.

    Returns (EpisodeResult, event log).  Transport failures raise
    EpisodeAborted so the caller can exclude the episode from statistics.
    """
    mods = list(modalities if modalities is not None
                else getattr(policy, "modalities", ("depth", "seg", "pose")))
    try:
        start = sim.reset(session_cfg)
        mem = policy.reset(start)
        events = []
        while True:
            obs = sim.get_obs(mods)
            action = policy.act(obs, mem)
            receipt = sim.act(action)
            events.append({
                "step": receipt["a"],
                "action": int(action),
                "pose": list(receipt["pose"]),
                "collided": bool(receipt["collided"]),
                "collected_ids": list(receipt["collected"]),
                "reward": receipt["reward"],
            })
            if receipt["done"]:
                break
        res = sim.info()["result"]
        return EpisodeResult(**res), events
    except (TransportError, OSError) as e:
        raise EpisodeAborted(f"transport failure: {e}") from e
