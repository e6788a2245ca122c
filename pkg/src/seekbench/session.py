"""Simulation session: one episode's full state behind a command interface.

Both the network server and the in-process evaluation harness drive this
object; observation payloads are produced here as (JSON header, raw buffer)
pairs so the two paths are byte-identical by construction.  Physics advances
only via action/step/force commands — never a wall clock.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import _kernels
from .geometry import hash64
from .kinematics import ControlCommand, PhysicsParams, run_ticks, sample_odometry
from .perception import (
    NoiseConfig, PoseEstimate, corrupt_depth, corrupt_segmentation,
    pose_delta, vio_update,
)
from .protocol import pack_odometry
from .sensors import CameraIntrinsics, lidar_scan, render_frames
from .task import (
    TaskConfig, EpisodeState, episode_result, episode_sensor_soup,
    start_episode, step_episode,
)
from .worldgen import canonical_scene, scene_from_json, scene_to_json
from .worldgen import export_mesh as _export_mesh

MODE_GT = "gt"
MODE_PERCEPTION = "perception"

OBS_MODALITIES = ("color", "depth", "seg", "inst", "pose", "lidar")


class StateError(Exception):
    """Command issued before RESET established an episode."""


@dataclass(frozen=True)
class SessionConfig:
    scene_seed: int = 1
    scene_json: str | None = None
    episode_seed: int = 0
    mode: str = MODE_GT
    task: TaskConfig = TaskConfig()
    noise: NoiseConfig = NoiseConfig()
    step_mode: bool = True
    camera: CameraIntrinsics = CameraIntrinsics()

    def __post_init__(self):
        if self.mode not in (MODE_GT, MODE_PERCEPTION):
            raise ValueError(f"mode must be '{MODE_GT}' or '{MODE_PERCEPTION}'")


def session_config_to_json(cfg: SessionConfig) -> dict:
    return {
        "scene_seed": cfg.scene_seed,
        "scene_json": cfg.scene_json,
        "episode_seed": cfg.episode_seed,
        "mode": cfg.mode,
        "task": asdict(cfg.task),
        "noise": asdict(cfg.noise),
        "step_mode": cfg.step_mode,
        "camera": asdict(cfg.camera),
    }


def session_config_from_json(obj: dict) -> SessionConfig:
    task_d = dict(obj.get("task") or {})
    weights = task_d.pop("weights", None)
    from .task import ScoreWeights
    task = TaskConfig(**task_d, weights=ScoreWeights(**weights) if weights else ScoreWeights())
    noise = NoiseConfig(**(obj.get("noise") or {}))
    camera = CameraIntrinsics(**(obj.get("camera") or {}))
    return SessionConfig(
        scene_seed=int(obj.get("scene_seed", 1)),
        scene_json=obj.get("scene_json"),
        episode_seed=int(obj.get("episode_seed", 0)),
        mode=obj.get("mode", MODE_GT),
        task=task,
        noise=noise,
        step_mode=bool(obj.get("step_mode", True)),
        camera=camera,
    )


_DTYPES = {
    "color": "<u1", "depth": "<f4", "seg": "<u1", "inst": "<u2",
    "pose": "<f8", "lidar": "<f8",
}


def arrays_from_obs(header: dict, buffers: list[bytes]) -> dict:
    """Reconstruct numpy arrays (and the pose tuple) from an observation
    header + raw buffers; shared by the network client and the in-process
    path so both decode identically."""
    out = {}
    for name, buf in zip(header["modalities"], buffers):
        arr = np.frombuffer(buf, dtype=_DTYPES[name]).reshape(header["dims"][name])
        if name == "pose":
            out["pose"] = (float(arr[0]), float(arr[1]), float(arr[2]))
            out["pose_is_estimate"] = bool(header.get("pose_is_estimate", False))
        else:
            out[name] = arr
    return out


class SimSession:
    """Owner of one simulation's mutable state; single-threaded commands."""

    def __init__(self, scene_dir=None):
        self._scene_dir = scene_dir
        self.config: SessionConfig | None = None
        self.world = None
        self.state: EpisodeState | None = None
        self.scene_digest: str | None = None
        self.params = PhysicsParams()
        self._tick = 0
        self._pending_odom: list[bytes] = []
        self._last_packet: bytes | None = None
        self._vio: PoseEstimate | None = None
        self._rng_seg = None
        self._rng_depth = None
        self._rng_vio = None

    # -- lifecycle -----------------------------------------------------

    def _load_world(self, cfg: SessionConfig):
        if cfg.scene_json is not None:
            return scene_from_json(cfg.scene_json)
        if self._scene_dir is not None:
            path = f"{self._scene_dir}/scene_{cfg.scene_seed}.json"
            try:
                with open(path, "r", encoding="utf-8") as f:
                    return scene_from_json(f.read())
            except FileNotFoundError:
                pass
        return canonical_scene(cfg.scene_seed)

    def reset(self, cfg: SessionConfig) -> dict:
        world = self._load_world(cfg)
        digest = hashlib.sha256(scene_to_json(world).encode("utf-8")).hexdigest()
        state = start_episode(world, cfg.task, cfg.episode_seed,
                              actuation_noise=(cfg.mode == MODE_PERCEPTION))
        self.config = cfg
        self.world = world
        self.state = state
        self.scene_digest = digest
        self._tick = 0
        self._pending_odom = []
        self._last_packet = None
        self._vio = PoseEstimate(state.agent.position, state.agent.yaw, True)
        self._reseed_noise(cfg.noise, cfg.episode_seed)
        return {
            "scene_digest": digest,
            "scene_seed": cfg.scene_seed,
            "episode_seed": cfg.episode_seed,
            "spawn": [state.agent.position[0], state.agent.position[1], state.agent.yaw],
            "n_targets": cfg.task.n_targets,
            "episode_limit": cfg.task.episode_limit,
            "mode": cfg.mode,
            "step_mode": cfg.step_mode,
            "backend": _kernels.BACKEND,
        }

    def _reseed_noise(self, noise: NoiseConfig, episode_seed: int):
        self._rng_seg = np.random.default_rng(hash64(noise.seed, episode_seed, "seg"))
        self._rng_depth = np.random.default_rng(hash64(noise.seed, episode_seed, "depth"))
        self._rng_vio = np.random.default_rng(hash64(noise.seed, episode_seed, "vio"))

    def _require_state(self) -> EpisodeState:
        if self.state is None:
            raise StateError("RESET required before this command")
        return self.state

    # -- commands ------------------------------------------------------

    def action(self, action: int) -> dict:
        state = self._require_state()
        prev_pose = (*state.agent.position, state.agent.yaw)
        state, done = step_episode(state, action, self.config.camera)
        if len(state.last_trace) >= 2:
            self._push_odometry(state.last_trace)
        self._advance_vio(prev_pose)
        ev = state.event_log[-1]
        if self.config.mode == MODE_PERCEPTION:
            # the event log keeps the true pose; clients only see the estimate
            pose = [self._vio.position[0], self._vio.position[1], self._vio.yaw]
        else:
            pose = list(ev["pose"])
        return {
            "collided": ev["collided"],
            "collected": list(ev["collected_ids"]),
            "done": done,
            "a": state.steps_taken,
            "c": state.collisions,
            "pose": pose,
            "reward": ev["reward"],
        }

    def step_ticks(self, n_ticks: int, forward_force: float = 0.0, torque: float = 0.0) -> dict:
        state = self._require_state()
        if n_ticks < 1:
            raise ValueError("n_ticks must be >= 1")
        prev_pose = (*state.agent.position, state.agent.yaw)
        final, trace, collided = run_ticks(
            state.agent, ControlCommand(forward_force, torque), n_ticks,
            state.world, self.params,
        )
        state.agent = final
        state.last_trace = trace
        self._push_odometry(trace)
        self._advance_vio(prev_pose)
        return {
            "ticks": n_ticks,
            "collided": collided,
            "pose": [final.position[0], final.position[1], final.yaw],
        }

    def get_obs(self, modalities) -> tuple[dict, list[bytes]]:
        state = self._require_state()
        cfg = self.config
        modalities = list(modalities)
        for m in modalities:
            if m not in OBS_MODALITIES:
                raise ValueError(f"unknown modality: {m}")
        soup = episode_sensor_soup(state)
        pose_true = (state.agent.position[0], state.agent.position[1], state.agent.yaw)
        perception = cfg.mode == MODE_PERCEPTION

        frames = None
        if any(m in ("color", "depth", "seg", "inst") for m in modalities):
            frames = render_frames(soup, pose_true, cfg.camera)
        seg_out = depth_out = None
        if frames is not None:
            seg_out = frames.seg
            depth_out = frames.depth
            if perception:
                # true seg drives depth's occlusion-edge dropout; corruption
                # order is fixed (depth, then seg) to keep streams aligned
                if "depth" in modalities:
                    depth_out = corrupt_depth(frames.depth, frames.seg, cfg.noise,
                                              self._rng_depth, max_range=cfg.camera.max_range)
                if "seg" in modalities:
                    seg_out = corrupt_segmentation(frames.seg, cfg.noise, self._rng_seg)

        header = {
            "modalities": modalities,
            "dims": {},
            "dtypes": {},
            "mode": cfg.mode,
            "pose_is_estimate": perception,
        }
        buffers: list[bytes] = []
        h, w = cfg.camera.height, cfg.camera.width
        for m in modalities:
            if m == "color":
                arr, dims = frames.color, [h, w, 3]
            elif m == "depth":
                arr, dims = depth_out, [h, w]
            elif m == "seg":
                arr, dims = seg_out, [h, w]
            elif m == "inst":
                arr, dims = frames.inst, [h, w]
            elif m == "pose":
                if perception:
                    p = self._vio
                    arr = np.array([p.position[0], p.position[1], p.yaw], dtype=np.float64)
                else:
                    arr = np.array(pose_true, dtype=np.float64)
                dims = [3]
            elif m == "lidar":
                scan = lidar_scan(soup, pose_true, 360, cfg.camera.max_range,
                                  slice_height=cfg.camera.camera_height)
                arr, dims = scan.ranges, [scan.n_beams]
            header["dims"][m] = dims
            header["dtypes"][m] = _DTYPES[m]
            buffers.append(np.ascontiguousarray(arr).astype(_DTYPES[m], copy=False).tobytes())
        return header, buffers

    def set_mode(self, mode: str, noise: NoiseConfig | None = None) -> dict:
        self._require_state()
        if mode not in (MODE_GT, MODE_PERCEPTION):
            raise ValueError(f"unknown mode: {mode}")
        new_noise = noise if noise is not None else self.config.noise
        self.config = replace(self.config, mode=mode, noise=new_noise)
        self.state.actuation_rng = (
            np.random.default_rng(hash64(self.config.episode_seed, "actuation"))
            if mode == MODE_PERCEPTION and self.state.actuation_rng is None
            else self.state.actuation_rng
        )
        if noise is not None:
            self._reseed_noise(new_noise, self.config.episode_seed)
        return {"mode": mode}

    def export_mesh(self, fmt: str = "ply") -> bytes:
        self._require_state()
        data = _export_mesh(self.world, fmt)
        return data if isinstance(data, bytes) else data.encode("utf-8")

    def info(self, include_log: bool = False) -> dict:
        out = {
            "backend": _kernels.BACKEND,
            "tick": self._tick,
            "dt": self.params.dt,
        }
        if self.state is not None:
            state = self.state
            res = episode_result(state)
            out.update({
                "scene_digest": self.scene_digest,
                "mode": self.config.mode,
                "step_mode": self.config.step_mode,
                "pose": [state.agent.position[0], state.agent.position[1], state.agent.yaw],
                "a": state.steps_taken,
                "c": state.collisions,
                "collect_attempts": state.collect_attempts,
                "collect_successes": state.collect_successes,
                "found": state.found_count,
                "n_targets": len(state.targets),
                "done": state.done,
                "result": asdict(res),
            })
            if include_log:
                out["event_log"] = list(state.event_log)
        return out

    # -- odometry ------------------------------------------------------

    def _push_odometry(self, trace):
        for o in sample_odometry(trace, self.params):
            self._tick += 1
            pkt = pack_odometry(self._tick, o.position, o.yaw, o.velocity,
                                o.acceleration, o.angular_rate, o.collision)
            self._pending_odom.append(pkt)
            self._last_packet = pkt

    def _advance_vio(self, prev_pose):
        state = self.state
        new_pose = (*state.agent.position, state.agent.yaw)
        delta = pose_delta(prev_pose, new_pose)
        self._vio = vio_update(self._vio, delta, self.config.noise, self._rng_vio)

    def pop_odometry(self) -> list[bytes]:
        out = self._pending_odom
        self._pending_odom = []
        return out

    def snapshot_packet(self) -> bytes:
        """Latest packet, or a stationary packet at the current pose — used
        by the real-time broadcaster."""
        if self._last_packet is not None:
            return self._last_packet
        if self.state is None:
            return pack_odometry(0, (0.0, 0.0), 0.0, (0.0, 0.0), (0.0, 0.0), 0.0, False)
        a = self.state.agent
        return pack_odometry(self._tick, a.position, a.yaw,
                             (math.cos(a.yaw) * a.linear_speed, math.sin(a.yaw) * a.linear_speed),
                             (0.0, 0.0), a.angular_rate, a.in_contact)


class InProcessSim:
    """In-process twin of client.SimClient: the same method surface driving
    a SimSession directly.  Observations are re-decoded from the exact
    (header, buffers) payloads the server would send, so both paths are
    byte-identical by construction."""

    def __init__(self, scene_dir=None):
        self._session = SimSession(scene_dir)

    def reset(self, cfg) -> dict:
        if not isinstance(cfg, SessionConfig):
            cfg = session_config_from_json(dict(cfg))
        return self._session.reset(cfg)

    def act(self, action: int) -> dict:
        return self._session.action(int(action))

    def step(self, n_ticks: int, forward_force: float = 0.0, torque: float = 0.0) -> dict:
        return self._session.step_ticks(int(n_ticks), forward_force, torque)

    def get_obs_raw(self, modalities) -> tuple[dict, list[bytes]]:
        return self._session.get_obs(list(modalities))

    def get_obs(self, modalities=("depth", "seg", "pose")) -> dict:
        header, buffers = self._session.get_obs(list(modalities))
        return arrays_from_obs(header, buffers)

    def set_mode(self, mode: str, noise=None) -> dict:
        if noise is not None and not isinstance(noise, NoiseConfig):
            noise = NoiseConfig(**dict(noise))
        return self._session.set_mode(mode, noise)

    def export_mesh(self, fmt: str = "ply") -> bytes:
        return self._session.export_mesh(fmt)

    def info(self, include_log: bool = False) -> dict:
        return self._session.info(include_log)

    def close(self):
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
