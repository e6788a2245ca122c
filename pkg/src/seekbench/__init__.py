"""seekbench: deterministic indoor object-search simulator and benchmark.

Headless 2.5D simulation of desk-scale office scenes with a discrete-action
search task, sensor rendering (color / depth / segmentation / lidar),
a perception-noise emulation layer, a byte-framed TCP/UDP/websocket server,
and a Monte Carlo evaluation harness.
"""

from ._kernels import BACKEND
from .agents import EpisodeAborted, FrontierPolicy, RandomPolicy, run_episode
from .client import OdometryReceiver, RemoteError, SimClient, TransportError
from .evaluate import (
    EvalReport, EvaluationError, evaluate, report_to_csv, report_to_json,
)
from .geometry import hash64, point_in_polygon, polygon_signed_area, wrap_angle
from .kinematics import (
    MOVE_FORWARD, TURN_LEFT, TURN_RIGHT,
    AgentState, ControlCommand, Odometry, PDGains, PhysicsParams,
    execute_discrete_action, integrate_tick, resolve_collision, run_ticks,
    sample_odometry,
)
from .perception import (
    CalibrationError, NoiseConfig, PoseEstimate, calibrate_seg_noise,
    corrupt_depth, corrupt_segmentation, pose_delta, vio_update,
)
from .semantics import CLASS_NAMES, N_CLASSES, PALETTE, SemanticClass
from .sensors import (
    CameraIntrinsics, Frames, LidarScan, RayHit,
    lidar_scan, mean_iou, raycast, render_frames,
)
from .session import (
    InProcessSim, SessionConfig, SimSession, StateError, arrays_from_obs,
    MODE_GT, MODE_PERCEPTION,
)
from .netserver import SimServer
from .task import (
    COLLECT, EpisodeFinishedError, EpisodeResult, EpisodeState,
    PlacementError, ScoreWeights, Target, TaskConfig,
    attempt_collect, compute_score, episode_result, explored_area,
    place_targets, score_event_log, start_episode, step_episode,
)
from .worldgen import (
    GenerationError, SceneFormatError, WorldMap,
    canonical_scene, collision_soup, export_mesh, generate_scene,
    scene_from_json, scene_to_json, sensor_soup, validate_scene,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "__version__",
    # geometry
    "hash64", "point_in_polygon", "polygon_signed_area", "wrap_angle",
    # semantics
    "CLASS_NAMES", "N_CLASSES", "PALETTE", "SemanticClass",
    # worldgen
    "GenerationError", "SceneFormatError", "WorldMap", "canonical_scene",
    "collision_soup", "export_mesh", "generate_scene", "scene_from_json",
    "scene_to_json", "sensor_soup", "validate_scene",
    # kinematics
    "MOVE_FORWARD", "TURN_LEFT", "TURN_RIGHT", "AgentState", "ControlCommand",
    "Odometry", "PDGains", "PhysicsParams", "execute_discrete_action",
    "integrate_tick", "resolve_collision", "run_ticks", "sample_odometry",
    # sensors
    "CameraIntrinsics", "Frames", "LidarScan", "RayHit", "lidar_scan",
    "mean_iou", "raycast", "render_frames",
    # perception
    "CalibrationError", "NoiseConfig", "PoseEstimate", "calibrate_seg_noise",
    "corrupt_depth", "corrupt_segmentation", "pose_delta", "vio_update",
    # task
    "COLLECT", "EpisodeFinishedError", "EpisodeResult", "EpisodeState",
    "PlacementError", "ScoreWeights", "Target", "TaskConfig",
    "attempt_collect", "compute_score", "episode_result", "explored_area",
    "place_targets", "score_event_log", "start_episode", "step_episode",
    # session / server / client
    "InProcessSim", "SessionConfig", "SimSession", "SimServer", "StateError",
    "arrays_from_obs", "MODE_GT", "MODE_PERCEPTION",
    "OdometryReceiver", "RemoteError", "SimClient", "TransportError",
    # agents / evaluation
    "EpisodeAborted", "FrontierPolicy", "RandomPolicy", "run_episode",
    "EvalReport", "EvaluationError", "evaluate", "report_to_csv",
    "report_to_json",
]
