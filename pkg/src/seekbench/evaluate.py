"""Monte Carlo evaluation harness and report emission.

Runs n episodes per scene with episode seeds derived from a master seed,
aggregates per-scene mean/std of the six report columns, and serializes the
per-episode rows as CSV plus a JSON report.  Same master seed => identical
CSV bytes.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass

import numpy as np

from .agents import EpisodeAborted, run_episode
from .geometry import hash64
from .session import InProcessSim, SessionConfig
from .task import EpisodeResult, TaskConfig
from .worldgen import GenerationError, SceneFormatError

COLUMNS = ("recall", "precision", "collisions", "steps", "score", "explored_m2")

CSV_HEADER = "scene,episode,recall,precision,collisions,steps,score,explored_m2"


class EvaluationError(Exception):
    pass


@dataclass(frozen=True)
class EvalReport:
    policy: str
    mode: str
    master_seed: int
    scenes: tuple
    n_episodes: int
    rows: tuple  # of (scene, episode, EpisodeResult)
    per_scene: dict  # scene -> {"count", "mean": {col: v}, "std": {col: v}}
    aborted: tuple
    config_digest: str


def result_columns(res: EpisodeResult) -> dict:
    return {
        "recall": res.recall,
        "precision": res.precision,
        "collisions": res.collisions,
        "steps": res.actions,
        "score": res.score,
        "explored_m2": res.explored_m2,
    }


def evaluate(policy, scenes, n_episodes: int, mode: str = "gt",
             master_seed: int = 0, task: TaskConfig | None = None,
             sim_factory=None, policy_name: str | None = None,
             progress=None) -> EvalReport:
    if n_episodes < 1:
        raise ValueError("n_episodes must be >= 1")
    scenes = tuple(int(s) for s in scenes)
    if not scenes:
        raise ValueError("need at least one scene")
    task = task if task is not None else TaskConfig()
    make_sim = sim_factory if sim_factory is not None else InProcessSim
    name = policy_name if policy_name is not None else type(policy).__name__

    rows = []
    aborted = []
    for scene_id in scenes:
        for ep in range(n_episodes):
            cfg = SessionConfig(
                scene_seed=scene_id,
                episode_seed=hash64(master_seed, scene_id, ep),
                mode=mode,
                task=task,
            )
            sim = make_sim()
            try:
                res, _events = run_episode(policy, sim, cfg)
                rows.append((scene_id, ep, res))
            except (GenerationError, SceneFormatError) as e:
                raise EvaluationError(f"scene {scene_id} failed to load: {e}") from e
            except EpisodeAborted as e:
                aborted.append({"scene": scene_id, "episode": ep, "reason": str(e)})
            finally:
                sim.close()
            if progress is not None:
                progress(scene_id, ep, rows[-1][2] if rows else None)

    per_scene = {}
    for scene_id in scenes:
        scene_rows = [r for s, _, r in rows if s == scene_id]
        if scene_rows:
            mean = {}
            std = {}
            for col in COLUMNS:
                vals = np.array([result_columns(r)[col] for r in scene_rows], dtype=np.float64)
                mean[col] = float(vals.mean())
                std[col] = float(vals.std())
            per_scene[scene_id] = {"count": len(scene_rows), "mean": mean, "std": std}
        else:
            per_scene[scene_id] = {
                "count": 0,
                "mean": {c: float("nan") for c in COLUMNS},
                "std": {c: float("nan") for c in COLUMNS},
            }

    digest_src = json.dumps({
        "policy": name,
        "mode": mode,
        "master_seed": master_seed,
        "scenes": list(scenes),
        "n_episodes": n_episodes,
        "task": asdict(task),
    }, sort_keys=True, separators=(",", ":"))
    digest = hashlib.sha256(digest_src.encode("utf-8")).hexdigest()

    return EvalReport(
        policy=name, mode=mode, master_seed=master_seed, scenes=scenes,
        n_episodes=n_episodes, rows=tuple(rows), per_scene=per_scene,
        aborted=tuple(aborted), config_digest=digest,
    )


def report_to_csv(report: EvalReport) -> str:
    lines = [CSV_HEADER]
    for scene, ep, res in report.rows:
        lines.append(
            f"{scene},{ep},{res.recall!r},{res.precision!r},{res.collisions},"
            f"{res.actions},{res.score!r},{res.explored_m2!r}"
        )
    return "\n".join(lines) + "\n"


def report_to_json(report: EvalReport) -> str:
    obj = {
        "policy": report.policy,
        "mode": report.mode,
        "master_seed": report.master_seed,
        "scenes": list(report.scenes),
        "n_episodes": report.n_episodes,
        "config_digest": report.config_digest,
        "per_scene": {
            str(scene): stats for scene, stats in report.per_scene.items()
        },
        "aborted": list(report.aborted),
        "rows": [
            {"scene": scene, "episode": ep, **result_columns(res)}
            for scene, ep, res in report.rows
        ],
    }
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def rows_from_csv(text: str):
    """Parse report CSV back into (scene, episode, column dict) tuples —
    used to recompute aggregates independently."""
    lines = [ln for ln in text.strip().split("\n")]
    if not lines or lines[0] != CSV_HEADER:
        raise ValueError("not a report CSV")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        scene, ep = int(parts[0]), int(parts[1])
        vals = {
            "recall": float(parts[2]),
            "precision": float(parts[3]),
            "collisions": float(parts[4]),
            "steps": float(parts[5]),
            "score": float(parts[6]),
            "explored_m2": float(parts[7]),
        }
        out.append((scene, ep, vals))
    return out
