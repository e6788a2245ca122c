"""Command-line entry points: serve, eval, gen-scenes, score."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .agents import FrontierPolicy, RandomPolicy
from .evaluate import evaluate, report_to_csv, report_to_json
from .netserver import SimServer
from .session import MODE_GT, MODE_PERCEPTION
from .task import ScoreWeights, TaskConfig, score_event_log
from .worldgen import generate_scene, scene_to_json, validate_scene


def _parse_scenes(text: str):
    try:
        scenes = tuple(int(part) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise SystemExit(f"invalid --scenes value: {text!r}")
    if not scenes:
        raise SystemExit("--scenes must name at least one scene seed")
    return scenes


def cmd_serve(args) -> int:
    server = SimServer(
        host=args.host,
        port=args.port,
        odom_port=args.odom_port,
        ws_port=args.ws_port,
        scene_dir=args.scene_dir,
        default_mode=args.mode,
        default_scene_seed=args.seed,
    )
    with server:
        print(f"listening on {server.host}:{server.port} "
              f"(odometry udp {server.odom_port}"
              + (f", websocket {server.ws_port}" if server.ws_port else "")
              + ")", flush=True)
        try:
            server.serve_forever()
        except KeyboardInterrupt:
            pass
    return 0


def cmd_eval(args) -> int:
    scenes = _parse_scenes(args.scenes)
    if args.policy == "random":
        policy = RandomPolicy(seed=args.seed)
    elif args.policy == "frontier":
        policy = FrontierPolicy(seed=args.seed)
    else:
        raise SystemExit(f"unknown policy {args.policy!r}")

    def progress(scene, ep, res):
        if args.quiet:
            return
        if res is not None:
            print(f"scene {scene} episode {ep}: score={res.score:+.4f} "
                  f"recall={res.recall:.3f} collisions={res.collisions}",
                  flush=True)
        else:
            print(f"scene {scene} episode {ep}: aborted", flush=True)

    report = evaluate(
        policy, scenes, args.episodes, mode=args.mode,
        master_seed=args.seed, policy_name=args.policy, progress=progress,
    )
    csv_text = report_to_csv(report)
    if args.out:
        Path(args.out).write_text(csv_text)
        if not args.quiet:
            print(f"wrote {args.out}")
    else:
        sys.stdout.write(csv_text)
    if args.json:
        Path(args.json).write_text(report_to_json(report))
        if not args.quiet:
            print(f"wrote {args.json}")
    if not args.quiet:
        for scene in scenes:
            stats = report.per_scene[scene]
            mean = stats["mean"]
            print(f"scene {scene}: n={stats['count']} "
                  f"score={mean['score']:+.4f} recall={mean['recall']:.3f} "
                  f"precision={mean['precision']:.3f} "
                  f"collisions={mean['collisions']:.1f}")
    return 0


def cmd_gen_scenes(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for seed in _parse_scenes(args.scenes):
        world = generate_scene(seed)
        problems = validate_scene(world)
        if problems:
            raise SystemExit(f"scene {seed} failed validation: {problems}")
        path = out_dir / f"scene_{seed}.json"
        path.write_text(scene_to_json(world))
        print(f"wrote {path}")
    return 0


def cmd_score(args) -> int:
    events = []
    try:
        with open(args.log) as f:
            for line in f:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
    except OSError as exc:
        raise SystemExit(f"cannot read event log {args.log!r}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise SystemExit(f"{args.log}: not valid JSON/JSONL ({exc})")
    if len(events) == 1 and isinstance(events[0], list):
        events = events[0]  # whole-file JSON array instead of JSONL
    result = score_event_log(
        events,
        n_targets=args.targets,
        episode_limit=args.limit,
        weights=ScoreWeights(),
        cell_size=TaskConfig().cell_size,
        visit_radius=TaskConfig().visit_radius,
    )
    print(f"recall={result.recall!r}")
    print(f"precision={result.precision!r}")
    print(f"collisions={result.collisions}")
    print(f"steps={result.actions}")
    print(f"score={result.score!r}")
    print(f"explored_m2={result.explored_m2!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seekbench",
        description="Deterministic indoor object-search simulator and benchmark",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the simulation server")
    p.add_argument("--host", default="127.0.0.1", help="bind address")
    p.add_argument("--port", type=int, default=9000, help="TCP command port (0 = ephemeral)")
    p.add_argument("--odom-port", type=int, default=9001,
                   help="UDP odometry broadcast port (0 = ephemeral)")
    p.add_argument("--ws-port", type=int, default=None,
                   help="WebSocket port for browser clients (omit to disable, 0 = ephemeral)")
    p.add_argument("--scene-dir", default=None,
                   help="directory of scene_<seed>.json files to serve")
    p.add_argument("--mode", choices=(MODE_GT, MODE_PERCEPTION), default=MODE_GT,
                   help="default observation mode for new sessions")
    p.add_argument("--seed", type=int, default=1,
                   help="default scene seed when a RESET omits one")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("eval", help="run a policy over scenes and write a report")
    p.add_argument("--policy", choices=("random", "frontier"), required=True)
    p.add_argument("--scenes", default="4,5",
                   help="comma-separated scene seeds (default 4,5)")
    p.add_argument("--episodes", type=int, default=100, help="episodes per scene")
    p.add_argument("--mode", choices=(MODE_GT, MODE_PERCEPTION), default=MODE_GT,
                   help="observation mode the policy runs under")
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")
    p.add_argument("--json", default=None, help="also write a JSON report here")
    p.add_argument("--quiet", action="store_true", help="suppress per-episode lines")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gen-scenes", help="generate and validate scene JSON files")
    p.add_argument("--scenes", default="1,2,3,4,5",
                   help="comma-separated scene seeds (default 1,2,3,4,5)")
    p.add_argument("--out-dir", default="scenes", help="output directory")
    p.set_defaults(func=cmd_gen_scenes)

    p = sub.add_parser("score", help="re-score an episode event log (JSONL)")
    p.add_argument("log", help="event-log path (one JSON event per line)")
    p.add_argument("--targets", type=int, default=TaskConfig().n_targets,
                   help="number of targets in the episode's scene")
    p.add_argument("--limit", type=int, default=TaskConfig().episode_limit,
                   help="episode step limit used for normalization")
    p.set_defaults(func=cmd_score)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
