#!/usr/bin/env python3
"""Benchmark the compiled geometry kernels against the pure-numpy fallback.

Both backends are imported side by side, run on identical inputs from a
canonical scene, checked for bit-identical outputs, and timed.  Optionally
(--episodes N) also times full random-policy episodes per backend in
subprocesses, since backend selection is an import-time decision.

Usage:
    python3 benchmarks/bench_kernels.py [--frames 100] [--rays 20000]
                                        [--queries 200000] [--episodes 0]
"""

from __future__ import annotations

import argparse
import math
import os
import subprocess
import sys
import time

import numpy as np

from seekbench._kernels import pure
from seekbench.sensors import CameraIntrinsics
from seekbench.worldgen import canonical_scene, collision_soup, sensor_soup

try:
    from seekbench._kernels import _native as native
except ImportError:
    native = None


def _poses(n, rng, lo=1.0, hi=9.0):
    return [(float(rng.uniform(lo, hi)), float(rng.uniform(lo, hi)),
             float(rng.uniform(-math.pi, math.pi))) for _ in range(n)]


def bench_render(impl, soup, poses, cam):
    w, h = cam.width, cam.height
    depth = np.empty((h, w), dtype=np.float64)
    seg = np.empty((h, w), dtype=np.uint8)
    inst = np.empty((h, w), dtype=np.uint16)
    t0 = time.perf_counter()
    acc = 0.0
    for x, y, yaw in poses:
        impl.render_scene(
            soup.segs, soup.band_lo, soup.band_hi, soup.class_ids,
            soup.instance_ids, x, y, cam.camera_height,
            math.cos(yaw), math.sin(yaw), w, h, cam.focal_px,
            cam.max_range, 3.0, 0, 1, depth, seg, inst,
        )
        acc += float(depth[0, 0])
    return time.perf_counter() - t0, (depth.copy(), seg.copy(), inst.copy())


def bench_rays(impl, soup, rays):
    t0 = time.perf_counter()
    out = np.empty((len(rays), 2))
    for i, (x, y, dx, dy, hgt) in enumerate(rays):
        out[i] = impl.ray_hit(soup.segs, soup.band_lo, soup.band_hi,
                              soup.instance_ids, x, y, dx, dy, hgt)
    return time.perf_counter() - t0, out


def bench_clearance(impl, soup, pts):
    t0 = time.perf_counter()
    out = np.empty((len(pts), 2))
    for i, (x, y) in enumerate(pts):
        out[i] = impl.min_clearance_sq(soup.segs, x, y)
    return time.perf_counter() - t0, out


def bench_episode(env_pure: bool, episodes: int) -> float:
    code = (
        "import time\n"
        "from seekbench.agents import RandomPolicy, run_episode\n"
        "from seekbench.session import InProcessSim, SessionConfig\n"
        "from seekbench import _kernels\n"
        f"n = {episodes}\n"
        "t0 = time.perf_counter()\n"
        "for ep in range(n):\n"
        "    run_episode(RandomPolicy(seed=ep), InProcessSim(),\n"
        "                SessionConfig(scene_seed=4, episode_seed=ep))\n"
        "print(_kernels.BACKEND, (time.perf_counter() - t0) / n)\n"
    )
    env = dict(os.environ)
    if env_pure:
        env["SEEKBENCH_PURE"] = "1"
    else:
        env.pop("SEEKBENCH_PURE", None)
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    backend, per_ep = out.stdout.split()
    print(f"  episode ({backend:6s}): {float(per_ep) * 1e3:9.1f} ms/episode")
    return float(per_ep)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--frames", type=int, default=100)
    ap.add_argument("--rays", type=int, default=20_000)
    ap.add_argument("--queries", type=int, default=200_000)
    ap.add_argument("--episodes", type=int, default=0,
                    help="also time N full episodes per backend (subprocess)")
    ap.add_argument("--scene", type=int, default=4)
    args = ap.parse_args()

    if native is None:
        print("compiled backend unavailable; timing pure backend only")

    world = canonical_scene(args.scene)
    ssoup = sensor_soup(world)
    csoup = collision_soup(world)
    cam = CameraIntrinsics()
    rng = np.random.default_rng(0)

    poses = _poses(args.frames, rng)
    rays = [(float(rng.uniform(1, 9)), float(rng.uniform(1, 9)),
             math.cos(a), math.sin(a), 1.2)
            for a in rng.uniform(-math.pi, math.pi, args.rays)]
    pts = [(float(rng.uniform(0, 10)), float(rng.uniform(0, 10)))
           for _ in range(args.queries)]

    print(f"scene {args.scene}: {len(ssoup)} sensor segs, "
          f"{len(csoup)} collision segs")
    print(f"workload: {args.frames} frames ({cam.width}x{cam.height}), "
          f"{args.rays} rays, {args.queries} clearance queries")
    print()

    rows = []
    for name, fn, payload in (
        ("render_scene", bench_render, (ssoup, poses, cam)),
        ("ray_hit", bench_rays, (ssoup, rays)),
        ("min_clearance_sq", bench_clearance, (csoup, pts)),
    ):
        t_pure, out_pure = fn(pure, *payload)
        if native is not None:
            t_nat, out_nat = fn(native, *payload)
            if isinstance(out_pure, tuple):
                same = all(np.array_equal(a, b)
                           for a, b in zip(out_pure, out_nat))
            else:
                same = np.array_equal(out_pure, out_nat)
            status = "bit-identical" if same else "MISMATCH"
            rows.append((name, t_pure, t_nat, status))
        else:
            rows.append((name, t_pure, None, "pure only"))

    print(f"{'kernel':<18} {'pure':>10} {'native':>10} {'speedup':>8}  check")
    mismatch = False
    for name, t_pure, t_nat, status in rows:
        if t_nat is None:
            print(f"{name:<18} {t_pure:>9.3f}s {'-':>10} {'-':>8}  {status}")
        else:
            print(f"{name:<18} {t_pure:>9.3f}s {t_nat:>9.3f}s "
                  f"{t_pure / t_nat:>7.1f}x  {status}")
            mismatch |= status != "bit-identical"

    if args.episodes > 0:
        print()
        bench_episode(env_pure=True, episodes=args.episodes)
        if native is not None:
            bench_episode(env_pure=False, episodes=args.episodes)

    if mismatch:
        print("\nERROR: backend outputs differ", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
