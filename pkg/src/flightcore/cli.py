"""Command-line front end: benchmark, episode runner, world tools, bridge server.

Exit codes: 0 success, 2 usage error, 1 runtime error. Output for a fixed
seed is byte-identical across invocations except for measured-throughput
fields.
"""

from __future__ import annotations

import argparse
import os
import signal
import sys
import time

import numpy as np

from . import bridge as _bridge
from . import config as _config
from . import vecenv as _vecenv
from . import world as _world
from .dynamics import QuadParams
from .tasks import InitialStateSampler, TaskKind, TaskSpec, action_bounds
from .vecenv import VecSim, VecSimConfig

CONTROLLERS = ("hover", "random", "external")


def _int_list(text: str) -> list[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ints, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _bounds6(text: str) -> tuple[np.ndarray, np.ndarray]:
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 6:
        raise argparse.ArgumentTypeError("bounds need 6 comma-separated numbers")
    return np.array(vals[:3]), np.array(vals[3:])


def _vec3(text: str) -> np.ndarray:
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("expected 3 comma-separated numbers")
    return np.array(vals)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flightcore",
        description="Quadrotor simulation engine: benchmarks, RL episode runner, "
                    "point-cloud worlds, path planning, and the render bridge.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("bench", help="measure raw stepping throughput")
    p.add_argument("--envs", type=_int_list, default=[1, 10, 150],
                   help="comma-separated env counts")
    p.add_argument("--workers", type=_int_list, default=[1, 4],
                   help="comma-separated worker counts")
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--method", default="rk4", choices=["euler", "rk4"])
    p.add_argument("--duration", type=float, default=1.0,
                   help="seconds of stepping per (envs, workers) pair")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=None, help="CSV output path (default stdout)")

    p = sub.add_parser("run", help="run task episodes with a scripted controller")
    p.add_argument("--task", default="stabilize",
                   choices=[k.value for k in TaskKind])
    p.add_argument("--controller", default="hover", help="hover | random | external")
    p.add_argument("--episodes", type=int, default=1)
    p.add_argument("--envs", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--method", default="rk4", choices=["euler", "rk4"])
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--config", default=None)
    p.add_argument("--hover-init", action="store_true",
                   help="start every episode exactly at the hover target")
    p.add_argument("--trace", action="store_true",
                   help="print one line per step with the env-0 reward")

    p = sub.add_parser("world", help="generate a forest cloud and export PLY")
    p.add_argument("--bounds", type=_bounds6, default=(np.zeros(3), np.array([50.0, 50.0, 10.0])),
                   help="minx,miny,minz,maxx,maxy,maxz")
    p.add_argument("--resolution", type=float, default=0.1)
    p.add_argument("--density", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output .ply path")

    p = sub.add_parser("plan", help="plan a collision-free path through a PLY cloud")
    p.add_argument("--cloud", required=True, help="input .ply path")
    p.add_argument("--resolution", type=float, default=None,
                   help="declare the cloud resolution if the file has no comment")
    p.add_argument("--start", type=_vec3, required=True)
    p.add_argument("--goal", type=_vec3, required=True)
    p.add_argument("--radius", type=float, default=0.3)
    p.add_argument("--budget", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("serve", help="run the TCP bridge server")
    p.add_argument("--bridge", default=None,
                   help="host:port endpoint (default $FLIGHTCORE_BRIDGE or 127.0.0.1:7400)")
    p.add_argument("--envs", type=int, default=1)
    p.add_argument("--dt", type=float, default=0.02)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", default=None)
    p.add_argument("--world-ply", default=None, help="serve this cloud for point-cloud requests")
    p.add_argument("--world-seed", type=int, default=None,
                   help="serve a generated 50x50x10 forest with this seed")
    p.add_argument("--realtime", action="store_true",
                   help="pace the free-run loop to wall-clock dt")
    p.add_argument("--idle", action="store_true",
                   help="do not free-run; only env sessions drive stepping")
    return parser


def cmd_bench(args) -> int:
    if args.duration <= 0:
        print("error: --duration must be > 0", file=sys.stderr)
        return 2
    cfg = _config.load_default_config(args.config)
    params = QuadParams.from_config(cfg)
    rows = []
    for n_envs in args.envs:
        for n_workers in args.workers:
            rows.append(_vecenv.benchmark(n_envs, n_workers, dt=args.dt,
                                          method=args.method, duration=args.duration,
                                          seed=args.seed, params=params))
    lines = ["n_envs,n_workers,dt,method,steps_per_second"]
    for r in rows:
        lines.append(f"{r['n_envs']},{r['n_workers']},{r['dt']},{r['method']},"
                     f"{r['steps_per_second']:.1f}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    peak = max(rows, key=lambda r: r["steps_per_second"])
    print(f"peak: {peak['steps_per_second']:.1f} steps/s at "
          f"{peak['n_envs']} envs, {peak['n_workers']} workers", file=sys.stderr)
    return 0


def _hover_actions(spec: TaskSpec, params: QuadParams, n_envs: int) -> np.ndarray:
    if spec.kind is TaskKind.STABILIZE:
        act = np.zeros((n_envs, 4))
        act[:, 0] = params.gravity
        return act
    if spec.kind is TaskKind.MOTOR_FAILURE:
        # best-effort with three rotors: split the hover load
        return np.full((n_envs, 3), params.mass * params.gravity / 3.0)
    return np.full((n_envs, 4), params.hover_thrust())


def cmd_run(args) -> int:
    if args.controller not in CONTROLLERS:
        print(f"error: unknown controller {args.controller!r} "
              f"(expected one of: {', '.join(CONTROLLERS)})", file=sys.stderr)
        return 2
    if args.episodes < 0:
        print("error: --episodes must be >= 0", file=sys.stderr)
        return 2
    cfg = _config.load_default_config(args.config)
    spec = TaskSpec.from_config({**cfg, "task": args.task, "dt": repr(args.dt)})
    params = QuadParams.from_config(cfg)
    sampler = None
    if args.hover_init:
        sampler = InitialStateSampler.fixed(spec.p_target)
    sim_cfg = VecSimConfig.from_config(
        cfg, n_envs=args.envs, dt=args.dt, method=args.method,
        n_workers=args.workers, base_seed=args.seed, task=spec, params=params,
        sampler=sampler)
    sim = VecSim(sim_cfg)
    rng = np.random.default_rng(args.seed)
    lo, hi = action_bounds(spec, params)

    def controller_actions(step_idx: int) -> np.ndarray:
        if args.controller == "hover":
            return _hover_actions(spec, params, args.envs)
        if args.controller == "random":
            return rng.uniform(lo, hi, (args.envs, spec.act_dim))
        line = sys.stdin.readline()
        if not line:
            raise EOFError("external controller: stdin closed mid-episode")
        vals = np.array([float(v) for v in line.split()], dtype=np.float64)
        if vals.size != args.envs * spec.act_dim:
            raise ValueError(f"external controller: expected {args.envs * spec.act_dim} "
                             f"values, got {vals.size}")
        return vals.reshape(args.envs, spec.act_dim)

    for episode in range(args.episodes):
        sim.reset()
        ep_return = 0.0
        reason = "timeout"
        steps = 0
        for step_idx in range(spec.max_steps):
            result = sim.step_actions(controller_actions(step_idx))
            ep_return += float(result.rewards[0])
            steps += 1
            if args.trace:
                print(f"step={steps} reward={float(result.rewards[0])!r}")
            if result.done[0]:
                reason = result.infos[0]["termination"]
                break
        print(f"episode={episode} return={ep_return!r} reason={reason} steps={steps}")
    return 0


def cmd_world(args) -> int:
    lo, hi = args.bounds
    cloud = _world.generate_forest((lo, hi), args.resolution, args.density, args.seed)
    n_bytes = _world.export_ply(cloud, args.out)
    print(f"wrote {len(cloud)} points ({n_bytes} bytes) to {args.out}")
    return 0


def cmd_plan(args) -> int:
    cloud = _world.import_ply(args.cloud, resolution=args.resolution)
    query = _world.PathQuery(start=args.start, goal=args.goal,
                             robot_radius=args.radius, time_budget=args.budget)
    t0 = time.perf_counter()
    path = _world.plan_path(cloud, query, seed=args.seed)
    elapsed = time.perf_counter() - t0
    if path is None:
        print(f"no path found within {args.budget} s budget "
              f"(searched {elapsed:.3f} s)", file=sys.stderr)
        return 1
    print(f"path with {len(path)} vertices, length {_world.path_length(path):.3f} m, "
          f"solved in {elapsed:.3f} s")
    for p in path:
        print(f"{p[0]!r} {p[1]!r} {p[2]!r}")
    return 0


def cmd_serve(args) -> int:
    address = args.bridge or os.environ.get(_bridge.ENV_BRIDGE) or "127.0.0.1:7400"
    cfg = _config.load_default_config(args.config)
    sim_cfg = VecSimConfig.from_config(cfg, n_envs=args.envs, dt=args.dt,
                                       n_workers=args.workers, base_seed=args.seed)
    world_cloud = None
    if args.world_ply:
        world_cloud = _world.import_ply(args.world_ply)
    elif args.world_seed is not None:
        world_cloud = _world.generate_forest(
            (np.zeros(3), np.array([50.0, 50.0, 10.0])), 0.1, 0.2, args.world_seed)
    server = _bridge.serve(address, sim_config=sim_cfg, world=world_cloud)
    print(f"bridge listening on {server.address}", flush=True)

    stop = {"flag": False}

    def _sigint(_sig, _frm):
        stop["flag"] = True

    signal.signal(signal.SIGINT, _sigint)
    signal.signal(signal.SIGTERM, _sigint)
    try:
        if args.idle:
            while not stop["flag"]:
                time.sleep(0.05)
        else:
            server.sim = VecSim(sim_cfg)
            server.sim.reset(InitialStateSampler.fixed())
            sim = None
            hover = None
            next_tick = time.monotonic()
            while not stop["flag"]:
                if sim is not server.sim:  # a Configure request swapped the sim
                    sim = server.sim
                    hover = np.tile(
                        np.full(4, sim.config.params_list()[0].hover_thrust()),
                        (sim.n_envs, 1))
                    next_tick = time.monotonic()
                result = sim.step_thrusts(hover)
                server.publish_batch(result)
                if args.realtime:
                    next_tick += sim.config.dt
                    delay = next_tick - time.monotonic()
                    if delay > 0:
                        time.sleep(delay)
    finally:
        server.stop()
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "bench": cmd_bench,
        "run": cmd_run,
        "world": cmd_world,
        "plan": cmd_plan,
        "serve": cmd_serve,
    }
    try:
        return handlers[args.subcommand](args)
    except BrokenPipeError:
        return 1
    except (ValueError, OSError, RuntimeError, EOFError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
