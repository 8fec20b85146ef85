#!/usr/bin/env python3
"""Throughput sweep over env and worker counts, written as CSV.

Reproduces the dynamics-speed study style: raw stepping with uniformly
random rotor thrusts, one row per (n_envs, n_workers) pair.

    python scripts/bench_sweep.py --out bench.csv --duration 2.0
"""

import argparse
import sys

from flightcore.vecenv import benchmark


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--envs", default="1,10,50,100,150,300")
    ap.add_argument("--workers", default="1,2,4,8")
    ap.add_argument("--duration", type=float, default=1.0)
    ap.add_argument("--dt", type=float, default=0.02)
    ap.add_argument("--method", default="rk4", choices=["euler", "rk4"])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default=None)
    args = ap.parse_args()

    rows = ["n_envs,n_workers,dt,method,steps_per_second"]
    for n_envs in (int(v) for v in args.envs.split(",")):
        for n_workers in (int(v) for v in args.workers.split(",")):
            r = benchmark(n_envs, n_workers, dt=args.dt, method=args.method,
                          duration=args.duration, seed=args.seed)
            rows.append(f"{r['n_envs']},{r['n_workers']},{r['dt']},{r['method']},"
                        f"{r['steps_per_second']:.1f}")
            print(rows[-1], file=sys.stderr)
    text = "\n".join(rows) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        print(text, end="")
    return 0


if __name__ == "__main__":
    sys.exit(main())
