#!/usr/bin/env python3
"""Forest planning demo: generate a cloud, export PLY, solve random queries.

    python scripts/plan_forest_demo.py --seed 7 --queries 5 --ply forest.ply
"""

import argparse
import sys
import time

import numpy as np

from flightcore import world as W


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--size", default="50,50,10")
    ap.add_argument("--resolution", type=float, default=0.1)
    ap.add_argument("--density", type=float, default=0.2)
    ap.add_argument("--radius", type=float, default=0.3)
    ap.add_argument("--budget", type=float, default=1.0)
    ap.add_argument("--queries", type=int, default=5)
    ap.add_argument("--ply", default=None, help="also export the cloud here")
    args = ap.parse_args()

    hi = np.array([float(v) for v in args.size.split(",")])
    t0 = time.perf_counter()
    forest = W.generate_forest((np.zeros(3), hi), args.resolution, args.density,
                               seed=args.seed)
    print(f"forest: {len(forest):,} points in {time.perf_counter() - t0:.2f} s")
    if args.ply:
        n = W.export_ply(forest, args.ply)
        print(f"exported {n:,} bytes to {args.ply}")

    rng = np.random.default_rng(args.seed)

    def free_point():
        while True:
            p = rng.uniform(np.full(3, 1.0), hi - 1.0)
            if not W.collides(forest, p, 2.0 * args.radius):
                return p

    solved = 0
    for k in range(args.queries):
        a, b = free_point(), free_point()
        query = W.PathQuery(start=a, goal=b, robot_radius=args.radius,
                            time_budget=args.budget)
        t0 = time.perf_counter()
        path = W.plan_path(forest, query, seed=args.seed + k)
        dt = time.perf_counter() - t0
        if path is None:
            print(f"query {k}: no path within {args.budget} s")
            continue
        solved += 1
        print(f"query {k}: {len(path)} vertices, "
              f"{W.path_length(path):.1f} m in {dt:.3f} s")
    print(f"solved {solved}/{args.queries}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
