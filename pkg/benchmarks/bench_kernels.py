"""Compare the compiled cell-membership kernels against the numpy fallback.

The backend is chosen at import time, so each side runs in its own
subprocess (CELLTRAFFIC_PURE=1 forces the fallback). Workloads go through
the public association API, i.e. they time what the calibration and KPI
loops actually call.

Usage: python3 benchmarks/bench_kernels.py [--points N] [--repeats R]
"""

import argparse
import json
import os
import subprocess
import sys
import time


def _workloads(n_points):
    import numpy as np

    from celltraffic.association import (
        LayoutSpec,
        nearest_boundary_points,
        potentials,
        serving_stations,
    )
    from celltraffic.pointgen import substream

    layout = LayoutSpec().sample(substream(0, "bench"))
    gen = substream(0, "bench", "points")
    pts = gen.uniform(0.0, 1000.0, (n_points, 2))
    few = pts[: max(200, n_points // 10)]
    return {
        "serving_stations": lambda: serving_stations(layout, pts),
        "potentials": lambda: potentials(layout, pts),
        "nearest_boundary_points": lambda: nearest_boundary_points(layout, few),
    }


def _best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def run_inner(n_points, repeats):
    from celltraffic._kernels import BACKEND

    results = {"backend": BACKEND}
    for name, fn in _workloads(n_points).items():
        fn()  # warm up
        results[name] = _best_of(fn, repeats)
    print(json.dumps(results))


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=20_000)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--inner", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()

    if args.inner:
        run_inner(args.points, args.repeats)
        return

    rows = {}
    for label, force_pure in (("compiled", "0"), ("pure", "1")):
        env = dict(os.environ, CELLTRAFFIC_PURE=force_pure)
        out = subprocess.run(
            [sys.executable, __file__, "--inner", "--points", str(args.points),
             "--repeats", str(args.repeats)],
            capture_output=True, text=True, env=env, check=True,
        )
        rows[label] = json.loads(out.stdout)
        if rows[label]["backend"] != label:
            print(f"note: requested {label} backend, got "
                  f"{rows[label]['backend']} (extension not built?)")

    names = [k for k in rows["compiled"] if k != "backend"]
    width = max(len(n) for n in names)
    print(f"{args.points} points, best of {args.repeats}")
    print(f"{'kernel':<{width}}  {'compiled':>10}  {'pure':>10}  {'speedup':>7}")
    for name in names:
        c, p = rows["compiled"][name], rows["pure"][name]
        print(f"{name:<{width}}  {c * 1e3:>8.2f}ms  {p * 1e3:>8.2f}ms  "
              f"{p / c:>6.1f}x")


if __name__ == "__main__":
    main()
