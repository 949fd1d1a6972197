"""Gauss-Newton recovery of the explicit solution from noisy starts.

Usage: python3 scripts/recovery_experiment.py [--seeds 5] [--amplitudes 1e-3 1e-2 5e-2]
"""
import argparse
import time

from swred.fields import explicit_torus_solution, random_tangent
from swred.solver import (
    MaxItersExceeded,
    SolveOptions,
    SpinorCollapse,
    StalledLineSearch,
    explicit_family_distance,
    solve,
)
from swred.spectral import TorusGrid


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=32)
    ap.add_argument("--max-mode", type=int, default=4)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--amplitudes", type=float, nargs="+", default=[1e-3, 1e-2, 5e-2])
    args = ap.parse_args()
    g = TorusGrid(args.n)
    ref = explicit_torus_solution(1.0, 0.0, g)
    print("amplitude,seed,status,iterations,energy,family_distance,seconds")
    for amp in args.amplitudes:
        for seed in range(args.seeds):
            init = ref + random_tangent(g, seed, args.max_mode, amp)
            t0 = time.perf_counter()
            try:
                c, rep = solve(init, SolveOptions(max_mode=args.max_mode), reference=ref)
                dist = explicit_family_distance(c)["distance"]
                status = "converged"
            except (MaxItersExceeded, StalledLineSearch, SpinorCollapse) as exc:
                rep, dist, status = exc.report, float("nan"), type(exc).__name__
            print(f"{amp:g},{seed},{status},{rep.iterations},{rep.energy:.3e},{dist:.3e},"
                  f"{time.perf_counter() - t0:.2f}")


if __name__ == "__main__":
    main()
