"""Scan the gauge-fixed index at the explicit torus solution over n, max_mode and t.

Usage: python3 scripts/index_scan.py [--t 0 0.25 0.5 0.75 1]
Prints one CSV row per (n, max_mode, t) plus the t = 0 block split.
"""
import argparse

from swred.fields import explicit_torus_solution
from swred.linear import assemble, block_diagnostics, kernel_index
from swred.spectral import TorusGrid


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--t", type=float, nargs="+", default=[0.0, 0.25, 0.5, 0.75, 1.0])
    args = ap.parse_args()
    print("n,max_mode,t,kernel,cokernel,index,gap_ratio")
    for n, K in ((8, 2), (16, 2), (16, 3), (16, 4)):
        c = explicit_torus_solution(1.0, 0.0, TorusGrid(n))
        for t in args.t:
            rep = kernel_index(assemble(c, max_mode=K, t=t), strict=False)
            print(f"{n},{K},{t:g},{rep.kernel_dim},{rep.cokernel_dim},{rep.index},{rep.gap_ratio:.3e}")
    diag = block_diagnostics(assemble(explicit_torus_solution(1.0, 0.0, TorusGrid(16)), 3, t=0.0))
    print("t=0 blocks:", {k: diag[k] for k in ("a", "b", "c")})
    print("h1(a) + h1(b) + index(c) =", diag["h1_a_plus_h1_b_plus_index_c"],
          " total index =", diag["total_index"])


if __name__ == "__main__":
    main()
