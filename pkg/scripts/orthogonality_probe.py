"""Apply each complex structure to the kernel at the explicit solution and
report which linearised rows stop vanishing.

Also contrasts the full system with the moment-map rows alone.
"""
import numpy as np

from swred.fields import explicit_torus_solution
from swred.hk import kernel_invariance, orthogonality_lemma_check
from swred.linear import assemble, kernel_basis
from swred.spectral import TorusGrid


def main(n: int = 16, K: int = 4):
    g = TorusGrid(n)
    c = explicit_torus_solution(1.0, 0.0, g)
    op = assemble(c, max_mode=K)
    N = kernel_basis(op.matrix)
    zetas = [1j * np.real(g.plane_wave(m, k) * ph) for m in range(-K, K + 1)
             for k in range(-K, K + 1) for ph in (1, 1j)]
    print(f"kernel dimension {N.shape[1]}")
    for j in range(N.shape[1]):
        X = op.tangent(N[:, j])
        for s in ("I3", "I", "J", "K"):
            r = orthogonality_lemma_check(c, X, zetas, s)
            rows = ", ".join(f"{k}={v:.2e}" for k, v in r.residual_IX.items())
            print(f"vector {j} structure {s:2s}: orthogonal={r.orthogonal} in_kernel={r.in_kernel} [{rows}]")
    for sub in ("moment", "full"):
        rep = kernel_invariance(c, sub, 2, ("I3", "I", "J", "K"))
        print(sub, rep.to_dict())


if __name__ == "__main__":
    main()
