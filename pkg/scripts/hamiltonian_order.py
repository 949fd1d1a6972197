"""Finite-difference error of dH_zeta against Omega(X_zeta, X) versus step size.

Straight lines give round-off level errors because H is quadratic along
them; the bent path c + sX + s^2 Y shows the second-order truncation.
"""
from swred.fields import random_bandlimited_configuration, random_gauge, random_tangent
from swred.hk import hamiltonian_check
from swred.spectral import TorusGrid


def main(seeds: int = 5):
    g = TorusGrid(16)
    steps = (1e-2, 1e-3, 1e-4)
    print("seed,path,step,error,error_Q")
    for seed in range(seeds):
        base = random_bandlimited_configuration(seed, 2, 1.0, g)
        X, Y = random_tangent(g, seed + 1, 2), random_tangent(g, seed + 2, 2)
        zeta = random_gauge(g, seed + 3, 2).zeta
        for path, bend in (("line", None), ("bent", Y)):
            rep = hamiltonian_check(base, zeta, X, steps=steps, bend=bend)
            for h, e, eq in zip(steps, rep["errors"], rep["errors_Q"]):
                print(f"{seed},{path},{h:g},{e:.3e},{eq:.3e}")


if __name__ == "__main__":
    main()
