"""Four-dimensional Seiberg-Witten equations on x3, x4-independent data.

The connection is i sum_j A_j dx_j with real A_j, the spinor is a pair
(psi1, psi2) and nabla_j = d_j + i A_j with d_3 = d_4 = 0 on lifted data.
Curvature components are F_jk = i (d_j A_k - d_k A_j).

The reduction identifies

    a   = (A2 + i A1) / 2          (dz-coefficient of the 2D connection)
    phi = A4 - i A3                (dz-coefficient of the Higgs field)

and the residuals correspond with the constant factors in CONVENTIONS.
"""
from __future__ import annotations

from dataclasses import dataclass
from types import MappingProxyType

import numpy as np

from .fields import Configuration, Spinor
from .residuals import residual_curvature, residual_dirac, residual_higgs
from .spectral import TorusGrid, _apply

# 2x2 quaternion units acting on the positive spinor
QUAT_I = np.array([[1j, 0], [0, -1j]])
QUAT_J = np.array([[0, -1], [1, 0]], dtype=complex)
QUAT_K = np.array([[0, -1j], [-1j, 0]])
ID2 = np.eye(2, dtype=complex)

# Frozen correspondence between 2D residual coefficients and 4D residuals:
#   r1  = (i/2) * SW2a          (dz^dzbar coefficient vs dx1^dx2 component)
#   r2  = SW2b + i * SW2c
#   r3b = (1/2) * SW1[0],  r3a = (1/2) * SW1[1]
CONVENTIONS = MappingProxyType({
    "r1_from_sw2a": 0.5j,
    "r2_from_sw2b": 1.0,
    "r2_from_sw2c": 1.0j,
    "r3b_from_sw1_row1": 0.5,
    "r3a_from_sw1_row2": 0.5,
    "dx1dx2_per_dzdzbar": 0.5j,
    # SW2a right-hand side is coupling * eta1; 1.0 matches the reduced curvature equation
    "sw2a_coupling": 1.0,
    "sw2a_coupling_as_printed": 0.5,
})


@dataclass(frozen=True)
class QuaternionRep:
    I: np.ndarray = QUAT_I
    J: np.ndarray = QUAT_J
    K: np.ndarray = QUAT_K

    def gamma(self, j: int) -> np.ndarray:
        """gamma(e_j) for j = 1..4."""
        return {1: ID2, 2: self.I, 3: self.J, 4: self.K}[j]


def clifford_check(rep: QuaternionRep | None = None) -> dict[str, bool]:
    """The nine quaternion identities, compared entrywise without tolerance."""
    q = rep or QuaternionRep()
    I, J, K = q.I, q.J, q.K
    eq = np.array_equal
    return {
        "IJ=K": eq(I @ J, K), "JK=I": eq(J @ K, I), "KI=J": eq(K @ I, J),
        "I^2=-Id": eq(I @ I, -ID2), "J^2=-Id": eq(J @ J, -ID2), "K^2=-Id": eq(K @ K, -ID2),
        "IJ=-JI": eq(I @ J, -(J @ I)), "JK=-KJ": eq(J @ K, -(K @ J)), "KI=-IK": eq(K @ I, -(I @ K)),
    }


@dataclass(frozen=True)
class Config4D:
    grid: TorusGrid
    A1: np.ndarray
    A2: np.ndarray
    A3: np.ndarray
    A4: np.ndarray
    psi: Spinor
    tol: float = 1e-13

    def __post_init__(self):
        for name in ("A1", "A2", "A3", "A4"):
            v = np.asarray(getattr(self, name))
            scale = max(1.0, float(np.max(np.abs(v))))
            if np.iscomplexobj(v) and np.max(np.abs(v.imag)) > self.tol * scale:
                raise ValueError(f"{name} must be real-valued")
            object.__setattr__(self, name, np.real(v).astype(float))

    @property
    def A(self) -> tuple[np.ndarray, ...]:
        return (self.A1, self.A2, self.A3, self.A4)


def lift(c: Configuration) -> Config4D:
    return Config4D(c.grid, A1=2.0 * c.a.imag, A2=2.0 * c.a.real,
                    A3=-c.phi.imag, A4=c.phi.real, psi=c.spinor)


def project_2d(c4: Config4D) -> Configuration:
    return Configuration(c4.grid, a=0.5 * (c4.A2 + 1j * c4.A1), psi1=c4.psi.psi1,
                         psi2=c4.psi.psi2, phi=c4.A4 - 1j * c4.A3)


def _d(grid: TorusGrid, f, j: int):
    """Partial derivative d_j; zero for j = 3, 4 on x3, x4-independent data."""
    if j in (3, 4):
        return np.zeros_like(f, dtype=complex)
    ik = grid._ik
    mult = ik[:, None] * np.ones(grid.n)[None, :] if j == 1 else np.ones(grid.n)[:, None] * ik[None, :]
    return _apply(mult, f)


def curvature_components(c4: Config4D) -> dict[str, np.ndarray]:
    g, A = c4.grid, c4.A

    def F(j, k):
        return 1j * (_d(g, A[k - 1], j) - _d(g, A[j - 1], k))

    return {f"F{j}{k}": F(j, k) for j, k in ((1, 2), (3, 4), (1, 3), (4, 2), (1, 4), (2, 3))}


def sw4d_residuals(c4: Config4D, curvature_coupling: float | None = None,
                   rep: QuaternionRep | None = None) -> dict[str, np.ndarray]:
    """SW1 (two complex rows) and the SW2a-c residuals on the 2D grid."""
    q = rep or QuaternionRep()
    kappa = CONVENTIONS["sw2a_coupling"] if curvature_coupling is None else curvature_coupling
    g = c4.grid
    psi = np.stack([c4.psi.psi1, c4.psi.psi2])

    def nabla(j):
        return np.stack([_d(g, p, j) for p in psi]) + 1j * c4.A[j - 1] * psi

    def act(M, v):
        return np.einsum("ab,b...->a...", M, v)

    sw1 = nabla(1) - act(q.gamma(2), nabla(2)) - act(q.gamma(3), nabla(3)) - act(q.gamma(4), nabla(4))
    P = c4.psi.psi1 * np.conj(c4.psi.psi2)
    eta1 = 1j * (np.abs(c4.psi.psi1) ** 2 - np.abs(c4.psi.psi2) ** 2)
    eta2 = 2j * P.imag
    eta3 = -2j * P.real
    F = curvature_components(c4)
    return {
        "sw1_row1": sw1[0], "sw1_row2": sw1[1],
        "sw2a": F["F12"] + F["F34"] - kappa * eta1,
        "sw2b": F["F13"] + F["F42"] - 0.5 * eta2,
        "sw2c": F["F14"] + F["F23"] - 0.5 * eta3,
    }


def reduction_consistency_check(c: Configuration, curvature_coupling: float | None = None,
                                tol: float = 1e-10) -> dict:
    """Compare the 2D residuals with the 4D residuals of lift(c) via CONVENTIONS.

    Mismatches are relative to max(1, size of the residuals involved).
    """
    R = sw4d_residuals(lift(c), curvature_coupling)
    r1 = residual_curvature(c).f
    r2 = residual_higgs(c).f
    r3a, r3b = residual_dirac(c)
    C = CONVENTIONS
    pairs = {
        "r1": (r1, C["r1_from_sw2a"] * R["sw2a"]),
        "r2": (r2, C["r2_from_sw2b"] * R["sw2b"] + C["r2_from_sw2c"] * R["sw2c"]),
        "r3a": (r3a, C["r3a_from_sw1_row2"] * R["sw1_row2"]),
        "r3b": (r3b, C["r3b_from_sw1_row1"] * R["sw1_row1"]),
    }
    mism = {}
    for k, (lhs, rhs) in pairs.items():
        scale = max(1.0, float(np.max(np.abs(lhs))), float(np.max(np.abs(rhs))))
        mism[k] = float(np.max(np.abs(lhs - rhs))) / scale
    worst = max(mism.values())
    return {
        "mismatch": mism, "max_mismatch": worst, "passed": worst < tol,
        "max_abs_4d": {k: float(np.max(np.abs(v))) for k, v in R.items()},
        "max_abs_2d": {k: float(np.max(np.abs(v[0]))) for k, v in pairs.items()},
        "conventions": {k: (str(v) if isinstance(v, complex) else v) for k, v in C.items()},
    }
