"""Metric, symplectic forms, complex structures and moment maps on T_p C.

Tangent vectors are X = (alpha, beta, gamma) with alpha, gamma purely
imaginary 1-forms. All pairings are integrals of wedge products evaluated
spectrally; none depends on the base point.

Two almost complex structures are provided for the Omega-pairing:
``I3`` acts as (*, diag(i, -i), +*) and pairs with Omega; ``I`` acts as
(*, diag(i, -i), -*) and belongs to the quaternionic triple (I, J, K) with
omega_1 = g(I., .).

The complex form Q is the moment form for mu_Q only in the chart where the
Higgs slot carries *Phi (equivalently -i Phi on the (1,0) part, which is all
that Q sees). ``hyperkahler_chart`` performs that change of coordinates on
tangent vectors.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Configuration, GaugeElement, TangentVector, gauge_pushforward, gauge_vector_field
from .residuals import residual_curvature
from .spectral import (
    TorusGrid,
    TwoForm,
    hodge_star_1,
    integrate,
    integrate_2form,
    partial_zbar,
    wedge,
)

# 2x2 blocks on the spinor part
I2 = np.array([[1j, 0], [0, -1j]])
J2 = np.array([[0, 1], [-1, 0]], dtype=complex)
K2 = np.array([[0, 1j], [1j, 0]])


def _grid(base) -> TorusGrid:
    return base.grid if isinstance(base, Configuration) else base


def _int2(grid, t: TwoForm):
    return integrate_2form(grid, t)


def _int_omega(grid, f):
    """Integral of f * omega."""
    return 2.0 * integrate(grid, f)


def _herm(b1, b2, e1, e2):
    """<beta, eta> = beta1 conj(eta1) + beta2 conj(eta2)."""
    return b1 * np.conj(e1) + b2 * np.conj(e2)


def _spin(M, X: TangentVector):
    b1 = M[0, 0] * X.beta1 + M[0, 1] * X.beta2
    b2 = M[1, 0] * X.beta1 + M[1, 1] * X.beta2
    return b1, b2


# --------------------------------------------------------------------------
# bilinear forms

def metric_g(base, X: TangentVector, Y: TangentVector) -> float:
    grid = _grid(base)
    val = (_int2(grid, wedge(hodge_star_1(X.alpha), Y.alpha))
           + _int_omega(grid, np.real(_herm(X.beta1, X.beta2, Y.beta1, Y.beta2)))
           + _int2(grid, wedge(hodge_star_1(X.gamma), Y.gamma)))
    return float(np.real(val))


def omega_Omega(base, X: TangentVector, Y: TangentVector) -> float:
    grid = _grid(base)
    Ib1, Ib2 = _spin(I2, X)
    val = (-_int2(grid, wedge(X.alpha, Y.alpha))
           + _int_omega(grid, np.real(_herm(Ib1, Ib2, Y.beta1, Y.beta2)))
           - _int2(grid, wedge(X.gamma, Y.gamma)))
    return float(np.real(val))


def omega_1(base, X, Y) -> float:
    grid = _grid(base)
    Ib1, Ib2 = _spin(I2, X)
    val = (-_int2(grid, wedge(X.alpha, Y.alpha))
           + _int_omega(grid, np.real(_herm(Ib1, Ib2, Y.beta1, Y.beta2)))
           + _int2(grid, wedge(X.gamma, Y.gamma)))
    return float(np.real(val))


def omega_2(base, X, Y) -> float:
    grid = _grid(base)
    spin = np.real(X.beta2 * np.conj(Y.beta1) - X.beta1 * np.conj(Y.beta2))
    val = (-_int2(grid, wedge(X.gamma, Y.alpha)) - _int2(grid, wedge(X.alpha, Y.gamma))
           + _int_omega(grid, spin))
    return float(np.real(val))


def omega_3(base, X, Y) -> float:
    grid = _grid(base)
    Kb1, Kb2 = _spin(K2, X)
    val = (-_int2(grid, wedge(hodge_star_1(X.gamma), Y.alpha))
           + _int_omega(grid, np.real(_herm(Kb1, Kb2, Y.beta1, Y.beta2)))
           + _int2(grid, wedge(hodge_star_1(X.alpha), Y.gamma)))
    return float(np.real(val))


def form_Q(base, X, Y) -> complex:
    """Q = -2 int a1^{0,1} ^ g2^{1,0} + 2 int a2^{0,1} ^ g1^{1,0} - int (b1^1 conj b2^2 - conj b1^2 b2^1) omega."""
    grid = _grid(base)
    val = (-2.0 * _int2(grid, wedge(X.alpha.part01, Y.gamma.part10))
           + 2.0 * _int2(grid, wedge(Y.alpha.part01, X.gamma.part10))
           - _int_omega(grid, X.beta1 * np.conj(Y.beta2) - np.conj(X.beta2) * Y.beta1))
    return complex(val)


def omega_forms(base, X, Y) -> dict:
    return {"Omega": omega_Omega(base, X, Y), "w1": omega_1(base, X, Y),
            "w2": omega_2(base, X, Y), "w3": omega_3(base, X, Y), "Q": form_Q(base, X, Y)}


# --------------------------------------------------------------------------
# complex structures

def _star_imag(p):
    """p dz - conj(p) dzbar  ->  *(...) has dz-coefficient -i p."""
    return -1j * p


def apply_structure(which: str, X: TangentVector) -> TangentVector:
    """Apply I3 (pairs with Omega), or I, J, K of the quaternionic triple."""
    if which == "I3":
        b1, b2 = _spin(I2, X)
        return TangentVector(_star_imag(X.p), b1, b2, _star_imag(X.g))
    if which == "I":
        b1, b2 = _spin(I2, X)
        return TangentVector(_star_imag(X.p), b1, b2, -_star_imag(X.g))
    if which == "J":
        b1, b2 = _spin(J2, X)
        return TangentVector(_star_imag(X.g), b1, b2, _star_imag(X.p))
    if which == "K":
        b1, b2 = _spin(K2, X)
        return TangentVector(-X.g, b1, b2, X.p)
    raise ValueError(f"unknown structure {which!r}")


PAIRED_FORM = {"I3": omega_Omega, "I": omega_1, "J": omega_2, "K": omega_3}


def hyperkahler_chart(X: TangentVector) -> TangentVector:
    """Replace the Higgs slot gamma by *gamma."""
    return TangentVector(X.p, X.beta1, X.beta2, _star_imag(X.g))


# --------------------------------------------------------------------------
# moment maps

def moment_mu(c: Configuration) -> TwoForm:
    """F(A) - (i/2)(|psi1|^2 - |psi2|^2) omega; its zero set is the curvature equation."""
    return residual_curvature(c)


def moment_muQ(c: Configuration) -> TwoForm:
    """2 dbar Phi' + <psi1, psi2> omega with Phi' = *Phi; equals -i * residual_higgs."""
    phi_prime = -1j * c.phi
    two_dbar = TwoForm(-2.0 * partial_zbar(c.grid, phi_prime))
    return two_dbar + TwoForm.from_omega(c.psi1 * np.conj(c.psi2))


MUQ_FROM_RESIDUAL_HIGGS = -1j


def hamiltonian(c: Configuration, zeta: np.ndarray) -> float:
    return float(np.real(integrate_2form(c.grid, TwoForm(zeta * moment_mu(c).f))))


def hamiltonian_Q(c: Configuration, zeta: np.ndarray) -> complex:
    return complex(integrate_2form(c.grid, TwoForm(zeta * moment_muQ(c).f)))


def _order(e1: float, e2: float, h1: float, h2: float, floor: float) -> float:
    if e1 <= floor:
        return float("inf")
    return float(np.log(e1 / max(e2, 1e-300)) / np.log(h1 / h2))


def hamiltonian_check(c: Configuration, zeta: np.ndarray, X: TangentVector,
                      steps=(1e-3, 1e-4), roundoff: float = 1e-11,
                      bend: TangentVector | None = None) -> dict:
    """Central differences of H_zeta (and its Q twin) against Omega(X_zeta, X).

    The difference quotients are taken along the path c + s X + s^2 bend,
    whose velocity at s = 0 is X. H is quadratic in the fields, so along a
    straight line (bend = None) central differences are exact up to
    rounding and the order is reported as ``inf`` once the coarse-step
    error sits at the roundoff floor. A nonzero bend makes H a quartic in s
    and exposes the genuine second-order truncation error.
    """
    Xz = gauge_vector_field(zeta, c)
    target = omega_Omega(c, Xz, X)
    target_Q = form_Q(c, Xz, hyperkahler_chart(X))
    scale = max(1.0, abs(target), abs(target_Q))

    def at(s):
        pt = c + X * s
        return pt if bend is None else pt + bend * (s * s)

    errs, errs_Q = [], []
    for h in steps:
        fd = (hamiltonian(at(h), zeta) - hamiltonian(at(-h), zeta)) / (2 * h)
        fdQ = (hamiltonian_Q(at(h), zeta) - hamiltonian_Q(at(-h), zeta)) / (2 * h)
        errs.append(abs(fd - target) / scale)
        errs_Q.append(abs(fdQ - target_Q) / scale)
    h1, h2 = steps[0], steps[-1]
    return {
        "dH": target, "dH_Q": [target_Q.real, target_Q.imag],
        "steps": list(steps), "errors": errs, "errors_Q": errs_Q,
        "order": _order(errs[0], errs[-1], h1, h2, roundoff),
        "order_Q": _order(errs_Q[0], errs_Q[-1], h1, h2, roundoff),
        "max_error": max(errs + errs_Q),
    }


def gauge_invariance_errors(base: Configuration, u: GaugeElement, X, Y) -> dict:
    """|F(u_* X, u_* Y) - F(X, Y)| for g, Omega, omega_i and Q."""
    uX, uY = gauge_pushforward(u, X), gauge_pushforward(u, Y)
    out = {"g": abs(metric_g(base, uX, uY) - metric_g(base, X, Y))}
    a, b = omega_forms(base, X, Y), omega_forms(base, uX, uY)
    for k in a:
        out[k] = abs(b[k] - a[k])
    return out


@dataclass
class OrthogonalityReport:
    gauge_overlap: float
    residual_IX: dict
    norm_X: float
    orthogonal: bool
    in_kernel: bool
    structure: str

    def to_dict(self):
        return dict(self.__dict__)


def orthogonality_lemma_check(c: Configuration, X: TangentVector, zeta_basis,
                              structure: str = "I3", t: float = 1.0,
                              orth_tol: float = 1e-9, ker_tol: float = 1e-8) -> OrthogonalityReport:
    """Gauge-orthogonality of X versus membership of (structure) X in the linearised kernel.

    ``residual_IX`` holds the L2 norm of each linearised residual component
    of the rotated vector, relative to ||X||_g.
    """
    from .linear import linearized_residual
    from .spectral import l2_norm

    normX = np.sqrt(max(metric_g(c, X, X), 0.0))
    if normX == 0.0:
        return OrthogonalityReport(0.0, {k: 0.0 for k in ("r1", "r2", "r3a", "r3b")}, 0.0,
                                   True, True, structure)
    overlap = max(abs(metric_g(c, X, gauge_vector_field(z, c))) for z in zeta_basis)
    IX = apply_structure(structure, X)
    lin = linearized_residual(c, IX, t)
    res = {k: l2_norm(c.grid, v) / normX for k, v in lin.items()}
    return OrthogonalityReport(
        gauge_overlap=overlap / normX, residual_IX=res, norm_X=float(normX),
        orthogonal=overlap <= orth_tol * normX,
        in_kernel=max(res.values()) <= ker_tol, structure=structure)


# --------------------------------------------------------------------------
# identity suite

def _rel(err: float, scale: float) -> float:
    return float(err) / max(scale, 1e-300)


def _vec_err(A: TangentVector, B: TangentVector) -> float:
    return (A - B).max_abs() / max(1.0, A.max_abs(), B.max_abs())


def identity_errors(base: Configuration, X: TangentVector, Y: TangentVector,
                    u: GaugeElement, fault: str | None = None) -> dict[str, float]:
    """Relative errors of the pointwise hyperkahler identities for one triple.

    ``fault`` injects a deliberate defect for mutation testing:
    ``"w2_sign"`` flips the sign of omega_2 and ``"K_sign"`` flips K.
    """
    def S(which, V):
        out = apply_structure(which, V)
        return -out if (fault == "K_sign" and which == "K") else out

    def w(name, A, B):
        val = PAIRED_FORM[name](base, A, B)
        return -val if (fault == "w2_sign" and name == "J") else val

    nX = np.sqrt(metric_g(base, X, X))
    nY = np.sqrt(metric_g(base, Y, Y))
    sc = nX * nY
    out = {
        "IJ=K": _vec_err(S("I", S("J", X)), S("K", X)),
        "JK=I": _vec_err(S("J", S("K", X)), S("I", X)),
        "KI=J": _vec_err(S("K", S("I", X)), S("J", X)),
    }
    for name in ("I", "J", "K", "I3"):
        out[f"{name}^2=-Id"] = _vec_err(S(name, S(name, X)), -X)
    for name in ("I3", "I", "J", "K"):
        label = {"I3": "Omega", "I": "omega_1", "J": "omega_2", "K": "omega_3"}[name]
        out[f"{label}=g(S.,.)"] = _rel(abs(w(name, X, Y) - metric_g(base, S(name, X), Y)), sc)
        out[f"{label} antisymmetric"] = _rel(abs(w(name, X, Y) + w(name, Y, X)), sc)
        out[f"{name} isometry"] = _rel(abs(metric_g(base, S(name, X), S(name, Y))
                                           - metric_g(base, X, Y)), sc)
    Q = form_Q(base, X, Y)
    out["omega_2+i omega_3=Q"] = _rel(abs(w("J", X, Y) + 1j * w("K", X, Y) - Q), sc)
    inv = gauge_invariance_errors(base, u, X, Y)
    for k, v in inv.items():
        out[f"gauge invariance {k}"] = _rel(v, sc)
    return out


def identity_suite(samples: int = 100, seed: int = 0, grid: TorusGrid | None = None,
                   max_mode: int = 3, fault: str | None = None) -> dict:
    """Max relative error of every identity over ``samples`` random (base, X, Y, u)."""
    from .fields import random_bandlimited_configuration, random_gauge, random_tangent

    if samples < 1:
        raise ValueError("samples must be at least 1")
    grid = grid or TorusGrid(16)
    worst: dict[str, float] = {}
    for i in range(samples):
        s = seed * 100003 + 4 * i
        base = random_bandlimited_configuration(s, max_mode, 1.0, grid)
        X = random_tangent(grid, s + 1, max_mode)
        Y = random_tangent(grid, s + 2, max_mode)
        u = random_gauge(grid, s + 3, max_mode)
        for k, v in identity_errors(base, X, Y, u, fault).items():
            worst[k] = max(worst.get(k, 0.0), v)
    return worst


# --------------------------------------------------------------------------
# quaternionic invariance of linearised solution spaces

def _structure_matrix(layout, which: str) -> np.ndarray:
    from .linear import tangent_from_fields, tangent_to_fields

    X = tangent_from_fields(layout.unpack(np.eye(layout.dim)))
    return layout.pack(tangent_to_fields(apply_structure(which, X))).T


def _chart_matrix(layout) -> np.ndarray:
    """Coordinates of X from coordinates of its chart image (g -> i g)."""
    from .linear import tangent_from_fields, tangent_to_fields

    Xt = tangent_from_fields(layout.unpack(np.eye(layout.dim)))
    X = TangentVector(Xt.p, Xt.beta1, Xt.beta2, 1j * Xt.g)
    return layout.pack(tangent_to_fields(X)).T


@dataclass
class InvarianceReport:
    subsystem: str
    structures: tuple
    kernel_dim: int
    leakage: dict
    gap_ratio: float

    @property
    def invariant(self) -> bool:
        return max(self.leakage.values()) <= 1e-8

    def to_dict(self):
        return {"subsystem": self.subsystem, "structures": list(self.structures),
                "kernel_dim": self.kernel_dim, "leakage": self.leakage,
                "gap_ratio": self.gap_ratio, "invariant": self.invariant}


def kernel_invariance(base: Configuration, subsystem: str = "moment", max_mode: int = 2,
                      structures=("I", "J", "K"), t: float = 1.0) -> InvarianceReport:
    """Is the gauge-fixed linearised solution space preserved by the structures?

    ``subsystem="moment"`` keeps only the curvature and Higgs rows (the two
    moment maps, in the hyperkahler chart) together with the Coulomb rows;
    its solution space is the orthogonal complement of the quaternionic span
    of the gauge directions and so must be invariant. ``subsystem="full"``
    uses the whole gauge-fixed linearisation, in the original chart.
    ``leakage[S]`` is max ||M S v|| over an orthonormal kernel basis v of M.
    """
    from .linear import _row_index, assemble, kernel_basis, null_count

    if subsystem not in ("moment", "full"):
        raise ValueError(f"unknown subsystem {subsystem!r}")
    op = assemble(base, max_mode=max_mode, t=t, with_gauge_fix=True)
    M = op.matrix
    if subsystem == "moment":
        rows = _row_index(op, True)
        M = M[np.concatenate([rows["r1"], rows["r2"], rows["gauge"]])] @ _chart_matrix(op.domain)
    N = kernel_basis(M)
    _, gap, _ = null_count(M)
    scale = max(1.0, float(np.linalg.norm(M, 2)))
    leak = {}
    for S in structures:
        SN = _structure_matrix(op.domain, S) @ N
        leak[S] = float(np.max(np.linalg.norm(M @ SN, axis=0), initial=0.0)) / scale
    return InvarianceReport(subsystem, tuple(structures), N.shape[1], leak, gap)
