"""Residuals of the reduced Seiberg-Witten system on the flat torus.

With omega = i dz^dzbar and <psi1, psi2> = psi1 conj(psi2):

    curvature   F(A) = (i/2)(|psi1|^2 - |psi2|^2) omega
    Higgs       2 dbar Phi = -i <psi1, psi2> omega
    Dirac (a)   d_zbar psi2 - conj(a) psi2 - (1/2) conj(phi) psi1 = 0     (dzbar row)
    Dirac (b)   d_z psi1 + a psi1 - (1/2) phi psi2 = 0                     (dz row)

Two-form residuals are stored as dz^dzbar coefficients; dbar(phi dz) =
phi_zbar dzbar^dz = -phi_zbar dz^dzbar. With these signs the explicit
torus family with |c1| = sqrt(2) c2 is an exact zero.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import Configuration, Spinor
from .spectral import (
    OneForm,
    TorusGrid,
    TwoForm,
    exterior_d,
    green_invert,
    integrate,
    l2_norm,
    partial_z,
    partial_zbar,
    NonZeroMean,
)


class ObstructedSource(ValueError):
    """The pairing <psi1, psi2> has nonzero mean, so the Higgs equation has no solution."""


class NotVortexConfiguration(ValueError):
    pass


def curvature(c: Configuration) -> TwoForm:
    return exterior_d(c.grid, c.connection_form)


def residual_curvature(c: Configuration) -> TwoForm:
    source = TwoForm.from_omega(0.5j * (np.abs(c.psi1) ** 2 - np.abs(c.psi2) ** 2))
    return curvature(c) - source


def residual_higgs(c: Configuration) -> TwoForm:
    two_dbar_phi = TwoForm(-2.0 * partial_zbar(c.grid, c.phi))
    return two_dbar_phi + TwoForm.from_omega(1j * c.psi1 * np.conj(c.psi2))


def residual_dirac(c: Configuration) -> tuple[np.ndarray, np.ndarray]:
    """(r3a, r3b): the dzbar and dz coefficients of the Dirac rows."""
    grid = c.grid
    r3a = partial_zbar(grid, c.psi2) - np.conj(c.a) * c.psi2 - 0.5 * np.conj(c.phi) * c.psi1
    r3b = partial_z(grid, c.psi1) + c.a * c.psi1 - 0.5 * c.phi * c.psi2
    return r3a, r3b


@dataclass
class ResidualBundle:
    grid: TorusGrid
    r1: TwoForm
    r2: TwoForm
    r3a: np.ndarray
    r3b: np.ndarray

    def components(self) -> dict[str, np.ndarray]:
        return {"r1": self.r1.f, "r2": self.r2.f, "r3a": self.r3a, "r3b": self.r3b}

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(v))) for v in self.components().values())

    def energy(self, weights=(1.0, 1.0, 1.0)) -> float:
        w1, w2, w3 = weights
        l2 = {k: l2_norm(self.grid, v) ** 2 for k, v in self.components().items()}
        return w1 * l2["r1"] + w2 * l2["r2"] + w3 * (l2["r3a"] + l2["r3b"])

    def report(self, weights=(1.0, 1.0, 1.0)) -> dict:
        g = self.grid
        return {
            "r1_max": float(np.max(np.abs(self.r1.f))),
            "r1_l2": l2_norm(g, self.r1.f),
            "r2_max": float(np.max(np.abs(self.r2.f))),
            "r2_l2": l2_norm(g, self.r2.f),
            "r3a_l2": l2_norm(g, self.r3a),
            "r3b_l2": l2_norm(g, self.r3b),
            "energy": self.energy(weights),
        }


def residuals(c: Configuration) -> ResidualBundle:
    r3a, r3b = residual_dirac(c)
    return ResidualBundle(c.grid, residual_curvature(c), residual_higgs(c), r3a, r3b)


def energy(c: Configuration, weights=(1.0, 1.0, 1.0)) -> float:
    """Sum of squared L2 norms of the residuals (coefficients integrated over dx1 dx2)."""
    return residuals(c).energy(weights)


def construct_higgs_from_spinor(s: Spinor, grid: TorusGrid, tol: float = 1e-10) -> np.ndarray:
    """Solve the Higgs equation for phi given the spinor, via the Green operator.

    With phi = d_z w, the Higgs equation reads laplacian(w) = -2 psi1 conj(psi2). Returns
    the zero-mean solution phi. The source must be resolved on the grid
    (no Nyquist content) for the result to be exact.
    """
    source = s.psi1 * np.conj(s.psi2)
    try:
        w = green_invert(grid, -2.0 * source, tol=tol)
    except NonZeroMean as exc:
        raise ObstructedSource(
            f"<psi1, psi2> has mean {np.mean(source):.3e}; the Higgs equation is not solvable") from exc
    return partial_z(grid, w)


def vortex_residuals(c: Configuration, tol: float = 1e-13) -> ResidualBundle:
    """Residuals of the vortex specialisation: Phi = 0 and one spinor component zero."""
    if np.max(np.abs(c.phi)) > tol:
        raise NotVortexConfiguration("Higgs field is not zero")
    if np.max(np.abs(c.psi1)) > tol and np.max(np.abs(c.psi2)) > tol:
        raise NotVortexConfiguration("both spinor components are nonzero")
    return residuals(c)


def chern_integral(c: Configuration) -> complex:
    """Integral of F(A); zero for the trivial bundle."""
    F = curvature(c)
    return complex(-2j * integrate(c.grid, F.f))
