"""Configurations (A, Psi, Phi), tangent vectors and the U(1) gauge action.

The line bundle is trivial with Hermitian metric H = 1, so every field is a
complex function on the torus:

* connection: ``a``, the dz-coefficient; the unitary connection form is
  a dz - conj(a) dzbar (purely imaginary by construction),
* spinor: ``psi1``, ``psi2``,
* Higgs field: ``phi`` with Phi = phi dz - conj(phi) dzbar.
"""
from __future__ import annotations

import io
import json
import zipfile
from dataclasses import dataclass, field

import numpy as np

from .spectral import (
    OneForm,
    TorusGrid,
    TWO_PI,
    dump_field_csv,
    load_field_csv,
    partial_z,
)

FIELD_NAMES = ("a", "psi1", "psi2", "phi")


class NonPeriodicParameter(ValueError):
    """The explicit solution is not periodic on the requested grid."""


@dataclass(frozen=True)
class Spinor:
    psi1: np.ndarray
    psi2: np.ndarray


@dataclass(frozen=True)
class Configuration:
    grid: TorusGrid
    a: np.ndarray
    psi1: np.ndarray
    psi2: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        for name in FIELD_NAMES:
            v = np.asarray(getattr(self, name), dtype=complex)
            if v.shape != self.grid.shape:
                raise ValueError(f"{name} has shape {v.shape}, grid is {self.grid.shape}")
            object.__setattr__(self, name, v)

    @property
    def spinor(self) -> Spinor:
        return Spinor(self.psi1, self.psi2)

    @property
    def connection_form(self) -> OneForm:
        return OneForm.imaginary(self.a)

    @property
    def higgs_form(self) -> OneForm:
        return OneForm.imaginary(self.phi)

    def replace(self, **kw) -> "Configuration":
        d = {name: getattr(self, name) for name in FIELD_NAMES}
        d.update(kw)
        return Configuration(self.grid, **d)

    def __add__(self, X: "TangentVector") -> "Configuration":
        return self.replace(a=self.a + X.p, psi1=self.psi1 + X.beta1,
                            psi2=self.psi2 + X.beta2, phi=self.phi + X.g)

    def displaced(self, X: "TangentVector", t: float) -> "Configuration":
        return self + X * t

    def spinor_norm(self) -> float:
        h2 = self.grid.spacing**2
        return float(np.sqrt(h2 * np.sum(np.abs(self.psi1) ** 2 + np.abs(self.psi2) ** 2)))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "Configuration":
        z = grid.zeros()
        return cls(grid, z, z, z, z)


@dataclass(frozen=True)
class TangentVector:
    """(alpha, beta, gamma) with alpha = p dz - conj(p) dzbar, gamma = g dz - conj(g) dzbar."""

    p: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    g: np.ndarray

    @property
    def alpha(self) -> OneForm:
        return OneForm.imaginary(self.p)

    @property
    def gamma(self) -> OneForm:
        return OneForm.imaginary(self.g)

    def __add__(self, other: "TangentVector") -> "TangentVector":
        return TangentVector(self.p + other.p, self.beta1 + other.beta1,
                             self.beta2 + other.beta2, self.g + other.g)

    def __sub__(self, other: "TangentVector") -> "TangentVector":
        return self + other * -1.0

    def __mul__(self, s: float) -> "TangentVector":
        return TangentVector(s * self.p, s * self.beta1, s * self.beta2, s * self.g)

    __rmul__ = __mul__

    def __neg__(self) -> "TangentVector":
        return self * -1.0

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(v))) for v in (self.p, self.beta1, self.beta2, self.g))

    @classmethod
    def zeros(cls, grid: TorusGrid) -> "TangentVector":
        z = grid.zeros()
        return cls(z, z, z, z)


@dataclass(frozen=True)
class GaugeElement:
    """u = exp(zeta) with zeta purely imaginary."""

    zeta: np.ndarray
    tol: float = field(default=1e-13, repr=False)

    def __post_init__(self):
        zeta = np.asarray(self.zeta, dtype=complex)
        scale = max(1.0, float(np.max(np.abs(zeta))))
        if np.max(np.abs(zeta.real)) > self.tol * scale:
            raise ValueError("gauge parameter zeta must be purely imaginary")
        object.__setattr__(self, "zeta", 1j * zeta.imag)

    @property
    def u(self) -> np.ndarray:
        return np.exp(self.zeta)

    def __mul__(self, other: "GaugeElement") -> "GaugeElement":
        return GaugeElement(self.zeta + other.zeta)

    def inverse(self) -> "GaugeElement":
        return GaugeElement(-self.zeta)


def gauge_apply(u: GaugeElement, c: Configuration) -> Configuration:
    """(A, Psi, Phi) -> (A + u^-1 du, u^-1 Psi, Phi)."""
    inv = np.exp(-u.zeta)
    return c.replace(a=c.a + partial_z(c.grid, u.zeta), psi1=inv * c.psi1, psi2=inv * c.psi2)


def gauge_pushforward(u: GaugeElement, X: TangentVector) -> TangentVector:
    """u_* = (Id, u^-1, Id) on tangent vectors."""
    inv = np.exp(-u.zeta)
    return TangentVector(X.p, inv * X.beta1, inv * X.beta2, X.g)


def gauge_vector_field(zeta: np.ndarray, c: Configuration) -> TangentVector:
    """X_zeta = (d zeta, -zeta Psi, 0)."""
    return TangentVector(partial_z(c.grid, zeta), -zeta * c.psi1, -zeta * c.psi2,
                         np.zeros_like(c.phi))


def explicit_torus_solution(c2: float = 1.0, phase: float = 0.0,
                            grid: TorusGrid | None = None) -> Configuration:
    """The genus-one solution with Phi != 0.

    psi1 = c1, psi2 = c1 exp(i c2 (z + zbar)), phi = -i c2 exp(-i c2 (z + zbar)),
    a = -i c2 / 2, with c1 = sqrt(2) c2 exp(i phase).
    """
    grid = grid or TorusGrid()
    winding = 2.0 * c2 * grid.side / TWO_PI
    if not c2 > 0 or abs(winding - round(winding)) > 1e-12:
        raise NonPeriodicParameter(
            f"c2={c2} gives x1-frequency {winding:.6g} per period; need a positive integer")
    x1, _ = grid.coords
    c1 = np.sqrt(2.0) * c2 * np.exp(1j * phase)
    carrier = np.exp(2j * c2 * x1)  # exp(i c2 (z + zbar))
    ones = np.ones(grid.shape, dtype=complex)
    return Configuration(grid, a=-0.5j * c2 * ones, psi1=c1 * ones, psi2=c1 * carrier,
                         phi=-1j * c2 * np.conj(carrier))


def random_bandlimited_field(grid: TorusGrid, rng: np.random.Generator, max_mode: int,
                             amplitude: float = 1.0) -> np.ndarray:
    """Random complex field with Fourier support |m|, |k| <= max_mode."""
    if max_mode > grid.n // 4:
        raise ValueError(f"max_mode={max_mode} exceeds n/4={grid.n // 4}")
    size = 2 * max_mode + 1
    coef = (rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))) / size
    out = np.zeros(grid.shape, dtype=complex)
    idx = np.arange(-max_mode, max_mode + 1) % grid.n
    out[idx[:, None], idx[None, :]] = coef
    return amplitude * np.fft.ifft2(out) * grid.n**2


def random_bandlimited_configuration(seed: int, max_mode: int = 2, amplitude: float = 1.0,
                                     grid: TorusGrid | None = None) -> Configuration:
    grid = grid or TorusGrid()
    rng = np.random.default_rng(seed)
    vals = {name: random_bandlimited_field(grid, rng, max_mode, amplitude) for name in FIELD_NAMES}
    return Configuration(grid, **vals)


def random_tangent(grid: TorusGrid, seed: int, max_mode: int = 2,
                   amplitude: float = 1.0) -> TangentVector:
    rng = np.random.default_rng(seed)
    p, b1, b2, g = (random_bandlimited_field(grid, rng, max_mode, amplitude) for _ in range(4))
    return TangentVector(p, b1, b2, g)


def random_gauge(grid: TorusGrid, seed: int, max_mode: int = 2,
                 amplitude: float = 1.0) -> GaugeElement:
    rng = np.random.default_rng(seed)
    f = random_bandlimited_field(grid, rng, max_mode, amplitude)
    return GaugeElement(1j * f.real)


def save_configuration(path, c: Configuration, **metadata) -> None:
    """Write a zip container: manifest.json plus one CSV dump per field."""
    manifest = {"n": c.grid.n, "side": c.grid.side, "fields": list(FIELD_NAMES)}
    manifest.update(metadata)
    with zipfile.ZipFile(path, "w", compression=zipfile.ZIP_DEFLATED) as zf:
        zf.writestr("manifest.json", json.dumps(manifest, indent=2, sort_keys=True))
        for name in FIELD_NAMES:
            zf.writestr(f"{name}.csv", dump_field_csv(c.grid, getattr(c, name), name))


def load_configuration(path) -> tuple[Configuration, dict]:
    with zipfile.ZipFile(path) as zf:
        manifest = json.loads(zf.read("manifest.json"))
        grid = TorusGrid(int(manifest["n"]), float(manifest["side"]))
        vals = {}
        for name in FIELD_NAMES:
            label, v = load_field_csv(io.TextIOWrapper(zf.open(f"{name}.csv")).read(), grid.n)
            if label != name:
                raise ValueError(f"{name}.csv is labelled {label!r}")
            vals[name] = v
    return Configuration(grid, **vals), manifest

