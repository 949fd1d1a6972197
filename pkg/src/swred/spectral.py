"""Flat-torus spectral calculus.

Fields are complex numpy arrays whose last two axes are the (x1, x2) grid;
any leading axes are treated as a batch. The complex coordinate is
z = x1 + i x2 and the metric is ds^2 = dz dzbar (h = 1), so

    dz ^ dzbar = -2i dx1 ^ dx2,      omega = i dz ^ dzbar = 2 dx1 ^ dx2.

All derivatives are Fourier multipliers. The Nyquist row/column gets a zero
first-derivative multiplier so that real fields stay real under d.

Laplacian convention: ``laplacian = 4 d_z d_zbar = d1^2 + d2^2``. The
Kahler-normalised operator h^-2 d^2/dz dzbar used for surfaces equals
``laplacian / 4`` here.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * np.pi
# dz^dzbar coefficient -> dx1^dx2 coefficient
DZDZBAR_TO_DX1DX2 = -2.0j


class NonZeroMean(ValueError):
    """Raised when the Laplacian is inverted on data with a nonzero mean."""


@dataclass(frozen=True)
class TorusGrid:
    """Square periodic grid of ``n`` points per axis and period ``side``."""

    n: int = 32
    side: float = TWO_PI

    def __post_init__(self):
        if self.n < 4 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 4, got {self.n}")
        if not self.side > 0:
            raise ValueError(f"side must be positive, got {self.side}")

    @property
    def spacing(self) -> float:
        return self.side / self.n

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    @cached_property
    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        """``(x1, x2)`` arrays, indexed ``[i, j]`` with x1 = i*h, x2 = j*h."""
        x = np.arange(self.n) * self.spacing
        return np.meshgrid(x, x, indexing="ij")

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer Fourier indices in FFT order, range [-n/2, n/2)."""
        return np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(int)

    @cached_property
    def _ik(self) -> np.ndarray:
        k = 1j * (TWO_PI / self.side) * self.modes.astype(float)
        k[self.n // 2] = 0.0
        return k

    @cached_property
    def dz_multiplier(self) -> np.ndarray:
        ik1, ik2 = self._ik[:, None], self._ik[None, :]
        return 0.5 * (ik1 - 1j * ik2)

    @cached_property
    def dzbar_multiplier(self) -> np.ndarray:
        ik1, ik2 = self._ik[:, None], self._ik[None, :]
        return 0.5 * (ik1 + 1j * ik2)

    @cached_property
    def laplacian_multiplier(self) -> np.ndarray:
        k = (TWO_PI / self.side) * self.modes.astype(float)
        return -(k[:, None] ** 2 + k[None, :] ** 2)

    def zeros(self) -> np.ndarray:
        return np.zeros(self.shape, dtype=complex)

    def plane_wave(self, m: int, k: int) -> np.ndarray:
        """exp(i (m x1 + k x2) 2 pi / side)."""
        x1, x2 = self.coords
        return np.exp(1j * (TWO_PI / self.side) * (m * x1 + k * x2))


@dataclass
class OneForm:
    """p dz + q dzbar."""

    p: np.ndarray
    q: np.ndarray

    @classmethod
    def imaginary(cls, p: np.ndarray) -> "OneForm":
        """The i R-valued form p dz - conj(p) dzbar."""
        return cls(p, -np.conj(p))

    def __add__(self, other: "OneForm") -> "OneForm":
        return OneForm(self.p + other.p, self.q + other.q)

    def __sub__(self, other: "OneForm") -> "OneForm":
        return OneForm(self.p - other.p, self.q - other.q)

    def __mul__(self, s) -> "OneForm":
        return OneForm(s * self.p, s * self.q)

    __rmul__ = __mul__

    def __neg__(self) -> "OneForm":
        return OneForm(-self.p, -self.q)

    @property
    def part10(self) -> "OneForm":
        return OneForm(self.p, np.zeros_like(self.q))

    @property
    def part01(self) -> "OneForm":
        return OneForm(np.zeros_like(self.p), self.q)

    def is_imaginary(self, tol: float = 1e-13) -> bool:
        scale = max(1.0, float(np.max(np.abs(self.p), initial=0.0)))
        return bool(np.max(np.abs(self.q + np.conj(self.p)), initial=0.0) <= tol * scale)


@dataclass
class TwoForm:
    """f dz ^ dzbar."""

    f: np.ndarray

    @classmethod
    def from_omega(cls, g: np.ndarray) -> "TwoForm":
        """The form g * omega."""
        return cls(1j * np.asarray(g))

    @property
    def omega_coefficient(self) -> np.ndarray:
        return -1j * self.f

    def __add__(self, other: "TwoForm") -> "TwoForm":
        return TwoForm(self.f + other.f)

    def __sub__(self, other: "TwoForm") -> "TwoForm":
        return TwoForm(self.f - other.f)

    def __mul__(self, s) -> "TwoForm":
        return TwoForm(s * self.f)

    __rmul__ = __mul__

    def is_imaginary(self, tol: float = 1e-13) -> bool:
        """i R-valued 2-forms have a real dz^dzbar coefficient."""
        scale = max(1.0, float(np.max(np.abs(self.f), initial=0.0)))
        return bool(np.max(np.abs(self.f.imag), initial=0.0) <= tol * scale)


def fft2(f):
    return np.fft.fft2(f, axes=(-2, -1))


def ifft2(f):
    return np.fft.ifft2(f, axes=(-2, -1))


def _apply(mult, f):
    return ifft2(mult * fft2(f))


def partial_z(grid: TorusGrid, f):
    """d/dz = (d1 - i d2) / 2."""
    return _apply(grid.dz_multiplier, f)


def partial_zbar(grid: TorusGrid, f):
    """d/dzbar = (d1 + i d2) / 2."""
    return _apply(grid.dzbar_multiplier, f)


def laplacian(grid: TorusGrid, f):
    return _apply(grid.laplacian_multiplier, f)


def gradient(grid: TorusGrid, f) -> OneForm:
    """df = f_z dz + f_zbar dzbar."""
    fhat = fft2(f)
    return OneForm(ifft2(grid.dz_multiplier * fhat), ifft2(grid.dzbar_multiplier * fhat))


def exterior_d(grid: TorusGrid, a: OneForm) -> TwoForm:
    """d(p dz + q dzbar) = (q_z - p_zbar) dz ^ dzbar."""
    return TwoForm(partial_z(grid, a.q) - partial_zbar(grid, a.p))


def hodge_star_1(a: OneForm) -> OneForm:
    """*dz = -i dz, *dzbar = i dzbar (so *dx1 = dx2, *dx2 = -dx1)."""
    return OneForm(-1j * a.p, 1j * a.q)


def wedge(a: OneForm, b: OneForm) -> TwoForm:
    return TwoForm(a.p * b.q - a.q * b.p)


def integrate(grid: TorusGrid, f):
    """Integral of f dx1 dx2 (trapezoid rule, exact for resolved modes)."""
    return np.sum(f, axis=(-2, -1)) * grid.spacing**2


def integrate_2form(grid: TorusGrid, t: TwoForm):
    return DZDZBAR_TO_DX1DX2 * integrate(grid, t.f)


def l2_norm(grid: TorusGrid, f) -> float:
    return float(np.sqrt(np.real(integrate(grid, np.abs(f) ** 2))))


def mean(grid: TorusGrid, f):
    return np.mean(f, axis=(-2, -1))


def green_invert(grid: TorusGrid, t, tol: float = 1e-10):
    """Solve ``laplacian(w) = t`` with mean(w) = 0.

    Raises NonZeroMean when t is not orthogonal to the constants, which is
    the only obstruction on a closed surface.
    """
    t = np.asarray(t, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(t), initial=0.0)))
    mu = np.mean(t)
    if abs(mu) > tol * scale:
        raise NonZeroMean(f"source has mean {mu:.3e}; Laplacian is not invertible on it")
    lap = grid.laplacian_multiplier.copy()
    lap[0, 0] = 1.0
    what = fft2(t) / lap
    what[..., 0, 0] = 0.0
    return ifft2(what)


def bandlimit(grid: TorusGrid, f, max_mode: int):
    """Zero every Fourier coefficient with |m| or |k| above max_mode."""
    keep = np.abs(grid.modes) <= max_mode
    mask = keep[:, None] & keep[None, :]
    return ifft2(np.where(mask, fft2(f), 0.0))


def bandwidth(grid: TorusGrid, f, rel_tol: float = 1e-12) -> int:
    """Largest |m| or |k| carrying a coefficient above rel_tol * max."""
    c = np.abs(fft2(f))
    if c.size == 0 or c.max() == 0.0:
        return 0
    big = c > rel_tol * c.max()
    m = np.abs(grid.modes)
    mm = np.maximum(m[:, None], m[None, :])
    return int(mm[big].max())


def resample(f, n_new: int):
    """Spectral interpolation of a grid field onto an n_new grid.

    Requires the field to carry no Nyquist content when upsampling.
    """
    n = f.shape[-1]
    if n_new == n:
        return np.array(f, dtype=complex)
    fhat = fft2(f)
    modes = np.fft.fftfreq(n, d=1.0 / n).round().astype(int)
    new_modes = np.fft.fftfreq(n_new, d=1.0 / n_new).round().astype(int)
    out = np.zeros(f.shape[:-2] + (n_new, n_new), dtype=complex)
    lim = min(n, n_new) // 2
    src = np.nonzero(np.abs(modes) < lim)[0]
    dst = np.array([np.nonzero(new_modes == modes[i])[0][0] for i in src])
    out[..., dst[:, None], dst[None, :]] = fhat[..., src[:, None], src[None, :]]
    return ifft2(out) * (n_new / n) ** 2


def dump_field_csv(grid: TorusGrid, values: np.ndarray, name: str) -> str:
    """Serialise a field as CSV: a ``# name`` line, then i, j, x1, x2, re, im rows."""
    buf = io.StringIO()
    buf.write(f"# {name}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["i", "j", "x1", "x2", "re", "im"])
    x1, x2 = grid.coords
    for i in range(grid.n):
        for j in range(grid.n):
            v = values[i, j]
            w.writerow([i, j, repr(float(x1[i, j])), repr(float(x2[i, j])),
                        repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


def load_field_csv(text: str, n: int) -> tuple[str, np.ndarray]:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError("field dump must start with a '# name' header line")
    name = lines[0][1:].strip()
    out = np.zeros((n, n), dtype=complex)
    seen = 0
    for row in csv.DictReader(lines[1:]):
        out[int(row["i"]), int(row["j"])] = complex(float(row["re"]), float(row["im"]))
        seen += 1
    if seen != n * n:
        raise ValueError(f"expected {n * n} rows for field {name!r}, found {seen}")
    return name, out
