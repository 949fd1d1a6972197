"""Energy minimisation for the reduced system: Gauss-Newton and gradient flow.

E(c) = w1 ||r1||^2 + w2 ||r2||^2 + w3 (||r3a||^2 + ||r3b||^2), L^2 norms over
dx1 dx2. Updates live in the band |m|, |k| <= max_mode. Each Gauss-Newton
step solves the least-squares system [sqrt(W) J; S] delta = [-sqrt(W) r; b]
in g-orthonormal coordinates, where J is the exact derivative of the grid
residual map (collocation at every grid point) and the extra rows impose the
Coulomb slice d^*(a + delta a - a_ref) = 0 on the band. The remaining flat
directions (constant phase, translations of a solution) are handled by the
minimum-norm least-squares solution.
"""
from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg

from .fields import (
    FIELD_NAMES,
    Configuration,
    GaugeElement,
    TangentVector,
    explicit_torus_solution,
    gauge_apply,
)
from .linear import (
    GAUGE_BLOCKS,
    TANGENT_BLOCKS,
    Layout,
    ModeBasis,
    linearized_residual,
    tangent_from_fields,
    tangent_to_fields,
)
from .residuals import residuals
from .spectral import bandlimit, green_invert, partial_z, partial_zbar

log = logging.getLogger(__name__)


class StalledLineSearch(RuntimeError):
    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class MaxItersExceeded(RuntimeError):
    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


class ExcludedStratum(ValueError):
    """The initial spinor vanishes (or nearly so); the solver refuses to start."""


class SpinorCollapse(RuntimeError):
    """The spinor norm fell below the configured floor (reducible limit)."""

    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


@dataclass
class SolveOptions:
    method: str = "gauss-newton"          # or "gradient-flow"
    max_iters: int = 50
    energy_tol: float = 1e-18
    max_mode: int | None = None           # default n/4
    weights: tuple = (1.0, 1.0, 1.0)
    spinor_floor: float = 1e-4
    armijo: float = 1e-4
    min_step: float = 1e-10
    rcond: float = 1e-10
    gauge_fix: bool = True

    def __post_init__(self):
        if self.method not in ("gauss-newton", "gradient-flow"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        if not self.energy_tol > 0:
            raise ValueError("energy_tol must be positive")


@dataclass
class SolveReport:
    converged: bool
    iterations: int
    energy: float
    energy_trace: list = field(default_factory=list)
    step_trace: list = field(default_factory=list)
    residual_trace: list = field(default_factory=list)
    residuals: dict = field(default_factory=dict)
    spinor_norm: float = 0.0
    options: dict = field(default_factory=dict)
    message: str = ""
    gauge_fix_residual: float = 0.0
    initial_projection: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, default=float)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["iter", "energy", "r1", "r2", "r3a", "r3b", "step"])
        steps = [float("nan")] + list(self.step_trace)
        for i, (e, r, s) in enumerate(zip(self.energy_trace, self.residual_trace, steps)):
            w.writerow([i, repr(float(e))] + [repr(float(r[k])) for k in ("r1", "r2", "r3a", "r3b")]
                       + [repr(float(s))])
        return buf.getvalue()


# --------------------------------------------------------------------------
# gauge fixing

def coulomb_gauge_fix(c: Configuration, reference: Configuration | None = None
                      ) -> tuple[Configuration, GaugeElement]:
    """Gauge transform c so that d^*(A - A_ref) = 0; the parameter has zero mean.

    For alpha = p dz - conj(p) dzbar, d^* alpha = -4i Im(d_zbar p), and a
    gauge parameter zeta shifts d_zbar p by laplacian(zeta) / 4.
    """
    grid = c.grid
    a_ref = reference.a if reference is not None else np.zeros_like(c.a)
    D = partial_zbar(grid, c.a - a_ref)
    s = green_invert(grid, -4.0 * D.imag, tol=1e-8)
    u = GaugeElement(1j * s.real)
    return gauge_apply(u, c), u


def coulomb_defect(c: Configuration, reference: Configuration | None = None) -> float:
    a_ref = reference.a if reference is not None else np.zeros_like(c.a)
    return float(np.max(np.abs(4.0 * partial_zbar(c.grid, c.a - a_ref).imag)))


# --------------------------------------------------------------------------
# energy and its gradient

def weighted_residuals(c: Configuration, weights=(1.0, 1.0, 1.0)) -> dict:
    b = residuals(c)
    w1, w2, w3 = (np.sqrt(w) for w in weights)
    return {"r1": w1 * b.r1.f.real, "r2": w2 * b.r2.f, "r3a": w3 * b.r3a, "r3b": w3 * b.r3b}


def energy(c: Configuration, weights=(1.0, 1.0, 1.0)) -> float:
    return residuals(c).energy(weights)


def gradient(c: Configuration, weights=(1.0, 1.0, 1.0)) -> TangentVector:
    """g-gradient of E: g(gradient, X) = dE(X) for every tangent vector X."""
    grid = c.grid
    w1, w2, w3 = weights
    b = residuals(c)
    r1, r2, r3a, r3b = w1 * b.r1.f.real, w2 * b.r2.f, w3 * b.r3a, w3 * b.r3b
    a, psi1, psi2, phi = c.a, c.psi1, c.psi2, c.phi
    dz = lambda f: partial_z(grid, f)          # noqa: E731
    dzb = lambda f: partial_zbar(grid, f)      # noqa: E731
    Cp = 4 * dz(r1) - 2 * np.conj(r3a) * psi2 + 2 * r3b * np.conj(psi1)
    Cb1 = 2 * r1 * psi1 - 2 * r2 * psi2 - r3a * phi - 2 * dzb(r3b) + 2 * np.conj(a) * r3b
    Cb2 = (-2 * r1 * psi2 - 2 * np.conj(r2) * psi1 - 2 * dz(r3a) - 2 * a * r3a
           - r3b * np.conj(phi))
    Cg = 4 * dz(r2) - np.conj(r3a) * psi1 - r3b * np.conj(psi2)
    return TangentVector(Cp / 4, Cb1 / 2, Cb2 / 2, Cg / 4)


def energy_derivative(c: Configuration, X: TangentVector, weights=(1.0, 1.0, 1.0)) -> float:
    """dE(X) computed directly from the linearised residuals."""
    from .spectral import integrate

    r = residuals(c).components()
    lin = linearized_residual(c, X, 1.0)
    w = {"r1": weights[0], "r2": weights[1], "r3a": weights[2], "r3b": weights[2]}
    return float(sum(2 * w[k] * np.real(integrate(c.grid, np.conj(r[k]) * lin[k])) for k in r))


# --------------------------------------------------------------------------
# Gauss-Newton pieces

def _jacobian(c: Configuration, dom: Layout, weights, chunk: int = 256) -> np.ndarray:
    """Rows: weighted residual grid values scaled by the cell size (so Euclidean = L^2)."""
    h = c.grid.spacing
    sw = np.sqrt(weights)
    eye = np.eye(dom.dim)
    cols = []
    for start in range(0, dom.dim, chunk):
        X = tangent_from_fields(dom.unpack(eye[start:start + chunk]))
        lin = linearized_residual(c, X, 1.0)
        m = lin["r1"].shape[0]
        cols.append(h * np.concatenate([
            sw[0] * lin["r1"].reshape(m, -1),
            sw[1] * lin["r2"].real.reshape(m, -1), sw[1] * lin["r2"].imag.reshape(m, -1),
            sw[2] * lin["r3a"].real.reshape(m, -1), sw[2] * lin["r3a"].imag.reshape(m, -1),
            sw[2] * lin["r3b"].real.reshape(m, -1), sw[2] * lin["r3b"].imag.reshape(m, -1),
        ], axis=1))
    return np.concatenate(cols, axis=0).T


def _residual_vector(c: Configuration, weights) -> np.ndarray:
    r = weighted_residuals(c, weights)
    h = c.grid.spacing
    return h * np.concatenate([r["r1"].ravel(), r["r2"].real.ravel(), r["r2"].imag.ravel(),
                               r["r3a"].real.ravel(), r["r3a"].imag.ravel(),
                               r["r3b"].real.ravel(), r["r3b"].imag.ravel()])


def _slice_rows(c: Configuration, dom: Layout, a_ref: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Rows and right-hand side of d^*(a + delta a - a_ref) = 0 on the band.

    The slice is absolute (measured from a_ref, not from the current
    iterate); a homogeneous version lets least-squares errors accumulate
    along gauge directions, which leads out of the band-limited solutions.
    """
    X = tangent_from_fields(dom.unpack(np.eye(dom.dim)))
    lay = Layout(GAUGE_BLOCKS, ModeBasis(dom.basis.K, c.grid))
    rows = lay.pack({"s": 4.0 * partial_zbar(c.grid, X.p).imag}).T
    rhs = -lay.pack({"s": 4.0 * partial_zbar(c.grid, c.a - a_ref).imag})
    return rows, rhs


def gauss_newton_step(c: Configuration, max_mode: int, weights=(1.0, 1.0, 1.0),
                      gauge_fix: bool = True, rcond: float = 1e-10,
                      reference: Configuration | None = None) -> TangentVector:
    """Minimum-norm least-squares step for J delta = -r, plus Coulomb slice rows."""
    dom = Layout(TANGENT_BLOCKS, ModeBasis(max_mode, c.grid))
    J = _jacobian(c, dom, weights)
    rhs = -_residual_vector(c, weights)
    if gauge_fix:
        a_ref = reference.a if reference is not None else np.zeros_like(c.a)
        S, b = _slice_rows(c, dom, a_ref)
        J = np.vstack([J, S])
        rhs = np.concatenate([rhs, b])
    delta, *_ = scipy.linalg.lstsq(J, rhs, cond=rcond, lapack_driver="gelsy")
    return tangent_from_fields(dom.unpack(delta))


def coulomb_project(c: Configuration, X: TangentVector) -> TangentVector:
    """Remove the exact part of alpha (g-orthogonal projection onto d^* alpha = 0)."""
    sigma = green_invert(c.grid, 4.0 * partial_zbar(c.grid, X.p).imag, tol=1e-8).real
    return TangentVector(X.p - 1j * partial_z(c.grid, sigma), X.beta1, X.beta2, X.g)


def _project(c: Configuration, X: TangentVector, max_mode: int) -> TangentVector:
    dom = Layout(TANGENT_BLOCKS, ModeBasis(max_mode, c.grid))
    return tangent_from_fields(dom.unpack(dom.pack(tangent_to_fields(X))))


def _g_inner(c: Configuration, X: TangentVector, Y: TangentVector) -> float:
    h2 = c.grid.spacing ** 2
    val = (4 * np.sum((X.p * np.conj(Y.p)).real) + 2 * np.sum((X.beta1 * np.conj(Y.beta1)).real)
           + 2 * np.sum((X.beta2 * np.conj(Y.beta2)).real) + 4 * np.sum((X.g * np.conj(Y.g)).real))
    return float(h2 * val)


def _residual_norms(c: Configuration) -> dict:
    from .spectral import l2_norm

    return {k: l2_norm(c.grid, v) for k, v in residuals(c).components().items()}


def explicit_family_distance(c: Configuration, c2: float = 1.0) -> dict:
    """Max-norm distance from c to the orbit of the explicit solution.

    The orbit is generated by constant phases (theta) and x1-translations
    (shift): psi1 = c1, psi2 = c1 exp(2i c2 (x1 - shift)), phi = -i c2
    exp(-2i c2 (x1 - shift)), a = -i c2 / 2 with c1 = sqrt(2) c2 exp(i theta).
    Both parameters are fitted from the mean Fourier coefficients of c.
    """
    grid = c.grid
    x1, _ = grid.coords
    theta = float(np.angle(np.mean(c.psi1)))
    carrier = np.exp(2j * c2 * x1)
    rel = np.mean(c.psi2 * np.conj(carrier)) * np.exp(-1j * theta)
    shift = float(-np.angle(rel) / (2 * c2))
    member = explicit_torus_solution(c2, theta, grid)
    moved = np.exp(-2j * c2 * shift)
    member = member.replace(psi2=member.psi2 * moved, phi=member.phi * np.conj(moved))
    dist = max(float(np.max(np.abs(getattr(c, k) - getattr(member, k)))) for k in FIELD_NAMES)
    return {"distance": dist, "theta": theta, "shift": shift}


def solve(initial: Configuration, options: SolveOptions | None = None,
          reference: Configuration | None = None) -> tuple[Configuration, SolveReport]:
    """Drive the residual energy to zero from ``initial``.

    With gauge fixing the initial data is first moved to the Coulomb slice
    d^*(A - A_ref) = 0 (A_ref = reference connection, flat zero by default)
    and projected onto the update band; every step then stays in the slice.
    This makes the result equivariant under gauge transformations of the
    initial data, up to a constant phase.

    Trial steps whose spinor norm drops below ``spinor_floor`` are rejected
    by the line search (a heuristic that keeps iterates away from the zero
    configuration, which is a spurious minimum).

    Raises ExcludedStratum for a vanishing initial spinor; SpinorCollapse,
    StalledLineSearch or MaxItersExceeded (each carrying the partial report)
    instead of returning a non-solution.
    """
    opt = options or SolveOptions()
    if initial.spinor_norm() <= 1e-8:
        raise ExcludedStratum("initial spinor norm <= 1e-8")
    opt_reference = reference
    K = opt.max_mode if opt.max_mode is not None else initial.grid.n // 4
    if K > initial.grid.n // 4:
        raise ValueError(f"max_mode={K} exceeds n/4={initial.grid.n // 4}")
    c = initial
    projection = 0.0
    if opt.gauge_fix:
        # pick the Coulomb representative, then restrict to the update band
        c, _ = coulomb_gauge_fix(c, opt_reference)
        banded = c.replace(**{k: bandlimit(c.grid, getattr(c, k), K) for k in FIELD_NAMES})
        projection = max(float(np.max(np.abs(getattr(banded, k) - getattr(c, k))))
                         for k in FIELD_NAMES)
        c = banded
    E = energy(c, opt.weights)
    report = SolveReport(converged=False, iterations=0, energy=E, energy_trace=[E],
                         options={k: (list(v) if isinstance(v, tuple) else v)
                                  for k, v in asdict(opt).items()} | {"max_mode": K})

    report.initial_projection = projection
    report.residual_trace.append(_residual_norms(c))

    def finish(msg):
        report.energy = E
        report.gauge_fix_residual = coulomb_defect(c, opt_reference)
        report.residuals = residuals(c).report(opt.weights)
        report.spinor_norm = c.spinor_norm()
        report.message = msg

    for it in range(opt.max_iters + 1):
        report.iterations = it
        if c.spinor_norm() < opt.spinor_floor:
            finish("spinor norm below floor")
            raise SpinorCollapse(report.message, report)
        if E < opt.energy_tol:
            report.converged = True
            finish("converged")
            return c, report
        if it == opt.max_iters:
            break
        if opt.method == "gauss-newton":
            X = gauss_newton_step(c, K, opt.weights, opt.gauge_fix, opt.rcond, opt_reference)
            slope = energy_derivative(c, X, opt.weights)
        else:
            G = _project(c, gradient(c, opt.weights), K)
            if opt.gauge_fix:
                G = coulomb_project(c, G)
            X = -G
            slope = -_g_inner(c, G, G)
        step = 1.0
        while True:
            trial = c + X * step
            Et = energy(trial, opt.weights)
            if Et <= E + opt.armijo * step * slope and trial.spinor_norm() >= opt.spinor_floor:
                break
            step *= 0.5
            if step < opt.min_step:
                finish(f"line search stalled at iteration {it}")
                raise StalledLineSearch(report.message, report)
        c, E = trial, Et
        report.energy_trace.append(E)
        report.step_trace.append(step)
        report.residual_trace.append(_residual_norms(c))
        log.debug("iter %d energy %.3e step %.3g", it, E, step)
    finish(f"energy {E:.3e} above tolerance after {opt.max_iters} iterations")
    raise MaxItersExceeded(report.message, report)
