"""Linearised equations, the deformation complex and numerical kernel counts.

The complex at a configuration p = (A, Psi, Phi) is

    Omega^0(iR) --d1--> Omega^1(iR) + Gamma(L+L) + H --d2--> Omega^2(iR) + Omega^2(C) + V

with d1 f = (df, -t f Psi, 0) and d2 the linearisation of the residuals,
coupling terms scaled by t (t = 1 is the true complex, t = 0 decouples into
de Rham, dbar on gamma^{1,0} and the twisted Dirac operator D_A).

Operators are real-linear (conjugations appear), so they are assembled as
real matrices on Fourier coefficients with |m|, |k| <= K. Coordinates are
orthonormal for the tangent metric g on the domain and for L^2 on the
targets, so matrix transposes are metric adjoints.

Kernel and cokernel are computed without truncation artefacts: the kernel
of d uses the full image of the K-band (modes up to K + s, s = bandwidth of
the base), and the cokernel is the band-K kernel of the adjoint, whose image
is resolved in the same way.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .fields import Configuration, TangentVector
from .spectral import TorusGrid, bandwidth, fft2, ifft2, resample

# g(X, Y) = 4 int Re(p1 conj p2) + 2 int Re<beta, eta> + 4 int Re(g1 conj g2)
TANGENT_BLOCKS = (("p", "complex", 4.0), ("beta1", "complex", 2.0),
                  ("beta2", "complex", 2.0), ("g", "complex", 4.0))
TARGET_BLOCKS = (("r1", "real", 1.0), ("r2", "complex", 1.0),
                 ("r3a", "complex", 1.0), ("r3b", "complex", 1.0))
GAUGE_BLOCKS = (("s", "real", 1.0),)

SIGMA_RTOL = 1e-8
GAP_THRESHOLD = 1e3


class NotASolution(ValueError):
    pass


class UntrustworthyGap(RuntimeError):
    def __init__(self, msg, report=None):
        super().__init__(msg)
        self.report = report


# --------------------------------------------------------------------------
# linearisation on grid fields

def linearized_residual(base: Configuration, X: TangentVector, t: float = 1.0,
                        grid: TorusGrid | None = None) -> dict[str, np.ndarray]:
    """Directional derivative of (r1, r2, r3a, r3b) along X, coupling scaled by t.

    ``grid`` may be a finer working grid than base.grid; the base fields are
    then spectrally interpolated. X may carry leading batch axes.
    """
    grid = grid or base.grid
    a, psi1, psi2, phi = (_on(grid, v) for v in (base.a, base.psi1, base.psi2, base.phi))
    p, b1, b2, g = X.p, X.beta1, X.beta2, X.g
    dz, dzb = grid.dz_multiplier, grid.dzbar_multiplier

    p_hat, g_hat = fft2(p), fft2(g)
    # d(p dz - conj(p) dzbar) = (-d_z conj(p) - d_zbar p) dz^dzbar
    d_alpha = ifft2(-dz * fft2(np.conj(p)) - dzb * p_hat)
    r1 = d_alpha + t * np.real(psi1 * np.conj(b1) - psi2 * np.conj(b2))
    r2 = ifft2(-2.0 * dzb * g_hat) - t * (b1 * np.conj(psi2) + psi1 * np.conj(b2))
    r3a = (ifft2(dzb * fft2(b2)) - np.conj(a) * b2 - 0.5 * t * np.conj(phi) * b1
           - t * (np.conj(p) * psi2 + 0.5 * np.conj(g) * psi1))
    r3b = (ifft2(dz * fft2(b1)) + a * b1 - 0.5 * t * phi * b2
           + t * (p * psi1 - 0.5 * g * psi2))
    return {"r1": np.real(r1), "r2": r2, "r3a": r3a, "r3b": r3b}


def d1(f: np.ndarray, base: Configuration, t: float = 1.0,
       grid: TorusGrid | None = None) -> TangentVector:
    """d1 f = (df, -t f Psi, 0) for purely imaginary f."""
    grid = grid or base.grid
    psi1, psi2 = _on(grid, base.psi1), _on(grid, base.psi2)
    p = ifft2(grid.dz_multiplier * fft2(f))
    return TangentVector(p, -t * f * psi1, -t * f * psi2, np.zeros_like(p))


def _on(grid: TorusGrid, v: np.ndarray) -> np.ndarray:
    return v if v.shape[-1] == grid.n else resample(v, grid.n)


# --------------------------------------------------------------------------
# coefficient layouts

class ModeBasis:
    """Real coordinates for fields band-limited to |m|, |k| <= K on an N-grid."""

    def __init__(self, K: int, grid: TorusGrid):
        if 2 * K + 1 > grid.n:
            raise ValueError(f"band K={K} does not fit an n={grid.n} grid")
        self.K, self.grid = K, grid
        r = np.arange(-K, K + 1)
        mm, kk = np.meshgrid(r, r, indexing="ij")
        self.mk = np.stack([mm.ravel(), kk.ravel()], axis=1)
        half = (self.mk[:, 0] > 0) | ((self.mk[:, 0] == 0) & (self.mk[:, 1] > 0))
        self.half = self.mk[half]
        self.n_complex = 2 * len(self.mk)
        self.n_real = 1 + 2 * len(self.half)

    def _idx(self, mk):
        n = self.grid.n
        return mk[:, 0] % n, mk[:, 1] % n

    def size(self, kind: str) -> int:
        return self.n_complex if kind == "complex" else self.n_real

    def pack(self, f: np.ndarray, kind: str, weight: float) -> np.ndarray:
        n, side = self.grid.n, self.grid.side
        c = fft2(f) / n**2
        scale = np.sqrt(weight) * side
        if kind == "complex":
            i, j = self._idx(self.mk)
            cc = c[..., i, j]
            return scale * np.concatenate([cc.real, cc.imag], axis=-1)
        i, j = self._idx(self.half)
        ch = c[..., i, j]
        c0 = c[..., 0, 0].real[..., None]
        return scale * np.concatenate([c0, np.sqrt(2.0) * ch.real, np.sqrt(2.0) * ch.imag], axis=-1)

    def unpack(self, v: np.ndarray, kind: str, weight: float) -> np.ndarray:
        n, side = self.grid.n, self.grid.side
        v = v / (np.sqrt(weight) * side)
        out = np.zeros(v.shape[:-1] + (n, n), dtype=complex)
        if kind == "complex":
            L = len(self.mk)
            i, j = self._idx(self.mk)
            out[..., i, j] = v[..., :L] + 1j * v[..., L:]
        else:
            L = len(self.half)
            ch = (v[..., 1:1 + L] + 1j * v[..., 1 + L:]) / np.sqrt(2.0)
            i, j = self._idx(self.half)
            out[..., i, j] = ch
            i2, j2 = self._idx(-self.half)
            out[..., i2, j2] = np.conj(ch)
            out[..., 0, 0] = v[..., 0]
        vals = np.fft.ifft2(out, axes=(-2, -1)) * n**2
        return vals.real if kind == "real" else vals


@dataclass
class Layout:
    blocks: tuple
    basis: ModeBasis

    @property
    def sizes(self) -> list[int]:
        return [self.basis.size(kind) for _, kind, _ in self.blocks]

    @property
    def dim(self) -> int:
        return sum(self.sizes)

    def slices(self) -> dict[str, slice]:
        out, start = {}, 0
        for (name, _, _), size in zip(self.blocks, self.sizes):
            out[name] = slice(start, start + size)
            start += size
        return out

    def pack(self, fields: dict[str, np.ndarray]) -> np.ndarray:
        return np.concatenate([self.basis.pack(fields[name], kind, w)
                               for name, kind, w in self.blocks], axis=-1)

    def unpack(self, v: np.ndarray) -> dict[str, np.ndarray]:
        sl = self.slices()
        return {name: self.basis.unpack(v[..., sl[name]], kind, w)
                for name, kind, w in self.blocks}


def tangent_from_fields(d: dict) -> TangentVector:
    return TangentVector(d["p"], d["beta1"], d["beta2"], d["g"])


def tangent_to_fields(X: TangentVector) -> dict:
    return {"p": X.p, "beta1": X.beta1, "beta2": X.beta2, "g": X.g}


# --------------------------------------------------------------------------
# assembly

def _working_grid(base: Configuration, K: int, s: int) -> TorusGrid:
    need = 2 * (K + 2 * s) + 2
    n = max(8, base.grid.n)
    while n < need:
        n *= 2
    return TorusGrid(n, base.grid.side)


def base_bandwidth(base: Configuration) -> int:
    return max(bandwidth(base.grid, v) for v in (base.a, base.psi1, base.psi2, base.phi))


def _d2_matrix(base, t, grid, K_in, K_out, chunk=512):
    dom = Layout(TANGENT_BLOCKS, ModeBasis(K_in, grid))
    cod = Layout(TARGET_BLOCKS, ModeBasis(K_out, grid))
    cols = []
    eye = np.eye(dom.dim)
    for start in range(0, dom.dim, chunk):
        X = tangent_from_fields(dom.unpack(eye[start:start + chunk]))
        cols.append(cod.pack(linearized_residual(base, X, t, grid)))
    return np.concatenate(cols, axis=0).T


def _d1_matrix(base, t, grid, K_in, K_out):
    src = Layout(GAUGE_BLOCKS, ModeBasis(K_in, grid))
    dom = Layout(TANGENT_BLOCKS, ModeBasis(K_out, grid))
    s = src.unpack(np.eye(src.dim))["s"]
    X = d1(1j * s, base, t, grid)
    return dom.pack(tangent_to_fields(X)).T


@dataclass
class DeformationOperator:
    """Assembled real matrices of the (optionally gauge-fixed) complex at ``base``.

    ``matrix`` maps band-K tangent coordinates to target coordinates (band
    K + s), with d1^* rows appended when gauge fixing; ``adjoint_matrix``
    maps band-K target (and gauge) coordinates through the adjoint into
    band K + s tangent coordinates. ``d1_matrix`` is d1 from band-K gauge
    parameters into band-(K + s) tangent coordinates.
    """

    base: Configuration
    t: float
    max_mode: int
    with_gauge_fix: bool
    bandwidth: int
    work_grid: TorusGrid
    matrix: np.ndarray
    adjoint_matrix: np.ndarray
    d1_matrix: np.ndarray
    d2_matrix: np.ndarray
    blocks: dict = field(default_factory=dict)

    @property
    def domain(self) -> Layout:
        return Layout(TANGENT_BLOCKS, ModeBasis(self.max_mode, self.work_grid))

    @property
    def wide_domain(self) -> Layout:
        return Layout(TANGENT_BLOCKS, ModeBasis(self.max_mode + self.bandwidth, self.work_grid))

    def tangent(self, v: np.ndarray) -> TangentVector:
        """Tangent vector on the base grid from band-K coordinates."""
        X = tangent_from_fields(self.domain.unpack(v))
        n = self.base.grid.n
        return TangentVector(*(resample(f, n) for f in (X.p, X.beta1, X.beta2, X.g)))

    def coordinates(self, X: TangentVector) -> np.ndarray:
        """Band-K coordinates of a tangent vector given on the base grid."""
        n = self.work_grid.n
        Xw = TangentVector(*(resample(f, n) for f in (X.p, X.beta1, X.beta2, X.g)))
        return self.domain.pack(tangent_to_fields(Xw))


def assemble(base: Configuration, max_mode: int | None = None, t: float = 1.0,
             with_gauge_fix: bool = True, require_solution: bool = False,
             energy_tol: float = 1e-18) -> DeformationOperator:
    from .residuals import energy

    if require_solution:
        E = energy(base)
        if E >= energy_tol:
            raise NotASolution(f"base energy {E:.3e} >= {energy_tol:.1e}")
    K = base.grid.n // 4 if max_mode is None else int(max_mode)
    s = base_bandwidth(base)
    grid = _working_grid(base, K, s)

    D_narrow = _d2_matrix(base, t, grid, K, K + s)      # kernel side
    D_wide = _d2_matrix(base, t, grid, K + s, K)        # adjoint side
    G_wide = _d1_matrix(base, t, grid, K + s, K)        # gauge rows: (d1)^T on band K
    G_narrow = _d1_matrix(base, t, grid, K, K + s)      # gauge columns of the adjoint

    if with_gauge_fix:
        matrix = np.vstack([D_narrow, G_wide.T])
        adjoint = np.hstack([D_wide.T, G_narrow])
    else:
        matrix = D_narrow
        adjoint = D_wide.T
    dom = Layout(TANGENT_BLOCKS, ModeBasis(K, grid))
    cod = Layout(TARGET_BLOCKS, ModeBasis(K + s, grid))
    return DeformationOperator(
        base=base, t=t, max_mode=K, with_gauge_fix=with_gauge_fix, bandwidth=s,
        work_grid=grid, matrix=matrix, adjoint_matrix=adjoint,
        d1_matrix=_d1_matrix(base, t, grid, K, K), d2_matrix=D_narrow,
        blocks={"domain": dom.slices(), "target": cod.slices()})


# --------------------------------------------------------------------------
# dimension counting

@dataclass
class DimensionReport:
    kernel_dim: int
    cokernel_dim: int
    index: int
    singular_values: list
    gap_ratio: float
    n: int = 0
    max_mode: int = 0
    t: float = 1.0
    threshold: float = GAP_THRESHOLD
    cokernel_singular_values: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    @property
    def trustworthy(self) -> bool:
        return self.gap_ratio > self.threshold

    def to_dict(self) -> dict:
        return {"kernel_dim": self.kernel_dim, "cokernel_dim": self.cokernel_dim,
                "index": self.index, "gap_ratio": self.gap_ratio, "n": self.n,
                "max_mode": self.max_mode, "t": self.t, "trustworthy": self.trustworthy,
                **self.extra}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def null_count(A: np.ndarray, rtol: float = SIGMA_RTOL) -> tuple[int, float, np.ndarray]:
    """(nullity of the column space, gap ratio, ascending singular values).

    Nullity counts the missing singular values when A is wide plus those
    below rtol * sigma_max. The gap ratio is the smallest kept value over
    the largest discarded one (inf when nothing is discarded).
    """
    rows, cols = A.shape
    sv = np.linalg.svd(A, compute_uv=False)
    smax = sv[0] if sv.size else 0.0
    small = sv < rtol * smax
    nullity = int(np.count_nonzero(small)) + max(0, cols - rows)
    kept = sv[~small]
    lo = kept.min() if kept.size else 0.0
    hi = sv[small].max() if small.any() else 0.0
    gap = np.inf if hi == 0.0 else lo / hi
    if hi == 0.0 and small.any():
        gap = np.inf
    return nullity, float(gap), np.sort(sv)


def kernel_basis(A: np.ndarray, rtol: float = SIGMA_RTOL) -> np.ndarray:
    """Orthonormal basis (columns) of the numerical null space of A."""
    _, sv, vt = np.linalg.svd(A)
    smax = sv[0] if sv.size else 0.0
    rank = int(np.count_nonzero(sv >= rtol * smax))
    return vt[rank:].T


def kernel_index(op: DeformationOperator, threshold: float = GAP_THRESHOLD,
                 rtol: float = SIGMA_RTOL, strict: bool = True) -> DimensionReport:
    """Kernel, cokernel and index of the assembled operator."""
    k, gap_k, sv_k = null_count(op.matrix, rtol)
    c, gap_c, sv_c = null_count(op.adjoint_matrix, rtol)
    rep = DimensionReport(
        kernel_dim=k, cokernel_dim=c, index=k - c, singular_values=sv_k.tolist(),
        gap_ratio=min(gap_k, gap_c), n=op.base.grid.n, max_mode=op.max_mode, t=op.t,
        threshold=threshold, cokernel_singular_values=sv_c.tolist())
    if strict and not rep.trustworthy:
        raise UntrustworthyGap(f"singular-value gap {rep.gap_ratio:.3g} <= {threshold:g}", rep)
    return rep


# --------------------------------------------------------------------------
# block structure at t = 0 and closed-form dimension counts

BLOCK_COLUMNS = {"a": ("p",), "b": ("g",), "c": ("beta1", "beta2")}
BLOCK_ROWS = {"a": ("r1", "gauge"), "b": ("r2",), "c": ("r3a", "r3b")}


def _row_index(op: DeformationOperator, wide: bool) -> dict[str, np.ndarray]:
    """Row indices of each target block in ``matrix`` (wide=True) or columns of the adjoint."""
    K = op.max_mode + (op.bandwidth if wide else 0)
    cod = Layout(TARGET_BLOCKS, ModeBasis(K, op.work_grid))
    out = {k: np.arange(s.start, s.stop) for k, s in cod.slices().items()}
    if op.with_gauge_fix:
        G = Layout(GAUGE_BLOCKS, ModeBasis(K, op.work_grid)).dim
        out["gauge"] = np.arange(cod.dim, cod.dim + G)
    return out


def _col_index(layout: Layout) -> dict[str, np.ndarray]:
    return {k: np.arange(s.start, s.stop) for k, s in layout.slices().items()}


def block_diagnostics(op: DeformationOperator, rtol: float = SIGMA_RTOL) -> dict:
    """Per-block kernel/cokernel counts and the size of the cross-block coupling.

    Meaningful at t = 0, where the gauge-fixed operator splits into
    (a) d + d^* on alpha, (b) dbar on gamma^{1,0} and (c) D_A on the spinor.
    """
    if not op.with_gauge_fix:
        raise ValueError("block diagnostics need the gauge-fixed operator")
    rows_n, rows_w = _row_index(op, True), _row_index(op, False)
    cols_n, cols_w = _col_index(op.domain), _col_index(op.wide_domain)
    out, coupling = {}, 0.0
    for blk, cnames in BLOCK_COLUMNS.items():
        rn = np.concatenate([rows_n[r] for r in BLOCK_ROWS[blk] if r in rows_n])
        cn = np.concatenate([cols_n[c] for c in cnames])
        rw = np.concatenate([rows_w[r] for r in BLOCK_ROWS[blk] if r in rows_w])
        cw = np.concatenate([cols_w[c] for c in cnames])
        k, gk, _ = null_count(op.matrix[np.ix_(rn, cn)], rtol)
        c, gc, _ = null_count(op.adjoint_matrix[np.ix_(cw, rw)], rtol)
        out[blk] = {"kernel_dim": k, "cokernel_dim": c, "index": k - c, "gap_ratio": min(gk, gc)}
        others = np.setdiff1d(np.arange(op.matrix.shape[0]), rn)
        coupling = max(coupling, float(np.max(np.abs(op.matrix[np.ix_(others, cn)]), initial=0.0)))
    out["coupling"] = coupling / max(1.0, float(np.max(np.abs(op.matrix))))
    # first cohomology of (a) and (b) plus the index of (c): the naive count
    out["h1_a_plus_h1_b_plus_index_c"] = (out["a"]["kernel_dim"] + out["b"]["kernel_dim"]
                                          + out["c"]["index"])
    out["total_index"] = sum(out[b]["index"] for b in BLOCK_COLUMNS)
    return out


def sigma_tangent_dim(grid: TorusGrid | None = None, max_mode: int = 3,
                      rtol: float = SIGMA_RTOL) -> DimensionReport:
    """Real dimension of T Sigma = H^1_dR(iR) + H^0(K) on the flat torus.

    Counted as the kernel of d + d^* on imaginary 1-forms plus the kernel of
    dbar on (1,0)-forms, both assembled from the t = 0 complex (which does
    not see the spinor or the base point).
    """
    grid = grid or TorusGrid(16)
    base = Configuration.zeros(grid)
    op = assemble(base, max_mode=max_mode, t=0.0, with_gauge_fix=True)
    diag = block_diagnostics(op, rtol)
    k = diag["a"]["kernel_dim"] + diag["b"]["kernel_dim"]
    gap = min(diag["a"]["gap_ratio"], diag["b"]["gap_ratio"])
    return DimensionReport(kernel_dim=k, cokernel_dim=0, index=k, singular_values=[],
                           gap_ratio=gap, n=grid.n, max_mode=max_mode, t=0.0,
                           extra={"h1_de_rham": diag["a"]["kernel_dim"],
                                  "holomorphic_differentials": diag["b"]["kernel_dim"]})


def dimension_formulas(genus: int, c1: int = 0, case: str = "N") -> int:
    """Closed-form real dimensions: N -> 2g+2, Sigma -> 4g, vortex cases c1+g+1 / -c1+g+1."""
    if genus < 0:
        raise ValueError("genus must be non-negative")
    table = {
        "N": 2 * genus + 2,
        "Sigma": 4 * genus,
        "vortex_psi1_zero": c1 + genus + 1,
        "vortex_psi2_zero": -c1 + genus + 1,
    }
    if case not in table:
        raise ValueError(f"unknown case {case!r}; choose from {sorted(table)}")
    return table[case]


def complex_defect(base: Configuration, f: np.ndarray, t: float = 1.0) -> float:
    """max |d2^t d1^t f| for an imaginary gauge parameter f, evaluated on the grid."""
    lin = linearized_residual(base, d1(f, base, t), t)
    return max(float(np.max(np.abs(v))) for v in lin.values())


def h0_smallest_singular_value(base: Configuration, max_mode: int = 3, t: float = 1.0) -> float:
    """Smallest singular value of d1^t on band-limited gauge parameters; > 0 means H^0 = 0."""
    K = max_mode
    s = base_bandwidth(base)
    grid = _working_grid(base, K, s)
    G = _d1_matrix(base, t, grid, K, K + s)
    return float(np.linalg.svd(G, compute_uv=False).min())
