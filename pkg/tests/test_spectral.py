import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swred.spectral import (
    NonZeroMean,
    OneForm,
    TorusGrid,
    TwoForm,
    bandlimit,
    bandwidth,
    dump_field_csv,
    exterior_d,
    gradient,
    green_invert,
    hodge_star_1,
    integrate,
    integrate_2form,
    laplacian,
    load_field_csv,
    partial_z,
    partial_zbar,
    resample,
    wedge,
)

modes = st.integers(min_value=-7, max_value=7)


@given(m=modes, k=modes)
def test_plane_wave_derivatives(m, k):
    g = TorusGrid(32)
    e = g.plane_wave(m, k)
    # d_z e = (i m + k)/2 e and d_zbar e = (i m - k)/2 e on a 2 pi torus
    assert np.allclose(partial_z(g, e), 0.5 * (1j * m + k) * e, atol=1e-12)
    assert np.allclose(partial_zbar(g, e), 0.5 * (1j * m - k) * e, atol=1e-12)
    assert np.allclose(laplacian(g, e), -(m * m + k * k) * e, atol=1e-10)


def test_laplacian_is_four_dz_dzbar(rng):
    g = TorusGrid(16)
    f = bandlimit(g, rng.standard_normal(g.shape) + 0j, 6)
    assert np.allclose(4 * partial_z(g, partial_zbar(g, f)), laplacian(g, f), atol=1e-11)


def test_nyquist_derivative_keeps_real_fields_real():
    g = TorusGrid(8)
    x1, _ = g.coords
    f = np.cos(4 * x1)  # pure Nyquist mode
    df = gradient(g, f)
    assert np.max(np.abs(df.p)) < 1e-14


@given(m=modes, k=modes)
def test_d_squared_vanishes(m, k):
    g = TorusGrid(32)
    f = g.plane_wave(m, k) * 1j
    assert np.max(np.abs(exterior_d(g, gradient(g, f)).f)) < 1e-11


def test_wedge_of_basis_and_omega():
    g = TorusGrid(8)
    one, zero = np.ones(g.shape, complex), g.zeros()
    dz, dzbar = OneForm(one, zero), OneForm(zero, one)
    assert np.allclose(wedge(dz, dzbar).f, 1.0)
    # dz^dzbar = -2i dx1^dx2, so its integral over a 2 pi torus is -2i (2 pi)^2
    assert np.isclose(integrate_2form(g, wedge(dz, dzbar)), -2j * (2 * np.pi) ** 2)
    omega = TwoForm.from_omega(one)
    assert np.isclose(integrate_2form(g, omega), 2 * (2 * np.pi) ** 2)


def test_hodge_star_squares_to_minus_one(rng):
    a = OneForm(rng.standard_normal(4) + 1j, rng.standard_normal(4) - 1j)
    b = hodge_star_1(hodge_star_1(a))
    assert np.allclose(b.p, -a.p) and np.allclose(b.q, -a.q)


def test_imaginary_forms():
    p = np.array([1 + 2j, -3j])
    assert OneForm.imaginary(p).is_imaginary()
    assert not OneForm(p, p).is_imaginary()
    assert TwoForm(np.array([1.0, 2.0]) + 0j).is_imaginary()


def test_integrate_exact_for_resolved_modes():
    g = TorusGrid(16, side=3.0)
    assert np.isclose(integrate(g, g.plane_wave(2, -1)), 0.0, atol=1e-13)
    assert np.isclose(integrate(g, np.ones(g.shape)), 9.0)


@given(m=st.integers(1, 6), k=st.integers(-6, 6))
def test_green_invert_round_trip(m, k):
    g = TorusGrid(32)
    t = g.plane_wave(m, k) + np.conj(g.plane_wave(k, m))
    w = green_invert(g, t)
    assert np.allclose(laplacian(g, w), t, atol=1e-11)
    assert abs(np.mean(w)) < 1e-14


def test_green_invert_rejects_mean():
    g = TorusGrid(8)
    with pytest.raises(NonZeroMean):
        green_invert(g, np.ones(g.shape))


def test_bandlimit_and_bandwidth(rng):
    g = TorusGrid(32)
    f = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    assert bandwidth(g, bandlimit(g, f, 3)) == 3
    assert bandwidth(g, g.zeros()) == 0


def test_resample_round_trip(rng):
    g = TorusGrid(16)
    f = bandlimit(g, rng.standard_normal(g.shape) + 0j, 5)
    up = resample(f, 64)
    assert np.allclose(resample(up, 16), f, atol=1e-13)
    assert np.allclose(up[::4, ::4], f, atol=1e-13)


def test_csv_round_trip(rng):
    g = TorusGrid(8)
    f = rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape)
    name, back = load_field_csv(dump_field_csv(g, f, "psi1"), 8)
    assert name == "psi1" and np.array_equal(back, f)
    with pytest.raises(ValueError):
        load_field_csv("no header", 8)


def test_grid_validation():
    with pytest.raises(ValueError):
        TorusGrid(12)
    with pytest.raises(ValueError):
        TorusGrid(8, side=0.0)
