import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from swred.fields import Configuration, explicit_torus_solution, random_bandlimited_configuration
from swred.lift4d import (
    CONVENTIONS,
    Config4D,
    QuaternionRep,
    clifford_check,
    curvature_components,
    lift,
    project_2d,
    reduction_consistency_check,
    sw4d_residuals,
)
from swred.spectral import TorusGrid


def test_clifford_identities_exact():
    report = clifford_check()
    assert len(report) == 9 and all(report.values())


def test_gamma_map():
    q = QuaternionRep()
    assert np.array_equal(q.gamma(1), np.eye(2))
    assert np.array_equal(q.gamma(3) @ q.gamma(4), q.gamma(2))


def test_clifford_check_catches_a_bad_rep():
    q = QuaternionRep(K=-QuaternionRep().K)
    assert not clifford_check(q)["IJ=K"]


def test_conventions_frozen():
    with pytest.raises(TypeError):
        CONVENTIONS["r1_from_sw2a"] = 1.0
    assert CONVENTIONS["r1_from_sw2a"] == 0.5j
    assert CONVENTIONS["r2_from_sw2c"] == 1j
    assert CONVENTIONS["sw2a_coupling"] == 1.0


def test_dx1dx2_conversion_matches_basis_change():
    # dz^dzbar = -2i dx1^dx2, so the dz^dzbar coefficient is (i/2) times the dx1^dx2 one
    assert CONVENTIONS["dx1dx2_per_dzdzbar"] == 1 / -2j


@given(seed=st.integers(0, 10_000))
def test_lift_round_trip(seed):
    c = random_bandlimited_configuration(seed, 2, 1.0, TorusGrid(16))
    back = project_2d(lift(c))
    for name in ("a", "psi1", "psi2", "phi"):
        assert np.allclose(getattr(back, name), getattr(c, name), atol=1e-15)


def test_lift_of_explicit_connection(explicit):
    c4 = lift(explicit)
    # a = -i/2 gives A1 = -1 and A2 = 0: i(A1 dx1 + A2 dx2) = a dz - conj(a) dzbar
    assert np.allclose(c4.A1, -1.0) and np.allclose(c4.A2, 0.0)
    x1 = explicit.grid.coords[0]
    one_form_dx1 = explicit.a - np.conj(explicit.a)   # coefficient of dx1
    one_form_dx2 = 1j * (explicit.a + np.conj(explicit.a))
    assert np.allclose(1j * c4.A1, one_form_dx1) and np.allclose(1j * c4.A2, one_form_dx2)
    # phi = -i e^{-2 i x1} = A4 - i A3
    assert np.allclose(c4.A4 - 1j * c4.A3, -1j * np.exp(-2j * x1))


def test_lift_matches_phi_components(small_grid):
    c = random_bandlimited_configuration(4, 2, 1.0, small_grid)
    c4 = lift(c)
    phi1 = (c.phi - np.conj(c.phi)) / 2
    phi2 = (c.phi + np.conj(c.phi)) / 2j
    assert np.allclose(c4.A3, 1j * phi1) and np.allclose(c4.A4, 1j * phi2)


def test_config4d_rejects_complex_potentials(small_grid):
    z = small_grid.zeros()
    c4 = lift(Configuration(small_grid, z, z, z, z))
    with pytest.raises(ValueError):
        Config4D(small_grid, c4.A1 + 1j, c4.A2, c4.A3, c4.A4, c4.psi)


def test_explicit_lift_is_4d_solution(explicit):
    R = sw4d_residuals(lift(explicit))
    assert max(float(np.max(np.abs(v))) for v in R.values()) < 1e-12
    rep = reduction_consistency_check(explicit)
    assert rep["max_mismatch"] < 1e-12 and rep["passed"]


def test_zero_config(small_grid):
    z = small_grid.zeros()
    R = sw4d_residuals(lift(Configuration(small_grid, z, z, z, z)))
    assert all(np.max(np.abs(v)) == 0.0 for v in R.values())


@given(seed=st.integers(0, 10_000))
def test_reduction_correspondence_random(seed):
    c = random_bandlimited_configuration(seed, 2, 1.0, TorusGrid(16))
    assert reduction_consistency_check(c)["max_mismatch"] < 1e-10


def test_x3_x4_independence(small_grid):
    c4 = lift(random_bandlimited_configuration(2, 2, 1.0, small_grid))
    F = curvature_components(c4)
    assert np.max(np.abs(F["F34"])) == 0.0
    assert np.max(np.abs(F["F42"])) > 0.0  # -i d2 A4


def test_selective_violation_of_higgs_equation(small_grid):
    x1, _ = small_grid.coords
    z = small_grid.zeros()
    c = Configuration(small_grid, z + 0.3 - 0.2j, z, z, np.exp(1j * x1))
    R = sw4d_residuals(lift(c))
    big = {k for k, v in R.items() if np.max(np.abs(v)) > 1e-3}
    assert big == {"sw2b", "sw2c"}
    assert reduction_consistency_check(c)["passed"]


def test_correspondence_is_linear(small_grid):
    c = random_bandlimited_configuration(6, 2, 1.0, small_grid)
    R = sw4d_residuals(lift(c))
    # doubling only the connection doubles the curvature part of SW2a
    c2 = c.replace(a=2 * c.a, psi1=0 * c.psi1, psi2=0 * c.psi2)
    c1 = c.replace(psi1=0 * c.psi1, psi2=0 * c.psi2)
    assert np.allclose(sw4d_residuals(lift(c2))["sw2a"], 2 * sw4d_residuals(lift(c1))["sw2a"])
    assert set(R) == {"sw1_row1", "sw1_row2", "sw2a", "sw2b", "sw2c"}


def test_printed_sw2a_coupling_breaks_correspondence(small_grid):
    c = random_bandlimited_configuration(1, 2, 1.0, small_grid)
    rep = reduction_consistency_check(c, curvature_coupling=CONVENTIONS["sw2a_coupling_as_printed"])
    assert rep["mismatch"]["r1"] > 1e-3
    assert max(rep["mismatch"][k] for k in ("r2", "r3a", "r3b")) < 1e-12
