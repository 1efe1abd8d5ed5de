import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarlab.jones import (
    H_STATE,
    V_STATE,
    OrthogonalStatesError,
    RotationAxis,
    arg_overlap,
    equal_up_to_phase,
    is_unitary,
    jones_to_stokes,
    pauli,
    phase_distance,
    poincare_path,
    rodrigues,
    su2_rotor,
)

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)
thetas = st.floats(0, np.pi, allow_nan=False)


def series_expm(a, terms=60):
    """Matrix exponential by direct Taylor summation (independent of su2_rotor)."""
    out = np.eye(2, dtype=complex)
    term = np.eye(2, dtype=complex)
    for k in range(1, terms):
        term = term @ a / k
        out = out + term
    return out


def test_pauli_values():
    assert np.array_equal(pauli(1), np.diag([1, -1]))
    assert np.array_equal(pauli(2), [[0, 1], [1, 0]])
    assert np.array_equal(pauli(3), [[0, -1j], [1j, 0]])
    assert np.allclose(pauli(1) @ H_STATE, H_STATE)


def test_pauli_cyclic_algebra():
    s1, s2, s3 = pauli(1), pauli(2), pauli(3)
    assert np.allclose(s1 @ s2, 1j * s3)
    assert np.allclose(s2 @ s3, 1j * s1)
    assert np.allclose(s3 @ s1, 1j * s2)


@pytest.mark.parametrize("bad", [0, 4, -1, "x"])
def test_pauli_invalid(bad):
    with pytest.raises(ValueError):
        pauli(bad)


def test_pauli_returns_copy():
    p = pauli(1)
    p[0, 0] = 99
    assert pauli(1)[0, 0] == 1


def test_hv_expectation_matches_gauge_rule():
    # <h|sigma_1|h> = 1, so n = (1,0,0) gives alpha = s/2
    assert np.vdot(H_STATE, pauli(1) @ H_STATE).real == 1.0
    assert RotationAxis(np.pi / 2, 0.0).hv_projection == pytest.approx(1.0)


def test_rotor_zero_angle_is_identity():
    ax = RotationAxis(0.4, 1.3)
    assert np.allclose(su2_rotor(ax, 0.0), np.eye(2))


@pytest.mark.parametrize("s", [0.3, 1.0, 2.5, 4.0])
def test_rotor_about_x(s):
    u = su2_rotor(RotationAxis(np.pi / 2, 0.0), s)
    assert u[0, 0] == pytest.approx(np.cos(s / 2) - 1j * np.sin(s / 2))


def test_rotor_matches_series_exponential():
    ax = RotationAxis(np.pi / 2, np.pi / 3)
    s = np.pi / 2
    n = ax.vector
    gen = -1j * s / 2 * (n[0] * pauli(1) + n[1] * pauli(2) + n[2] * pauli(3))
    oracle = series_expm(gen)
    u = su2_rotor(ax, s)
    assert np.allclose(u, oracle, atol=1e-14)
    assert np.angle(u[0, 0]) == pytest.approx(-0.4636476090008061, abs=1e-12)
    assert np.angle(oracle[0, 0]) == pytest.approx(-np.arctan(0.5 * np.tan(np.pi / 4)), abs=1e-12)


@settings(max_examples=200, deadline=None)
@given(thetas, angles, angles)
def test_rotor_unitary_det_one(th, ph, s):
    u = su2_rotor(RotationAxis(th, ph), s)
    assert is_unitary(u, 1e-12)
    assert abs(np.linalg.det(u) - 1) < 1e-12


@settings(max_examples=200, deadline=None)
@given(thetas, angles, angles, angles)
def test_rotor_same_axis_additive(th, ph, s1, s2):
    ax = RotationAxis(th, ph)
    assert np.allclose(su2_rotor(ax, s1) @ su2_rotor(ax, s2), su2_rotor(ax, s1 + s2), atol=1e-12)


def test_axis_unit_norm():
    rng = np.random.default_rng(1)
    for th, ph in rng.uniform(-7, 7, (100, 2)):
        assert abs(np.linalg.norm(RotationAxis(th, ph).vector) - 1) < 1e-12


def test_axis_rejects_nan():
    with pytest.raises(ValueError):
        RotationAxis(float("nan"), 0.0)


def test_arg_overlap_basic():
    psi = np.array([0.6, 0.8j])
    assert arg_overlap(psi, psi) == 0.0
    assert arg_overlap(H_STATE, np.exp(1j * np.pi / 3) * H_STATE) == pytest.approx(np.pi / 3)


def test_arg_overlap_third_quadrant():
    s = 3 * np.pi / 2
    ax = RotationAxis(np.pi / 2, np.pi / 3)
    got = arg_overlap(H_STATE, su2_rotor(ax, s) @ H_STATE)
    # cos(s/2) < 0 and the imaginary part -0.5 sin(s/2) < 0: third quadrant
    z = np.cos(s / 2) * (1 - 0.5j * np.tan(s / 2))
    assert z.real < 0 and z.imag < 0
    expected = -np.pi + np.arctan(0.5)
    assert got == pytest.approx(expected, abs=1e-12)
    assert got == pytest.approx(np.arctan2(z.imag, z.real), abs=1e-12)


def test_arg_overlap_orthogonal_raises():
    with pytest.raises(OrthogonalStatesError):
        arg_overlap(H_STATE, V_STATE)


def test_arg_overlap_range_includes_pi():
    assert arg_overlap(H_STATE, -H_STATE) == pytest.approx(np.pi)


@settings(max_examples=200, deadline=None)
@given(st.floats(-20, 20, allow_nan=False))
def test_arg_overlap_global_phase(alpha):
    psi = np.array([0.3 + 0.1j, 0.9 - 0.2j])
    psi = psi / np.linalg.norm(psi)
    got = arg_overlap(psi, np.exp(1j * alpha) * psi)
    wrapped = np.angle(np.exp(1j * alpha))
    assert abs(np.angle(np.exp(1j * (got - wrapped)))) < 1e-10
    assert -np.pi < got <= np.pi


def test_stokes_of_basis_states():
    assert np.allclose(jones_to_stokes(H_STATE), [1, 0, 0])
    circ = jones_to_stokes(np.array([1, -1j]) / np.sqrt(2))
    assert np.allclose(np.abs(circ), [0, 0, 1])


def test_rodrigues_oracle_sanity():
    assert np.allclose(rodrigues([0, 0, 1], np.pi / 2, [1, 0, 0]), [0, 1, 0])


@settings(max_examples=200, deadline=None)
@given(thetas, angles, angles)
def test_stokes_rotation_is_rodrigues(th, ph, s):
    ax = RotationAxis(th, ph)
    p = jones_to_stokes(su2_rotor(ax, s) @ H_STATE)
    assert np.allclose(p, rodrigues(ax.vector, s, [1, 0, 0]), atol=1e-10)
    assert abs(np.linalg.norm(p) - 1) < 1e-10


def test_poincare_path_endpoints_and_degenerate_axis():
    s, pts = poincare_path(RotationAxis(np.pi / 3, np.pi / 4), 2 * np.pi, 50)
    assert np.allclose(pts[0], [1, 0, 0])
    assert np.linalg.norm(pts[-1] - pts[0]) < 1e-10
    _, flat = poincare_path(RotationAxis(np.pi / 2, 0.0), 2 * np.pi, 20)
    assert np.allclose(flat, [1, 0, 0])


def test_poincare_path_is_a_circle_about_axis():
    ax = RotationAxis(np.pi / 3, np.pi / 4)
    _, pts = poincare_path(ax, 2 * np.pi, 73)
    proj = pts @ ax.vector
    assert np.ptp(proj) < 1e-12
    assert proj[0] == pytest.approx(np.sin(np.pi / 3) * np.cos(np.pi / 4))


def test_poincare_path_needs_two_steps():
    with pytest.raises(ValueError):
        poincare_path(RotationAxis(0, 0), 1.0, 1)


def test_phase_distance_ignores_global_phase():
    u = su2_rotor(RotationAxis(1.0, 2.0), 0.7)
    assert phase_distance(u, np.exp(0.37j) * u) < 1e-15
    assert equal_up_to_phase(u, -u)
    assert not equal_up_to_phase(u, np.eye(2))
