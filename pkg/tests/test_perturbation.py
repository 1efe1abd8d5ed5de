import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polarlab.jones import RotationAxis, is_unitary
from polarlab.perturbation import (
    LEAKAGE_BAND,
    MisalignmentError,
    draw_misalignment,
    exact_perturbed,
    first_order_train,
    intensity_from_train,
    leakage_flag,
    misalignment_vector,
    monte_carlo_phase_drift,
    perturbed_intensity,
    plate_sensitivities,
    plate_variations,
    r_matrix,
    truncation_defect,
)
from polarlab.phases import geometric_phase_theory, intensity_model
from polarlab.plates import compose, half, quarter, simon_mukunda, u_tot_train

DEG = math.pi / 180
REF = RotationAxis(np.pi / 2, np.pi / 3)
CAMPAIGN_AXES = [RotationAxis.from_degrees(90, 60), RotationAxis.from_degrees(60, 45),
              RotationAxis.from_degrees(60, 60)]
TRAIN = u_tot_train(RotationAxis(1.1, 0.4), 2.3, 0.7)


def test_r_matrix_values():
    assert np.allclose(r_matrix(0.0), [[0, -1], [-1, 0]])
    assert np.allclose(r_matrix(np.pi / 4), [[1, 0], [0, -1]], atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.floats(-10, 10, allow_nan=False))
def test_r_matrix_properties(x):
    r = r_matrix(x)
    assert np.allclose(r, r.conj().T)
    assert abs(np.trace(r)) < 1e-15
    assert np.allclose(r @ r, np.eye(2), atol=1e-14)


def test_zero_offsets():
    z = np.zeros(7)
    assert np.array_equal(first_order_train(TRAIN, z), compose(TRAIN))
    assert np.allclose(exact_perturbed(TRAIN, z), compose(TRAIN), atol=1e-15)


def test_single_half_wave_offset_three_factor_product():
    d = np.zeros(7)
    d[3] = 0.01
    mats = [p.matrix() for p in TRAIN]
    prefix = mats[0] @ mats[1] @ mats[2]
    suffix = mats[4] @ mats[5] @ mats[6]
    x4 = TRAIN[3].angle
    expected = prefix @ (2j * 0.01 * r_matrix(x4)) @ suffix
    assert np.allclose(first_order_train(TRAIN, d) - compose(TRAIN), expected, atol=1e-15)


def test_single_quarter_wave_offset():
    d = np.zeros(7)
    d[0] = 0.01
    mats = [p.matrix() for p in TRAIN]
    expected = (np.sqrt(2) * 1j * 0.01 * r_matrix(TRAIN[0].angle)) @ np.linalg.multi_dot(mats[1:])
    assert np.allclose(first_order_train(TRAIN, d) - compose(TRAIN), expected, atol=1e-15)


def test_variations_match_finite_differences():
    h = 1e-6
    var = plate_variations(TRAIN)
    for i in range(7):
        e = np.zeros(7)
        e[i] = h
        fd = (exact_perturbed(TRAIN, e) - exact_perturbed(TRAIN, -e)) / (2 * h)
        assert np.allclose(fd, var[i], atol=1e-8)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-0.01, 0.01), min_size=7, max_size=7), st.floats(-5, 5))
def test_first_order_linear(deltas, a):
    d = np.array(deltas)
    base = compose(TRAIN)
    lhs = first_order_train(TRAIN, a * d, guard=None) - base
    rhs = a * (first_order_train(TRAIN, d) - base)
    assert np.allclose(lhs, rhs, atol=1e-14)


def test_exact_perturbed_unitary():
    rng = np.random.default_rng(0)
    for _ in range(50):
        assert is_unitary(exact_perturbed(TRAIN, rng.uniform(-0.1, 0.1, 7)))


def test_truncation_order():
    rng = np.random.default_rng(1)
    direction = rng.uniform(-1, 1, 7)
    direction /= np.max(np.abs(direction))
    sizes = np.array([1.0, 0.5, 0.25, 0.125]) * DEG
    defects = [truncation_defect(TRAIN, a * direction) for a in sizes]
    slope = np.polyfit(np.log(sizes), np.log(defects), 1)[0]
    assert slope == pytest.approx(2.0, abs=0.1)
    # Taylor remainder with plate derivatives of norm <= 2: defect <= 2 sqrt(2) |delta|_1^2
    l1 = np.sum(np.abs(direction))
    c = max(d / (a * l1) ** 2 for d, a in zip(defects, sizes))
    assert c < 2 * np.sqrt(2)


def test_wrong_train_length():
    with pytest.raises(MisalignmentError):
        first_order_train(simon_mukunda(REF, 1.0), np.zeros(7))
    with pytest.raises(MisalignmentError):
        plate_variations(simon_mukunda(REF, 1.0))


def test_guard():
    with pytest.raises(MisalignmentError):
        misalignment_vector(np.full(7, 0.2))
    with pytest.raises(MisalignmentError):
        misalignment_vector(np.zeros(6))
    assert misalignment_vector(np.full(7, 0.2), guard=1.0).shape == (7,)


def test_perturbed_intensity_zero_is_closed_form():
    rng = np.random.default_rng(3)
    for _ in range(20):
        ax = RotationAxis(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
        s, phi = rng.uniform(0, 6), rng.uniform(0, 6)
        assert perturbed_intensity(ax, s, phi, np.zeros(7)) == pytest.approx(intensity_model(ax, s, phi), abs=1e-12)


def test_perturbed_intensity_first_order_accuracy():
    rng = np.random.default_rng(4)
    d = rng.uniform(-DEG, DEG, 7)
    phis = np.linspace(0, 2 * np.pi, 13)
    fo = perturbed_intensity(REF, 2.0, phis, d)
    ex = intensity_from_train(REF, 2.0, phis, deltas=d)
    assert np.max(np.abs(fo - ex)) < 5 * np.sum(np.abs(d)) ** 2


def test_sensitivity_is_derivative_of_exact_intensity():
    h = 1e-6
    phi = 0.9
    sens = plate_sensitivities(REF, 2.0, phi)
    for i in range(7):
        e = np.zeros(7)
        e[i] = h
        fd = (intensity_from_train(REF, 2.0, phi, deltas=e) - intensity_from_train(REF, 2.0, phi, deltas=-e)) / (2 * h)
        assert sens[i] == pytest.approx(fd, abs=1e-7)


def test_sensitivity_shapes():
    assert plate_sensitivities(REF, 1.0, 0.3).shape == (7,)
    assert plate_sensitivities(REF, 1.0, np.linspace(0, 1, 4)).shape == (4, 7)


@pytest.mark.parametrize("axis", CAMPAIGN_AXES)
def test_sign_flip_detectable(axis):
    rng = np.random.default_rng(5)
    phis = np.linspace(0, 2 * np.pi, 61)
    for s in np.radians([40, 120, 200, 320]):
        base = rng.uniform(-DEG, DEG, 7)
        for i in range(7):
            up, dn = base.copy(), base.copy()
            up[i], dn[i] = DEG, -DEG
            diff = np.abs(perturbed_intensity(axis, s, phis, up) - perturbed_intensity(axis, s, phis, dn))
            assert diff.max() > 1e-3


def test_leakage_band_at_one_degree():
    rng = np.random.default_rng(6)
    phis = np.linspace(0, 2 * np.pi, 91)
    for _ in range(30):
        ax = RotationAxis(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))
        d = rng.uniform(-DEG, DEG, 7)
        vals = perturbed_intensity(ax, rng.uniform(0, 2 * np.pi), phis, d)
        assert not leakage_flag(vals)
    assert leakage_flag([0.5, 1.03]) and leakage_flag([LEAKAGE_BAND[0] - 1e-3])


def test_draw_misalignment():
    rng = np.random.default_rng(7)
    u = draw_misalignment(rng, DEG)
    assert u.shape == (7,) and np.all(np.abs(u) <= DEG)
    n = draw_misalignment(rng, DEG, "normal", size=20000)
    assert np.std(n) == pytest.approx(DEG, rel=0.05)
    with pytest.raises(ValueError):
        draw_misalignment(rng, DEG, "cauchy")


def test_monte_carlo_explains_drift_magnitude():
    # phase gaps caused by (3, -7) degree axis offsets vs the spread of
    # phase deviations produced by +-1 degree plate errors
    s_values = np.radians(np.arange(40, 321, 40))
    nominal = RotationAxis.from_degrees(60, 45)
    realized = nominal.offset(3 * DEG, -7 * DEG)
    panel = np.array([abs(geometric_phase_theory(realized, s) - geometric_phase_theory(nominal, s))
                      for s in s_values])
    drift = monte_carlo_phase_drift(nominal, s_values, DEG, 100, np.random.default_rng(8), n_phi=361)
    assert drift.shape == (100, 8)
    worst = np.abs(drift).max(axis=0)
    late = s_values >= np.radians(200)
    assert np.all(worst[late] >= 0.5 * panel[late])
    # and the drift is not orders of magnitude beyond the observed offsets
    assert worst.max() < 5 * panel.max()


def test_quarter_and_half_derivatives_feed_variations():
    t = u_tot_train(REF, 1.0, 0.0)
    var = plate_variations(t)
    mats = [p.matrix() for p in t]
    expected = np.linalg.multi_dot(mats[:3]) @ (2j * r_matrix(t[3].angle)) @ np.linalg.multi_dot(mats[4:])
    assert np.allclose(var[3], expected)
    assert np.allclose(quarter(0.2) @ quarter(0.2), half(0.2))
