"""First-order analysis of plate-orientation errors in the seven-plate train."""
from __future__ import annotations

import numpy as np

from .jones import IDENTITY
from .phases import ExtremaPair, extract_phase, geometric_phase_theory
from .plates import compose, r_matrix, u_tot_train  # noqa: F401  (r_matrix re-exported)

TRAIN_LENGTH = 7
FIRST_ORDER_GUARD = 0.1
LEAKAGE_BAND = (-0.02, 1.02)


class MisalignmentError(ValueError):
    pass


def misalignment_vector(deltas, guard=FIRST_ORDER_GUARD):
    """Validate seven per-plate offsets (radians) against the first-order guard."""
    d = np.asarray(deltas, dtype=float).reshape(-1)
    if d.shape != (TRAIN_LENGTH,):
        raise MisalignmentError(f"expected {TRAIN_LENGTH} offsets, got {d.size}")
    if guard is not None and np.max(np.abs(d)) > guard:
        raise MisalignmentError(
            f"|delta| = {np.max(np.abs(d)):.3g} rad exceeds first-order guard {guard}"
        )
    return d


def _check_train(train):
    if len(train) != TRAIN_LENGTH:
        raise MisalignmentError(f"expected a {TRAIN_LENGTH}-plate train, got {len(train)} plates")


def _prefix_suffix(mats):
    n = len(mats)
    prefix = [IDENTITY]
    for m in mats:
        prefix.append(prefix[-1] @ m)
    suffix = [IDENTITY] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix[i] = mats[i] @ suffix[i + 1]
    return prefix, suffix


def plate_variations(train):
    """Matrices dU_tot/d(delta_i), i = 1..7, as an array of shape (7, 2, 2).

    Term i is the train product with factor i replaced by its orientation
    derivative (2 i R for the half-wave plate, sqrt(2) i R otherwise).
    """
    _check_train(train)
    mats = [p.matrix() for p in train]
    prefix, suffix = _prefix_suffix(mats)
    return np.array([prefix[i] @ p.derivative() @ suffix[i + 1] for i, p in enumerate(train)])


def first_order_train(train, deltas, guard=FIRST_ORDER_GUARD):
    """U_tot plus the sum of single-factor first-order corrections (not unitary)."""
    _check_train(train)
    d = misalignment_vector(deltas, guard)
    return compose(train) + np.tensordot(d, plate_variations(train), axes=1)


def exact_perturbed(train, deltas):
    """Compose the train with every plate rotated by its offset."""
    d = np.asarray(deltas, dtype=float)
    return compose(train.rotated(d))


def perturbed_intensity(axis, s, phi_shift, deltas, gauge=None, guard=FIRST_ORDER_GUARD):
    """I_delta to first order: |a0|^2 + 2 sum_i Re(conj(a0) delta_i a_i).

    a0 = <h|U_tot|h> and a_i = <h|dU_tot/d(delta_i)|h>.  Accepts a scalar or
    an array of analyzer phases.
    """
    d = misalignment_vector(deltas, guard)
    sens = plate_sensitivities(axis, s, phi_shift, gauge)
    base = intensity_from_train(axis, s, phi_shift, gauge)
    return base + sens @ d


def intensity_from_train(axis, s, phi_shift, gauge=None, deltas=None):
    """|<h|compose(train)|h>|^2, optionally with exactly rotated plates."""
    phis = np.atleast_1d(np.asarray(phi_shift, dtype=float))
    out = np.empty(phis.shape)
    for j, p in enumerate(phis):
        train = u_tot_train(axis, s, p, gauge)
        if deltas is not None:
            train = train.rotated(deltas)
        out[j] = abs(compose(train)[0, 0]) ** 2
    return out if np.ndim(phi_shift) else float(out[0])


def plate_sensitivities(axis, s, phi_shift, gauge=None):
    """dI/d(delta_i): shape (7,) for scalar phi_shift, (len(phi), 7) otherwise."""
    phis = np.atleast_1d(np.asarray(phi_shift, dtype=float))
    out = np.empty((phis.size, TRAIN_LENGTH))
    for j, p in enumerate(phis):
        train = u_tot_train(axis, s, p, gauge)
        a0 = compose(train)[0, 0]
        ai = plate_variations(train)[:, 0, 0]
        out[j] = 2.0 * (np.conj(a0) * ai).real
    return out if np.ndim(phi_shift) else out[0]


def leakage_flag(values, band=LEAKAGE_BAND):
    """True when any first-order intensity leaves the tolerated band."""
    v = np.asarray(values)
    return bool(np.any(v < band[0]) or np.any(v > band[1]))


def numeric_extrema(values):
    """(min, max) of intensities sampled on a dense analyzer-phase grid."""
    v = np.asarray(values, dtype=float)
    return float(v.min()), float(v.max())


def draw_misalignment(rng, spread, distribution="uniform", size=TRAIN_LENGTH):
    """Random plate offsets: uniform on [-spread, spread] or normal with sd ``spread``."""
    if distribution == "uniform":
        return rng.uniform(-spread, spread, size)
    if distribution == "normal":
        return rng.normal(0.0, spread, size)
    raise ValueError(f"unknown misalignment distribution {distribution!r}")


def truncation_defect(train, deltas):
    """Frobenius norm of first-order minus exact product."""
    return float(np.linalg.norm(first_order_train(train, deltas, guard=None) - exact_perturbed(train, deltas)))


def monte_carlo_phase_drift(axis, s_values, spread, draws, rng, distribution="uniform",
                            n_phi=721):
    """Geometric-phase deviations caused by random plate offsets.

    For each draw, the first-order intensity I_delta(phi) is evaluated on a
    dense phi grid over a full turn (plate errors break the pi period); its
    extrema are fed to the extractor and the nominal theory value is
    subtracted.  Returns an array of shape (draws, len(s_values)).
    """
    phis = np.linspace(0.0, 2 * np.pi, n_phi)
    s_values = np.atleast_1d(s_values)
    sens = []
    base = []
    for s in s_values:
        sens.append(plate_sensitivities(axis, s, phis))
        base.append(intensity_from_train(axis, s, phis))
    out = np.empty((draws, s_values.size))
    for t in range(draws):
        d = draw_misalignment(rng, spread, distribution)
        for j, s in enumerate(s_values):
            lo, hi = numeric_extrema(base[j] + sens[j] @ d)
            ext = ExtremaPair.from_measured(lo, hi)
            out[t, j] = extract_phase(ext, s) - geometric_phase_theory(axis, s)
    return out
