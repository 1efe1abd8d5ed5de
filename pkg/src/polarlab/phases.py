"""Pancharatnam, dynamical and geometric phases of the rotor evolution.

The evolving state is psi(s) = U_n(s)|h>.  All phases are full-branch
values obtained with ``atan2``: for k = sin(theta) cos(phi) > 0 the
Pancharatnam phase jumps by -pi on (pi, 2pi) and by +pi on (2pi, 3pi)
relative to the principal-value ``-arctan(k tan(s/2))``.

At s = pi (mod 2 pi) cos(s/2) vanishes and the geometric phase is
undefined; every function that depends on that branch raises
``SingularityError`` inside a window ``|s - pi| < eps``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jones import (
    H_STATE,
    OrthogonalStatesError,
    RotationAxis,
    arg_overlap,
    dagger,
    su2_rotor,
)
from .plates import gauge_alpha, v_matrix

SINGULAR_EPS = 1e-6
CLAMP_TOL = 0.02


class SingularityError(ValueError):
    """s lies inside the exclusion window around pi (mod 2 pi)."""


class ExtremaDomainError(ValueError):
    """Fringe extrema fall outside [0, 1] by more than the clamping tolerance."""


def distance_to_singularity(s):
    """|s - pi| reduced modulo 2 pi."""
    return float(abs(np.mod(s, 2 * np.pi) - np.pi))


def check_regular(s, eps=SINGULAR_EPS):
    if distance_to_singularity(s) < eps:
        raise SingularityError(f"s = {s!r} is within {eps:g} of pi: geometric phase undefined")


@dataclass(frozen=True)
class PhaseBreakdown:
    pancharatnam: float
    dynamical: float
    geometric: float
    s: float
    axis: RotationAxis


def overlap_amplitude(axis, s):
    """<h|U_n(s)|h> = cos(s/2) - i sin(theta) cos(phi) sin(s/2)."""
    return np.cos(s / 2) - 1j * axis.hv_projection * np.sin(s / 2)


def pancharatnam_phase(axis, s, eps=SINGULAR_EPS):
    check_regular(s, eps)
    z = overlap_amplitude(axis, s)
    if abs(z) <= 1e-12:
        raise OrthogonalStatesError("final state orthogonal to |h>")
    return float(np.angle(z))


def dynamical_phase(axis, s):
    return -0.5 * s * axis.hv_projection


def _geometric_from_k(k, s):
    return 0.5 * s * k + np.angle(np.cos(s / 2) - 1j * k * np.sin(s / 2))


def geometric_phase_from_k(k, s, eps=SINGULAR_EPS):
    """Geometric phase as a function of k = sin(theta) cos(phi) only."""
    check_regular(s, eps)
    return float(_geometric_from_k(k, s))


def geometric_phase_theory(axis, s, eps=SINGULAR_EPS):
    return pancharatnam_phase(axis, s, eps) - dynamical_phase(axis, s)


def phase_breakdown(axis, s, eps=SINGULAR_EPS):
    p = pancharatnam_phase(axis, s, eps)
    d = dynamical_phase(axis, s)
    return PhaseBreakdown(p, d, p - d, s, axis)


def rotor_path(axis, s, steps):
    """States U_n(s_k)|h> at ``steps + 1`` uniform points of [0, s]."""
    grid = np.linspace(0.0, s, steps + 1)
    return np.array([su2_rotor(axis, x) @ H_STATE for x in grid])


def kinematic_integral(states):
    """Discrete geometric phase of a sampled path of Jones vectors.

    arg<psi_0|psi_N> minus the sum of arg<psi_k|psi_{k+1}>, each term being
    the local increment of the integrated Im<psi|dpsi>.  The phase factors
    of individual samples cancel term by term, so the value is exactly
    invariant under a gauge change of the samples; the error relative to
    the continuum value is O(h^2) in the step size.
    """
    states = np.asarray(states, dtype=complex)
    if states.ndim != 2 or states.shape[0] < 3:
        raise ValueError("need at least 3 sampled states")
    ovl = np.einsum("ki,ki->k", np.conj(states[:-1]), states[1:])
    if np.any(np.abs(ovl) <= 1e-12):
        raise OrthogonalStatesError("consecutive path samples are orthogonal")
    return arg_overlap(states[0], states[-1]) - float(np.sum(np.angle(ovl)))


def nullified_derivative_check(axis, s_grid, h=1e-5):
    """max over ``s_grid`` of |Im<psi'|dpsi'/ds>| for the gauged state.

    psi'(s) = exp(i alpha(s)) U_n(s)|h>; derivative by central differences.
    """
    def gauged(x):
        return np.exp(1j * gauge_alpha(axis, x)) * (su2_rotor(axis, x) @ H_STATE)

    worst = 0.0
    for s in np.atleast_1d(s_grid):
        dpsi = (gauged(s + h) - gauged(s - h)) / (2 * h)
        worst = max(worst, abs(np.vdot(gauged(s), dpsi).imag))
    return worst


def intensity_model(axis, s, phi_shift, gauge=None):
    """Closed-form fringe intensity |<h|V^dag U_n V|h>|^2."""
    alpha = gauge_alpha(axis, s) if gauge is None else gauge
    th, ph = axis.theta, axis.phi
    d = alpha - np.asarray(phi_shift, dtype=float)
    bracket = np.cos(th) * np.cos(d) + np.sin(th) * np.sin(ph) * np.sin(d)
    return np.cos(s / 2) ** 2 + np.sin(s / 2) ** 2 * bracket**2


def intensity_direct(axis, s, phi_shift, gauge=None):
    """Same intensity computed from the explicit exponentials V and U_n."""
    alpha = gauge_alpha(axis, s) if gauge is None else gauge
    v = v_matrix(phi_shift - alpha)
    amp = (dagger(v) @ su2_rotor(axis, s) @ v)[0, 0]
    return float(abs(amp) ** 2)


@dataclass(frozen=True)
class ExtremaPair:
    i_min: float
    i_max: float
    clamped: bool = False

    def __post_init__(self):
        if self.i_min > self.i_max:
            raise ValueError(f"I_min={self.i_min} exceeds I_max={self.i_max}")

    @classmethod
    def from_measured(cls, i_min, i_max, tol=CLAMP_TOL):
        """Clamp noisy extrema into [0, 1], flagging any change.

        Values more than ``tol`` outside the unit interval raise
        ``ExtremaDomainError``.
        """
        lo, hi = float(i_min), float(i_max)
        if lo > hi:
            lo, hi = hi, lo
        for v in (lo, hi):
            if v < -tol or v > 1 + tol:
                raise ExtremaDomainError(f"extremum {v:.4f} outside [0, 1] beyond tolerance {tol}")
        c_lo, c_hi = min(max(lo, 0.0), 1.0), min(max(hi, 0.0), 1.0)
        return cls(c_lo, c_hi, clamped=(c_lo != lo or c_hi != hi))


def intensity_extrema(axis, s):
    c2 = np.cos(s / 2) ** 2
    s2 = np.sin(s / 2) ** 2
    th, ph = axis.theta, axis.phi
    visible = np.cos(th) ** 2 + (np.sin(th) * np.sin(ph)) ** 2
    return ExtremaPair(float(c2), float(c2 + s2 * visible))


def visibility_ratio(extrema):
    """(1 - I_max)/(1 - I_min), clamped to [0, 1]."""
    denom = 1.0 - extrema.i_min
    if denom <= 1e-12:
        raise ZeroDivisionError("I_min = 1: visibility ratio undefined")
    return min(max((1.0 - extrema.i_max) / denom, 0.0), 1.0)


def half_angle_from_imin(i_min, s):
    """Angle with cos^2 equal to ``i_min`` on the same quarter-turn branch as s/2.

    On 0 < s/2 < pi/2 this is arccos(sqrt(I_min)); on pi/2 < s/2 < pi it is
    arccos(-sqrt(I_min)), and so on by reflection.
    """
    a = float(np.arccos(np.sqrt(min(max(i_min, 0.0), 1.0))))
    half_s = 0.5 * s
    turn = np.floor(half_s / np.pi)
    r = half_s - turn * np.pi
    base = a if r <= np.pi / 2 else np.pi - a
    return float(turn * np.pi + base)


def extract_phase(extrema, s, eps=SINGULAR_EPS):
    """Geometric phase from fringe extrema at known s.

    For 0 < s < pi this is sqrt(y) arccos(sqrt(I_min)) - arctan(t) with
    y = (1 - I_max)/(1 - I_min) and t = sqrt((1 - I_max)/I_min); for
    pi < s < 2pi the arccos takes -sqrt(I_min), the arctan changes sign and
    -pi is added; for 2pi < s < 3pi the branch continues with +pi.  The
    general rule is sqrt(y) h + atan2(-sqrt(y) sin h, cos h), with h the
    half-angle on s/2's branch reproducing I_min.  The result is odd in s.

    Only |sin(theta) cos(phi)| is visible in the extrema, so the value
    returned is the one for a positive projection.
    """
    check_regular(s, eps)
    if s < 0:
        return -extract_phase(extrema, -s, eps)
    if s == 0:
        return 0.0
    k = np.sqrt(visibility_ratio(extrema))
    h = half_angle_from_imin(extrema.i_min, s)
    c = np.cos(h)
    if abs(c) < 1e-300:
        raise SingularityError("measured I_min = 0: branch of the arctangent undefined")
    # |t| = sqrt((1 - I_max)/I_min) = k |tan h|, signed by the branch of h
    t_mag = np.sqrt(max(1.0 - extrema.i_max, 0.0) / max(extrema.i_min, 1e-300))
    t = np.copysign(t_mag, np.tan(h))
    offset = 0.0
    if c < 0:
        offset = -np.pi if np.sin(h) > 0 else np.pi
    return float(k * h - np.arctan(t) + offset)
