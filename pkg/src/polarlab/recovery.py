"""Recover the realized rotation axis from fringe extrema.

Each row gives y(s_i) = (1 - I_max)/(1 - I_min), which for an ideal array
equals f(theta, phi) = sin^2(theta) cos^2(phi) independently of s.  The
linearized update solves A d = b in the weighted least-squares sense, with
every row of A equal to grad f.  A^T W A therefore has rank one and the
Moore-Penrose pseudoinverse selects the minimal-norm step, which points
along grad f.

Only f is identifiable; any (theta, phi) on the same level curve of
|sin(theta) cos(phi)| explains the data equally well.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .jones import RotationAxis
from .phases import ExtremaPair, geometric_phase_from_k, half_angle_from_imin

EXCLUDE_IMIN = 1e-6
GRADIENT_TOL = 1e-10


class GradientZeroError(ValueError):
    """grad f vanishes at the linearization point; nothing to recover."""


class NoValidRowsError(ValueError):
    pass


def f_value(theta, phi):
    return float(np.sin(theta) ** 2 * np.cos(phi) ** 2)


def f_gradient(theta, phi):
    """(df/dtheta, df/dphi) = (sin 2theta cos^2 phi, -sin^2 theta sin 2phi)."""
    return np.array([np.sin(2 * theta) * np.cos(phi) ** 2,
                     -np.sin(theta) ** 2 * np.sin(2 * phi)])


def y_ratio(i_min, i_max, exclude=EXCLUDE_IMIN):
    """Return ``(y, clamped)``; raises ValueError when I_min is within ``exclude`` of 1."""
    denom = 1.0 - i_min
    if denom <= exclude:
        raise ValueError(f"I_min = {i_min!r} too close to 1: ratio undefined")
    y = (1.0 - i_max) / denom
    c = min(max(y, 0.0), 1.0)
    return c, c != y


@dataclass(frozen=True)
class RecoveryRow:
    s: float
    i_min: float
    i_max: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.i_min > self.i_max:
            raise ValueError(f"I_min {self.i_min} exceeds I_max {self.i_max}")


@dataclass(frozen=True)
class RecoveryInput:
    rows: tuple
    nominal: RotationAxis

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    @classmethod
    def from_arrays(cls, s, i_min, i_max, sigma, nominal):
        rows = [RecoveryRow(float(a), float(b), float(c), float(d))
                for a, b, c, d in zip(s, i_min, i_max, sigma)]
        return cls(rows, nominal)

    def valid_data(self, exclude=EXCLUDE_IMIN):
        """(y, w) arrays of the usable rows; rows with I_min near 1 are dropped with a warning."""
        ys, ws = [], []
        for r in self.rows:
            try:
                y, _ = y_ratio(r.i_min, r.i_max, exclude)
            except ValueError:
                warnings.warn(f"row at s={r.s:.4g} excluded: I_min={r.i_min:.6g} ~ 1", stacklevel=3)
                continue
            ys.append(y)
            ws.append(r.sigma ** -2)
        if not ys:
            raise NoValidRowsError("no rows with I_min < 1 - exclude")
        return np.array(ys), np.array(ws)


@dataclass(frozen=True)
class RecoveryResult:
    """Cumulative (dtheta, dphi) relative to the nominal axis."""

    delta: np.ndarray
    history: tuple = ()
    residuals: tuple = ()
    converged: bool = False
    residual: float = math.nan
    nominal: RotationAxis | None = None

    @property
    def axis(self):
        return self.nominal.offset(*self.delta)

    @property
    def f(self):
        a = self.axis
        return f_value(a.theta, a.phi)


@dataclass(frozen=True)
class LsqStep:
    delta: np.ndarray
    closed_form: np.ndarray
    gradient: np.ndarray
    b: np.ndarray
    w: np.ndarray


def _design(theta, phi, n):
    grad = f_gradient(theta, phi)
    if np.linalg.norm(grad) < GRADIENT_TOL:
        raise GradientZeroError(
            f"grad f vanishes at (theta, phi) = ({theta:.6g}, {phi:.6g}); axis not recoverable")
    return grad, np.tile(grad, (n, 1))


def pinv_solution(a, w, b, rcond=1e-12):
    """(A^T W A)^+ A^T W b with the pseudoinverse taken by SVD."""
    atw = a.T * w
    return np.linalg.pinv(atw @ a, rcond=rcond) @ (atw @ b)


def closed_form_solution(grad, w, b):
    """Minimal-norm step for identical rows: grad (sum w b) / (|grad|^2 sum w)."""
    return grad * np.dot(w, b) / (np.dot(grad, grad) * np.sum(w))


def lsq_step(theta, phi, y, w):
    grad, a = _design(theta, phi, y.size)
    b = y - f_value(theta, phi)
    return LsqStep(pinv_solution(a, w, b), closed_form_solution(grad, w, b), grad, b, w)


def weighted_residual(theta, phi, y, w):
    b = y - f_value(theta, phi)
    return float(np.sqrt(np.dot(w, b * b) / np.sum(w)))


def lsq_update(data: RecoveryInput):
    """Single linearized step from the nominal axis."""
    y, w = data.valid_data()
    a = data.nominal
    step = lsq_step(a.theta, a.phi, y, w)
    th, ph = a.theta + step.delta[0], a.phi + step.delta[1]
    res = weighted_residual(th, ph, y, w)
    return RecoveryResult(step.delta, (tuple(step.delta),), (res,), False, res, a)


def iterate_recovery(data: RecoveryInput, max_iters=20, tol=1e-10):
    """Repeat the linearized step until the residual changes by less than ``tol``."""
    y, w = data.valid_data()
    nominal = data.nominal
    th, ph = nominal.theta, nominal.phi
    res = weighted_residual(th, ph, y, w)
    history = [(0.0, 0.0)]
    residuals = [res]
    converged = False
    for _ in range(max_iters):
        step = lsq_step(th, ph, y, w)
        th, ph = th + step.delta[0], ph + step.delta[1]
        new = weighted_residual(th, ph, y, w)
        history.append((th - nominal.theta, ph - nominal.phi))
        residuals.append(new)
        if abs(new - res) < tol:
            converged = True
            res = new
            break
        res = new
    delta = np.array([th - nominal.theta, ph - nominal.phi])
    return RecoveryResult(delta, tuple(history), tuple(residuals), converged, res, nominal)


def delta_s_estimate(s, i_min):
    """|s - 2h| with h the half-angle reproducing I_min on the branch of s/2."""
    if not -1e-12 <= i_min <= 1 + 1e-12:
        raise ValueError(f"I_min must lie in [0, 1], got {i_min}")
    return abs(s - 2.0 * half_angle_from_imin(i_min, s))


def degenerate_family(f_target, nominal: RotationAxis, span=math.radians(10.0), n=201):
    """Offsets (dtheta, dphi) within +/- ``span`` that keep sin^2(theta) cos^2(phi) = f_target.

    For each dtheta on a uniform grid both solutions phi = +/- arccos(...)
    (and their pi-reflections) are kept when they land inside the window.
    """
    out = []
    for dth in np.linspace(-span, span, n):
        st2 = np.sin(nominal.theta + dth) ** 2
        if st2 == 0 or f_target > st2:
            continue
        base = np.arccos(np.sqrt(f_target / st2))
        for cand in (base, -base, np.pi - base, base - np.pi):
            k = np.round((nominal.phi - cand) / (2 * np.pi))
            dph = cand + 2 * np.pi * k - nominal.phi
            if abs(dph) <= span:
                out.append((float(dth), float(dph)))
    return sorted(set(out))


@dataclass(frozen=True)
class GridScanResult:
    best: tuple
    cost: float
    family: tuple = field(default_factory=tuple)
    grid: np.ndarray | None = None
    costs: np.ndarray | None = None


def grid_scan(s_values, phases, nominal: RotationAxis, span=math.radians(10.0),
              step=math.radians(0.5), weights=None, family_tol=None):
    """Trial-and-error search over (dtheta, dphi) in a square window.

    Minimizes sum w (Phi_th(s_i; |k|) - Phi_meas_i)^2.  Because the phase
    only depends on |sin(theta) cos(phi)| the minimizer is degenerate; every
    cell whose cost lies within ``family_tol`` of the best is returned in
    ``family`` (default: 1e-6 relative plus 1e-12 absolute).
    """
    s_values = np.asarray(s_values, dtype=float)
    phases = np.asarray(phases, dtype=float)
    w = np.ones_like(phases) if weights is None else np.asarray(weights, dtype=float)
    offs = np.arange(-span, span + step / 2, step)
    costs = np.empty((offs.size, offs.size))
    for i, dth in enumerate(offs):
        for j, dph in enumerate(offs):
            k = abs(np.sin(nominal.theta + dth) * np.cos(nominal.phi + dph))
            model = np.array([geometric_phase_from_k(k, s) for s in s_values])
            costs[i, j] = float(np.dot(w, (model - phases) ** 2))
    i, j = np.unravel_index(np.argmin(costs), costs.shape)
    best_cost = float(costs[i, j])
    tol = family_tol if family_tol is not None else 1e-6 * best_cost + 1e-12
    fam = tuple((float(offs[a]), float(offs[b])) for a, b in zip(*np.nonzero(costs <= best_cost + tol)))
    return GridScanResult((float(offs[i]), float(offs[j])), best_cost, fam,
                          np.array(np.meshgrid(offs, offs, indexing="ij")), costs)


def fill_sigmas(sigmas, floor=None):
    """Replace non-positive sigmas by ``floor`` (default: smallest positive one).

    All-zero input (noiseless data) becomes all ones.
    """
    sig = np.asarray(sigmas, dtype=float)
    pos = sig[sig > 0]
    if pos.size == 0:
        return np.ones_like(sig)
    return np.where(sig > 0, sig, pos.min() if floor is None else floor)


def rows_from_campaign(campaign_rows, sigma_floor=None):
    """RecoveryRow list from campaign rows, using the bootstrap spread of y as sigma.

    Noiseless campaigns have zero spread; then all rows get unit sigma
    (recovery is invariant under a common rescaling).  Mixed cases floor the
    zeros at the smallest positive sigma or at ``sigma_floor``.
    """
    rows = [r for r in campaign_rows if "singular" not in r.flags and np.isfinite(r.estimate.i_min)]
    sig = fill_sigmas([r.estimate.y_sigma for r in rows], sigma_floor)
    out = []
    for r, sg in zip(rows, sig):
        e = ExtremaPair.from_measured(r.estimate.i_min, r.estimate.i_max)
        out.append(RecoveryRow(r.s, e.i_min, e.i_max, float(sg)))
    return out
