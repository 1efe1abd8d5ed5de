"""Wave-plate matrices, plate trains and the gadgets built from them.

Plate convention.  With M(x) = cos(2x) sigma_x + sin(2x) sigma_y (the real
symmetric matrix [[cos 2x, sin 2x], [sin 2x, -cos 2x]]) we take

    Q(x) = (I - i M(x)) / sqrt(2)        H(x) = -i M(x)

so that Q(x)^2 = H(x), H(x)^2 = -I and the orientation derivatives are
dQ/dx = sqrt(2) i R(x), dH/dx = 2 i R(x) with

    R(x) = [[sin 2x, -cos 2x], [-cos 2x, -sin 2x]].

Train order.  A ``PlateTrain`` lists its plates in *written product order*:
``train.plates[0]`` is the leftmost factor and therefore the last plate the
beam traverses.  ``compose`` returns ``M0 @ M1 @ ... @ M_{n-1}``.  Use
``PlateTrain.traversal()`` for the order in which light meets the plates.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .jones import IDENTITY, RotationAxis, dagger, pauli, su2_rotor

HALF = "half"
QUARTER = "quarter"
_KINDS = (HALF, QUARTER)

_SQRT2 = np.sqrt(2.0)


def _m(x):
    c, s = np.cos(2 * x), np.sin(2 * x)
    return np.array([[c, s], [s, -c]], dtype=complex)


def quarter(x):
    """Quarter-wave plate with its major axis at ``x`` rad from vertical."""
    return (IDENTITY - 1j * _m(x)) / _SQRT2


def half(x):
    """Half-wave plate with its major axis at ``x`` rad from vertical."""
    return -1j * _m(x)


def r_matrix(x):
    """Orientation-derivative generator: dQ = sqrt(2) i delta R, dH = 2 i delta R."""
    c, s = np.cos(2 * x), np.sin(2 * x)
    return np.array([[s, -c], [-c, -s]], dtype=complex)


def plate_derivative(kind, x):
    """d/dx of the plate matrix of ``kind`` at orientation ``x``."""
    if kind == HALF:
        return 2j * r_matrix(x)
    if kind == QUARTER:
        return _SQRT2 * 1j * r_matrix(x)
    raise ValueError(f"unknown plate kind {kind!r}")


@dataclass(frozen=True)
class PlateSetting:
    kind: str
    angle: float

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"plate kind must be one of {_KINDS}, got {self.kind!r}")
        if not np.isfinite(self.angle):
            raise ValueError(f"non-finite plate angle {self.angle!r}")

    def matrix(self):
        return half(self.angle) if self.kind == HALF else quarter(self.angle)

    def derivative(self):
        return plate_derivative(self.kind, self.angle)

    def rotated(self, delta):
        return replace(self, angle=self.angle + delta)

    @property
    def symbol(self):
        return "H" if self.kind == HALF else "Q"


def Q(x):
    return PlateSetting(QUARTER, x)


def H(x):
    return PlateSetting(HALF, x)


@dataclass(frozen=True)
class PlateTrain:
    """Ordered plates, leftmost factor of the written product first."""

    plates: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "plates", tuple(self.plates))

    def __len__(self):
        return len(self.plates)

    def __iter__(self):
        return iter(self.plates)

    def __getitem__(self, i):
        return self.plates[i]

    def __add__(self, other):
        return PlateTrain(self.plates + tuple(other))

    def traversal(self):
        """Plates in the order the beam meets them."""
        return tuple(reversed(self.plates))

    def rotated(self, deltas):
        deltas = np.broadcast_to(np.asarray(deltas, dtype=float), (len(self),))
        return PlateTrain(p.rotated(d) for p, d in zip(self.plates, deltas))

    def with_plate(self, index, setting):
        plates = list(self.plates)
        plates[index] = setting
        return PlateTrain(plates)

    def matrix(self):
        return compose(self)

    def to_table(self, degrees=True):
        """Rows of (index, kind, angle) with 1-based index in written order."""
        conv = np.degrees if degrees else (lambda a: a)
        return [(i + 1, p.kind, float(conv(p.angle))) for i, p in enumerate(self.plates)]

    def format_table(self):
        lines = [f"{'#':>2}  {'kind':<8} {'angle_deg':>12}"]
        for i, kind, ang in self.to_table():
            lines.append(f"{i:>2}  {kind:<8} {ang:>12.6f}")
        return "\n".join(lines)

    def __str__(self):
        return " ".join(f"{p.symbol}({np.degrees(p.angle):.4g}deg)" for p in self.plates)


def compose(train: Iterable[PlateSetting]):
    """Written-order matrix product of the plates; identity for an empty train."""
    out = IDENTITY.copy()
    for p in train:
        out = out @ p.matrix()
    return out


def simon_mukunda(axis: RotationAxis, s):
    """Five-plate Q Q H Q Q train realizing the rotor exp(-i s n.sigma/2)."""
    th, ph = axis.theta, axis.phi
    return PlateTrain((
        Q((np.pi + ph) / 2),
        Q((th + ph) / 2),
        H((-np.pi + th + ph) / 2 + s / 4),
        Q((th + ph) / 2),
        Q(ph / 2),
    ))


def v_gadget(gamma):
    """Three-plate realization of V(gamma) = Q(pi/4) H((gamma - pi)/4) H(pi/4)."""
    return PlateTrain((Q(np.pi / 4), H((gamma - np.pi) / 4), H(np.pi / 4)))


def v_matrix(gamma):
    """Closed form of V(gamma) as a product of exponentials.

    In the optics labelling used here this is
    exp(-i gamma sigma_1 / 2) exp(-i pi sigma_2 / 4): the phase shifter acts
    about the hv-diagonal axis and the pi/2 turn takes |h> to (|h> - i|v>)/sqrt(2).
    """
    s1, s2 = pauli(1), pauli(2)
    shift = np.cos(gamma / 2) * IDENTITY - 1j * np.sin(gamma / 2) * s1
    turn = (IDENTITY - 1j * s2) / _SQRT2
    return shift @ turn


def gauge_alpha(axis: RotationAxis, s):
    """Gauge angle (s/2) sin(theta) cos(phi) that cancels the dynamical phase."""
    return 0.5 * s * axis.hv_projection


def u_tot_train(axis: RotationAxis, s, phi_shift, gauge=None):
    """The seven-plate train realizing V^dagger(gamma) U_n V(gamma).

    gamma = phi_shift - alpha, where alpha is ``gauge_alpha(axis, s)`` unless
    ``gauge`` is given explicitly (e.g. the gauge of a nominal axis while the
    rotor realizes a misaligned one).  Plate 4 is the single half-wave plate.
    """
    th, ph = axis.theta, axis.phi
    alpha = gauge_alpha(axis, s) if gauge is None else gauge
    g = (phi_shift - alpha) / 2
    return PlateTrain((
        Q(np.pi / 4 - g),
        Q(-np.pi - ph / 2 - g),
        Q((np.pi - th - ph) / 2 - g),
        H((-th - ph) / 2 - s / 4 - g),
        Q((np.pi - th - ph) / 2 - g),
        Q((np.pi - ph) / 2 - g),
        Q(-np.pi / 4 - g),
    ))


def sandwich_matrix(axis: RotationAxis, s, phi_shift, gauge=None):
    """V^dagger U_n V built from the closed-form exponentials (no plates)."""
    alpha = gauge_alpha(axis, s) if gauge is None else gauge
    v = v_matrix(phi_shift - alpha)
    return dagger(v) @ su2_rotor(axis, s) @ v


def u_tot_up_train(axis: RotationAxis, s, phi_shift, gauge=None):
    """Unreduced 11-plate form H H Q [Simon-Mukunda] Q H H of the same transformation."""
    alpha = gauge_alpha(axis, s) if gauge is None else gauge
    gamma = phi_shift - alpha
    head = (H(-np.pi / 4), H((gamma + np.pi) / 4), Q(-np.pi / 4))
    tail = (Q(np.pi / 4), H((gamma - np.pi) / 4), H(np.pi / 4))
    return PlateTrain(head) + simon_mukunda(axis, s) + tail
