"""Jones-calculus primitives: Pauli basis, SU(2) rotors and the Stokes map.

Matrices and Jones vectors are plain complex numpy arrays of shape (2, 2)
and (2,).  The Pauli triple follows the optics convention in which the
matrix diagonal in the {|h>, |v>} basis is sigma_x::

    sigma_x = [[1, 0], [0, -1]]
    sigma_y = [[0, 1], [1, 0]]
    sigma_z = [[0, -1j], [1j, 0]]

so that sigma_x sigma_y = i sigma_z and the usual cyclic algebra holds.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

UNITARY_TOL = 1e-12
PHASE_EQUAL_TOL = 1e-10

IDENTITY = np.eye(2, dtype=complex)

_PAULI = (
    np.array([[1, 0], [0, -1]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
)

H_STATE = np.array([1, 0], dtype=complex)
V_STATE = np.array([0, 1], dtype=complex)


class OrthogonalStatesError(ValueError):
    """Raised when the phase of a vanishing overlap is requested."""


class NotUnitaryError(ValueError):
    pass


@dataclass(frozen=True)
class RotationAxis:
    """Unit rotation axis given by polar angle ``theta`` and azimuth ``phi``."""

    theta: float
    phi: float

    def __post_init__(self):
        if not (np.isfinite(self.theta) and np.isfinite(self.phi)):
            raise ValueError(f"non-finite axis angles ({self.theta}, {self.phi})")

    @classmethod
    def from_degrees(cls, theta_deg, phi_deg):
        return cls(np.radians(theta_deg), np.radians(phi_deg))

    @property
    def vector(self):
        st = np.sin(self.theta)
        return np.array([st * np.cos(self.phi), st * np.sin(self.phi), np.cos(self.theta)])

    @property
    def hv_projection(self):
        """<h| n.sigma |h> = sin(theta) cos(phi)."""
        return float(np.sin(self.theta) * np.cos(self.phi))

    def offset(self, dtheta, dphi):
        return RotationAxis(self.theta + dtheta, self.phi + dphi)


def pauli(index):
    """Return a copy of sigma_1, sigma_2 or sigma_3 (optics convention)."""
    if index not in (1, 2, 3):
        raise ValueError(f"Pauli index must be 1, 2 or 3, got {index!r}")
    return _PAULI[index - 1].copy()


def n_dot_sigma(n):
    n = np.asarray(n, dtype=float)
    return n[0] * _PAULI[0] + n[1] * _PAULI[1] + n[2] * _PAULI[2]


def su2_rotor(axis, s):
    """exp(-i s n.sigma / 2) for a RotationAxis or an explicit unit 3-vector."""
    n = axis.vector if isinstance(axis, RotationAxis) else np.asarray(axis, dtype=float)
    return np.cos(s / 2) * IDENTITY - 1j * np.sin(s / 2) * n_dot_sigma(n)


def dagger(u):
    return np.conj(np.asarray(u)).T


def is_unitary(u, tol=UNITARY_TOL):
    u = np.asarray(u)
    return bool(
        np.max(np.abs(dagger(u) @ u - IDENTITY)) <= tol
        and abs(abs(np.linalg.det(u)) - 1.0) <= tol
    )


def check_unitary(u, tol=UNITARY_TOL):
    if not is_unitary(u, tol):
        raise NotUnitaryError(f"matrix is not unitary within {tol:g}:\n{u}")
    return u


def phase_distance(u, v):
    """min over unit-modulus lambda of the Frobenius norm ||u - lambda v||."""
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    ip = np.vdot(v, u)
    lam = ip / abs(ip) if abs(ip) > 0 else 1.0
    return float(np.linalg.norm(u - lam * v))


def equal_up_to_phase(u, v, tol=PHASE_EQUAL_TOL):
    return phase_distance(u, v) < tol


def normalize(psi):
    psi = np.asarray(psi, dtype=complex)
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("cannot normalize the zero vector")
    return psi / norm


def arg_overlap(a, b, tol=1e-12):
    """Four-quadrant arg <a|b> in (-pi, pi].

    Raises OrthogonalStatesError when |<a|b>| <= tol.
    """
    z = np.vdot(a, b)
    if abs(z) <= tol:
        raise OrthogonalStatesError(f"|<a|b>| = {abs(z):.3g}; the relative phase is undefined")
    ang = float(np.arctan2(z.imag, z.real))
    # atan2 returns -pi for (negative real, -0.0 imaginary)
    return np.pi if ang == -np.pi else ang


def jones_to_stokes(psi):
    """Stokes vector p_k = <psi|sigma_k|psi> in the optics convention."""
    psi = np.asarray(psi, dtype=complex)
    return np.array([np.vdot(psi, s @ psi).real for s in _PAULI])


def rodrigues(axis_vector, angle, p):
    """Rotate the 3-vector ``p`` about ``axis_vector`` by ``angle`` (right hand)."""
    n = np.asarray(axis_vector, dtype=float)
    p = np.asarray(p, dtype=float)
    c, s = np.cos(angle), np.sin(angle)
    return p * c + np.cross(n, p) * s + n * np.dot(n, p) * (1 - c)


def poincare_path(axis, s_max, steps, initial=H_STATE):
    """Stokes vectors of rotor(axis, s)|initial> at ``steps`` uniform s in [0, s_max].

    Returns ``(s_values, points)`` with ``points`` of shape (steps, 3).
    """
    if steps < 2:
        raise ValueError(f"steps must be >= 2, got {steps}")
    s_values = np.linspace(0.0, s_max, steps)
    points = np.array([jones_to_stokes(su2_rotor(axis, s) @ initial) for s in s_values])
    return s_values, points
