"""Identity and oracle checks run by ``polarlab verify``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .jones import RotationAxis, H_STATE, phase_distance, su2_rotor
from .phases import (
    geometric_phase_theory,
    intensity_model,
    kinematic_integral,
    nullified_derivative_check,
    rotor_path,
)
from .plates import (
    H,
    Q,
    PlateTrain,
    compose,
    gauge_alpha,
    sandwich_matrix,
    simon_mukunda,
    u_tot_train,
    v_gadget,
    v_matrix,
)


@dataclass(frozen=True)
class CheckResult:
    name: str
    residual: float
    tolerance: float

    @property
    def passed(self):
        return bool(np.isfinite(self.residual) and self.residual < self.tolerance)


def _random_axis(rng):
    return RotationAxis(rng.uniform(0, np.pi), rng.uniform(0, 2 * np.pi))


def run_checks(trials=200, seed=2024, corrupt_plate=0.0):
    """Run every check and return a list of CheckResult.

    ``corrupt_plate`` (radians) is added to the first plate of every
    seven-plate train before composing; a nonzero value must make the
    train checks fail.
    """
    rng = np.random.default_rng(seed)

    def train(axis, s, phi):
        t = u_tot_train(axis, s, phi)
        if corrupt_plate:
            t = t.with_plate(0, t[0].rotated(corrupt_plate))
        return t

    res = {k: 0.0 for k in (
        "Q(a)H(b) = H(b)Q(2b-a)",
        "Q(a)H(b)H(c) = Q(a+pi/2)H(a-b+c-pi/2)",
        "Simon-Mukunda gadget = rotor",
        "V gadget = exponentials",
        "seven-plate train = V^dag U_n V",
        "intensity closed form = plate product",
    )}
    for _ in range(trials):
        a, b, c = rng.uniform(-np.pi, np.pi, 3)
        res["Q(a)H(b) = H(b)Q(2b-a)"] = max(
            res["Q(a)H(b) = H(b)Q(2b-a)"],
            phase_distance(compose([Q(a), H(b)]), compose([H(b), Q(2 * b - a)])))
        res["Q(a)H(b)H(c) = Q(a+pi/2)H(a-b+c-pi/2)"] = max(
            res["Q(a)H(b)H(c) = Q(a+pi/2)H(a-b+c-pi/2)"],
            phase_distance(compose([Q(a), H(b), H(c)]),
                           compose([Q(a + np.pi / 2), H(a - b + c - np.pi / 2)])))
        axis = _random_axis(rng)
        s = rng.uniform(0, 4 * np.pi)
        phi = rng.uniform(0, 2 * np.pi)
        res["Simon-Mukunda gadget = rotor"] = max(
            res["Simon-Mukunda gadget = rotor"],
            phase_distance(compose(simon_mukunda(axis, s)), su2_rotor(axis, s)))
        res["V gadget = exponentials"] = max(
            res["V gadget = exponentials"], phase_distance(compose(v_gadget(phi)), v_matrix(phi)))
        u = compose(train(axis, s, phi))
        res["seven-plate train = V^dag U_n V"] = max(
            res["seven-plate train = V^dag U_n V"], phase_distance(u, sandwich_matrix(axis, s, phi)))
        res["intensity closed form = plate product"] = max(
            res["intensity closed form = plate product"],
            abs(abs(u[0, 0]) ** 2 - intensity_model(axis, s, phi)))

    out = [CheckResult(k, v, 1e-10) for k, v in res.items()]

    worst_phase, worst_gauge = 0.0, 0.0
    for _ in range(10):
        axis = _random_axis(rng)
        s = rng.uniform(0.1, np.pi - 0.1)
        worst_phase = max(worst_phase,
                          abs(kinematic_integral(rotor_path(axis, s, 10_000))
                              - geometric_phase_theory(axis, s)))
        worst_gauge = max(worst_gauge,
                          nullified_derivative_check(axis, np.linspace(0, 2 * np.pi, 13)))
    out.append(CheckResult("geometric phase = discrete kinematic integral", worst_phase, 1e-6))
    out.append(CheckResult("gauge kills Im<psi'|dpsi'>", worst_gauge, 1e-8))

    # empty train and |h> through the identity-like s = 0 train
    empty = phase_distance(compose(PlateTrain()), np.eye(2))
    axis = _random_axis(rng)
    s0 = abs(abs((compose(train(axis, 0.0, 1.0)) @ H_STATE)[0]) ** 2 - 1.0)
    out.append(CheckResult("empty train = identity", empty, 1e-12))
    out.append(CheckResult("s = 0 train leaves |h> intact", s0, 1e-10))
    out.append(CheckResult("gauge alpha(pi/2, pi/3, pi/2) = pi/8",
                           abs(gauge_alpha(RotationAxis(np.pi / 2, np.pi / 3), np.pi / 2) - np.pi / 8),
                           1e-15))
    return out


def format_report(results):
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  {'residual':>10}  {'tol':>8}  status"]
    for r in results:
        lines.append(f"{r.name:<{width}}  {r.residual:>10.3e}  {r.tolerance:>8.0e}  "
                     f"{'PASS' if r.passed else 'FAIL'}")
    return "\n".join(lines)
