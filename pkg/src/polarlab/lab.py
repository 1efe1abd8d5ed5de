"""Virtual polarimetry lab: noisy fringe scans, sinusoid fits and phase campaigns.

Counting model: for every analyzer phase phi_j and repeat r the coincidence
count is Poisson with mean ``signal * I_true + accidentals``, where I_true
is |<h|U|h>|^2 for the composed (possibly misaligned) seven-plate train.
Intensities are normalized as (counts - accidentals) / signal so that the
s = 0 fringe sits at 1.

Random streams are derived from one master seed with
``numpy.random.SeedSequence``; each s point of a campaign owns its own child
stream, so campaign rows do not depend on evaluation order.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .jones import RotationAxis
from .perturbation import draw_misalignment
from .phases import (
    CLAMP_TOL,
    SINGULAR_EPS,
    ExtremaDomainError,
    ExtremaPair,
    distance_to_singularity,
    extract_phase,
    geometric_phase_theory,
    visibility_ratio,
)
from .plates import compose, gauge_alpha, u_tot_train

DEFAULT_PHI_GRID = tuple(np.radians(np.arange(0.0, 361.0, 40.0)))
DEFAULT_S_GRID = tuple(np.radians(np.arange(40.0, 321.0, 40.0)))

MISALIGNMENT_MODES = ("none", "systematic", "random")
NOISE_MODES = ("poisson", "none")
SIGMA_MODES = ("sample", "gaussian")


class UnderdeterminedFitError(ValueError):
    pass


@dataclass(frozen=True)
class ScanConfig:
    """Settings for one fringe scan.

    ``axis_offset`` (dtheta, dphi) makes the rotor realize a shifted axis
    while the gauge stays that of the nominal ``axis``; this is the
    axis-level way of injecting a systematic error.  ``spread`` is the
    per-plate orientation scale used by the ``systematic`` and ``random``
    misalignment modes.
    """

    axis: RotationAxis
    s: float = 0.0
    phi_grid: tuple = DEFAULT_PHI_GRID
    repeats: int = 30
    signal: float = 1000.0
    accidentals: float = 0.0
    misalignment: str = "none"
    spread: float = math.radians(1.0)
    distribution: str = "uniform"
    axis_offset: tuple = (0.0, 0.0)
    noise: str = "poisson"
    sigma_mode: str = "sample"
    seed: int | None = 0

    def __post_init__(self):
        object.__setattr__(self, "phi_grid", tuple(float(p) for p in self.phi_grid))
        object.__setattr__(self, "axis_offset", tuple(float(v) for v in self.axis_offset))
        if self.repeats < 1:
            raise ValueError(f"repeats must be >= 1, got {self.repeats}")
        if self.signal < 0 or self.accidentals < 0:
            raise ValueError("signal and accidental rates must be non-negative")
        if len(self.phi_grid) < 1 or np.any(np.diff(self.phi_grid) <= 0):
            raise ValueError("phi grid must be non-empty and strictly increasing")
        if self.misalignment not in MISALIGNMENT_MODES:
            raise ValueError(f"misalignment must be one of {MISALIGNMENT_MODES}")
        if self.noise not in NOISE_MODES:
            raise ValueError(f"noise must be one of {NOISE_MODES}")
        if self.sigma_mode not in SIGMA_MODES:
            raise ValueError(f"sigma_mode must be one of {SIGMA_MODES}")
        if len(self.axis_offset) != 2:
            raise ValueError("axis_offset must be a (dtheta, dphi) pair")

    @property
    def realized_axis(self):
        return self.axis.offset(*self.axis_offset)

    def with_s(self, s):
        return replace(self, s=float(s))


@dataclass
class IntensityScan:
    """Raw counts of one scan, shape (n_phi, repeats), plus normalization."""

    phi: np.ndarray
    counts: np.ndarray
    normalization: float
    background: float = 0.0
    s: float = 0.0
    axis: RotationAxis | None = None
    true_intensity: np.ndarray | None = None
    deltas: np.ndarray | None = None
    sigma_mode: str = "sample"

    @property
    def repeats(self):
        return self.counts.shape[1]

    @property
    def intensities(self):
        return (self.counts - self.background) / self.normalization

    @property
    def mean(self):
        return self.intensities.mean(axis=1)

    @property
    def sigma(self):
        """Per-phi spread of single acquisitions."""
        x = self.intensities
        if self.repeats < 2:
            return np.zeros(x.shape[0])
        if self.sigma_mode == "gaussian":
            return np.array([stats.norm.fit(row)[1] for row in x])
        return x.std(axis=1, ddof=1)

    @property
    def sem(self):
        return self.sigma / np.sqrt(self.repeats)

    def subset(self, columns):
        """Scan restricted to the given repeat indices, one index array per phi row."""
        columns = np.asarray(columns)
        if columns.ndim == 1:
            picked = self.counts[:, columns]
        else:
            picked = np.take_along_axis(self.counts, columns, axis=1)
        return replace(self, counts=picked)


def _train_intensity(config, phi, deltas):
    realized = config.realized_axis
    train = u_tot_train(realized, config.s, phi, gauge=gauge_alpha(config.axis, config.s))
    if deltas is not None:
        train = train.rotated(deltas)
    return abs(compose(train)[0, 0]) ** 2


def child_seeds(seed, n):
    """``n`` child sequences of ``seed`` (int or SeedSequence), without spawn state.

    ``SeedSequence.spawn`` counts previous calls; building the children from
    the spawn key keeps repeated calls on the same parent reproducible.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.SeedSequence(ss.entropy, spawn_key=ss.spawn_key + (i,)) for i in range(n)]


def _streams(seed):
    mis, counts = child_seeds(seed, 2)
    return np.random.default_rng(mis), np.random.default_rng(counts)


def run_scan(config, seed=None, deltas=None):
    """Simulate one fringe scan.

    ``seed`` (int or SeedSequence) overrides ``config.seed``.  ``deltas``
    fixes the per-plate offsets for the systematic mode; otherwise they are
    drawn from the scan's own misalignment stream.
    """
    mis_rng, count_rng = _streams(config.seed if seed is None else seed)
    phis = np.asarray(config.phi_grid)
    n = phis.size
    per_setting = None
    if config.misalignment == "systematic":
        if deltas is None:
            deltas = draw_misalignment(mis_rng, config.spread, config.distribution)
        deltas = np.asarray(deltas, dtype=float)
    elif config.misalignment == "random":
        per_setting = np.array([draw_misalignment(mis_rng, config.spread, config.distribution)
                                for _ in range(n)])
        deltas = per_setting
    else:
        deltas = None

    truth = np.empty(n)
    for j, p in enumerate(phis):
        d = per_setting[j] if per_setting is not None else deltas
        truth[j] = _train_intensity(config, p, d)

    lam = config.signal * truth + config.accidentals
    lam = np.repeat(lam[:, None], config.repeats, axis=1)
    if config.noise == "poisson":
        counts = count_rng.poisson(lam)
    else:
        counts = lam.astype(float)
    return IntensityScan(
        phi=phis,
        counts=counts,
        normalization=float(config.signal),
        background=float(config.accidentals),
        s=config.s,
        axis=config.axis,
        true_intensity=truth,
        deltas=deltas,
        sigma_mode=config.sigma_mode,
    )


@dataclass(frozen=True)
class FitResult:
    """I(phi) = c0 + c1 cos(2 phi) + c2 sin(2 phi)."""

    coefficients: np.ndarray
    covariance: np.ndarray
    residual: float
    weighted: bool

    @property
    def amplitude(self):
        return float(np.hypot(self.coefficients[1], self.coefficients[2]))

    @property
    def i_max(self):
        return float(self.coefficients[0]) + self.amplitude

    @property
    def i_min(self):
        return float(self.coefficients[0]) - self.amplitude

    def __call__(self, phi):
        c0, c1, c2 = self.coefficients
        return c0 + c1 * np.cos(2 * phi) + c2 * np.sin(2 * phi)

    def extrema(self, tol=CLAMP_TOL):
        return ExtremaPair.from_measured(self.i_min, self.i_max, tol)


def design_matrix(phi):
    phi = np.asarray(phi, dtype=float)
    return np.column_stack([np.ones_like(phi), np.cos(2 * phi), np.sin(2 * phi)])


def fit_sinusoid(scan=None, *, phi=None, values=None, sigma=None):
    """Weighted linear least squares for the second-harmonic fringe.

    Weights are 1/sem^2 of the per-phi means.  If any sem is zero (noiseless
    data) the fit falls back to ordinary least squares.
    """
    if scan is not None:
        phi, values, sigma = scan.phi, scan.mean, scan.sem
    phi = np.asarray(phi, dtype=float)
    values = np.asarray(values, dtype=float)
    if np.unique(phi).size < 4:
        raise UnderdeterminedFitError("need at least 4 distinct phi points for 3 parameters")
    a = design_matrix(phi)
    if np.linalg.matrix_rank(a) < 3:
        raise UnderdeterminedFitError("phi grid does not resolve the cos/sin(2 phi) harmonics")

    weighted = sigma is not None and np.all(np.asarray(sigma) > 0)
    if weighted:
        w = 1.0 / np.asarray(sigma, dtype=float)
        aw, bw = a * w[:, None], values * w
    else:
        aw, bw = a, values
    coef, *_ = np.linalg.lstsq(aw, bw, rcond=None)
    r = bw - aw @ coef
    chi2 = float(r @ r)
    normal_inv = np.linalg.inv(aw.T @ aw)
    dof = phi.size - 3
    if weighted:
        cov = normal_inv
    else:
        cov = normal_inv * (chi2 / dof if dof > 0 else 0.0)
    return FitResult(coef, cov, chi2, weighted)


@dataclass(frozen=True)
class PhaseEstimate:
    """Bootstrap estimate of the geometric phase at one s.

    ``lower``/``upper`` are the minimum and maximum of the bootstrap series;
    the error bars are their departures from ``mean``.
    """

    mean: float
    lower: float
    upper: float
    iterations: int
    flags: tuple = ()
    samples: np.ndarray = field(default_factory=lambda: np.empty(0))
    y_samples: np.ndarray = field(default_factory=lambda: np.empty(0))
    full: float = math.nan
    i_min: float = math.nan
    i_max: float = math.nan

    @property
    def err_lo(self):
        return self.mean - self.lower

    @property
    def err_hi(self):
        return self.upper - self.mean

    @property
    def std(self):
        return float(np.std(self.samples, ddof=1)) if self.samples.size > 1 else 0.0

    @property
    def y(self):
        return float(np.mean(self.y_samples)) if self.y_samples.size else math.nan

    @property
    def y_sigma(self):
        return float(np.std(self.y_samples, ddof=1)) if self.y_samples.size > 1 else 0.0

    def contains(self, value):
        return bool(self.lower <= value <= self.upper)


def _estimate_from(scan, s, eps):
    fit = fit_sinusoid(scan)
    ext = fit.extrema()
    return extract_phase(ext, s, eps), visibility_ratio(ext), ext


def bootstrap_phase(scan, s=None, subsample=10, iterations=40, rng=None, eps=SINGULAR_EPS):
    """Refit ``iterations`` random subsamples (without replacement per phi)."""
    s = scan.s if s is None else s
    if subsample > scan.repeats:
        raise ValueError(f"subsample {subsample} exceeds the {scan.repeats} repeats available")
    if subsample < 1 or iterations < 1:
        raise ValueError("subsample and iterations must be positive")
    if distance_to_singularity(s) < eps:
        nan = math.nan
        return PhaseEstimate(nan, nan, nan, 0, ("singular",))
    rng = np.random.default_rng(rng)
    flags = set()

    full, _, ext = _estimate_from(scan, s, eps)
    if ext.clamped:
        flags.add("clamped")

    values, ys = [], []
    n_phi = scan.counts.shape[0]
    for _ in range(iterations):
        cols = rng.random((n_phi, scan.repeats)).argsort(axis=1)[:, :subsample]
        try:
            v, y, e = _estimate_from(scan.subset(cols), s, eps)
        except ExtremaDomainError:
            flags.add("domain")
            continue
        if e.clamped:
            flags.add("clamped")
        values.append(v)
        ys.append(y)
    if not values:
        nan = math.nan
        return PhaseEstimate(nan, nan, nan, 0, tuple(sorted(flags | {"failed"})), full=full,
                             i_min=ext.i_min, i_max=ext.i_max)
    values = np.array(values)
    return PhaseEstimate(
        mean=float(values.mean()),
        lower=float(values.min()),
        upper=float(values.max()),
        iterations=values.size,
        flags=tuple(sorted(flags)),
        samples=values,
        y_samples=np.array(ys),
        full=full,
        i_min=ext.i_min,
        i_max=ext.i_max,
    )


@dataclass(frozen=True)
class CampaignRow:
    s: float
    estimate: PhaseEstimate
    theory: float
    realized_theory: float

    @property
    def flags(self):
        return self.estimate.flags


def _theory_or_nan(axis, s, eps):
    if distance_to_singularity(s) < eps:
        return math.nan
    return geometric_phase_theory(axis, s, eps)


def _campaign_point(args):
    config, s, child, deltas, subsample, iterations, eps = args
    cfg = config.with_s(s)
    scan_ss, boot_ss = child_seeds(child, 2)
    scan = run_scan(cfg, seed=scan_ss, deltas=deltas)
    est = bootstrap_phase(scan, s, subsample, iterations, np.random.default_rng(boot_ss), eps)
    return CampaignRow(s, est, _theory_or_nan(cfg.axis, s, eps),
                       _theory_or_nan(cfg.realized_axis, s, eps))


def run_campaign(config, s_grid=DEFAULT_S_GRID, subsample=10, iterations=40,
                 workers=1, eps=SINGULAR_EPS):
    """Scan + bootstrap at every s of ``s_grid``; rows returned in grid order.

    In ``systematic`` mode a single set of plate offsets is drawn for the whole
    campaign.  ``workers > 1`` distributes s points over processes; results
    are identical to the serial run.
    """
    mis_ss, *children = child_seeds(config.seed, 1 + len(s_grid))
    deltas = None
    if config.misalignment == "systematic":
        deltas = draw_misalignment(np.random.default_rng(mis_ss), config.spread, config.distribution)
    tasks = [(config, float(s), c, deltas, subsample, iterations, eps)
             for s, c in zip(s_grid, children)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_campaign_point, tasks))
    return [_campaign_point(t) for t in tasks]


@dataclass(frozen=True)
class G2Result:
    value: float
    nonclassical: bool


def g2_statistic(n_g, n_gt, n_gr, n_gtr):
    """Heralded second-order coherence N_GTR N_G / (N_GT N_GR)."""
    if n_gt <= 0 or n_gr <= 0:
        raise ZeroDivisionError("N_GT and N_GR must be positive")
    value = n_gtr * n_g / (n_gt * n_gr)
    return G2Result(float(value), value < 1.0)


def heralded_counts(g2, n_gate, n_gt, n_gr, rng):
    """One synthetic acquisition of (N_G, N_GT, N_GR, N_GTR).

    Every count is Poisson; the triple-coincidence mean is chosen so the
    expected ratio equals ``g2``.
    """
    rng = np.random.default_rng(rng)
    lam_gtr = g2 * n_gt * n_gr / n_gate
    return (int(rng.poisson(n_gate)), int(rng.poisson(n_gt)),
            int(rng.poisson(n_gr)), int(rng.poisson(lam_gtr)))
