"""Flat key-value configuration files and the CSV tables the CLI emits.

Config format: one ``key = value`` per line, ``#`` starts a comment, blank
lines are ignored.  Angles are degrees unless ``units = radians`` (or the
``--radians`` CLI flag) is given.  Grids accept ``start:stop:step`` (stop
inclusive) or a comma-separated list.
"""
from __future__ import annotations

import csv
import math
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .jones import RotationAxis
from .lab import DEFAULT_PHI_GRID, DEFAULT_S_GRID, ScanConfig


class ConfigError(ValueError):
    """Malformed or invalid configuration."""


ANGLE_KEYS = {"axis_theta", "axis_phi", "s", "s_max", "s_grid", "phi_grid", "spread",
              "axis_offset_theta", "axis_offset_phi", "deltas", "span", "step"}

KNOWN_KEYS = ANGLE_KEYS | {
    "units", "repeats", "signal", "accidentals", "misalignment", "distribution", "noise",
    "sigma_mode", "seed", "subsample", "iterations", "workers", "steps", "campaign_csv",
    "max_iters", "tol", "out", "n_phi", "draws", "grid_scan",
}

SCAN_COLUMNS = ("phi_deg", "repeat", "counts", "mean_intensity", "sigma")
CAMPAIGN_COLUMNS = ("s_deg", "phi_g_rad", "err_lo", "err_hi", "flags",
                    "i_min", "i_max", "y", "sigma_y", "theory_rad")
PATH_COLUMNS = ("s_deg", "p1", "p2", "p3")
SENSITIVITY_COLUMNS = ("plate_index", "phi_deg", "dI_ddelta")
PERTURB_COLUMNS = ("phi_deg", "intensity", "intensity_first_order", "intensity_exact")
RECOVERY_COLUMNS = ("iterate", "dtheta_deg", "dphi_deg", "residual")


def parse_text(text):
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key not in KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def read_config_file(path):
    path = Path(path)
    return parse_text(path.read_text())


def parse_grid(text):
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"grid {text!r} must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0:
            raise ConfigError(f"grid step must be positive in {text!r}")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(start + i * step for i in range(n))
    return tuple(float(p) for p in text.split(",") if p.strip())


def _float(values, key, default):
    if key not in values:
        return default
    try:
        return float(values[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not a number: {values[key]!r}") from exc


def _int(values, key, default):
    if key not in values:
        return default
    try:
        return int(values[key])
    except ValueError as exc:
        raise ConfigError(f"{key}: not an integer: {values[key]!r}") from exc


@dataclass(frozen=True)
class CampaignConfig:
    """Parsed configuration with every angle already in radians."""

    axis: RotationAxis
    scan: ScanConfig
    s_grid: tuple = DEFAULT_S_GRID
    s_max: float = 2 * math.pi
    steps: int = 73
    subsample: int = 10
    iterations: int = 40
    workers: int = 1
    deltas: tuple = (0.0,) * 7
    campaign_csv: str | None = None
    max_iters: int = 20
    tol: float = 1e-10
    out: str | None = None
    n_phi: int = 721
    draws: int = 0
    grid_scan: bool = False
    span: float = math.radians(10.0)
    step: float = math.radians(0.5)
    raw: dict = field(default_factory=dict)

    @property
    def seed(self):
        return self.scan.seed


def build_config(values, units=None, seed=None):
    """CampaignConfig from parsed key-value pairs.

    ``units`` and ``seed`` (from CLI flags) override the file.
    """
    units = units or values.get("units", "degrees")
    if units not in ("degrees", "radians"):
        raise ConfigError(f"units must be 'degrees' or 'radians', got {units!r}")
    conv = math.radians if units == "degrees" else float

    def angle(key, default):
        return conv(_float(values, key, default)) if key in values else default

    def grid(key, default):
        if key not in values:
            return default
        try:
            return tuple(conv(v) for v in parse_grid(values[key]))
        except ValueError as exc:
            raise ConfigError(f"{key}: {exc}") from exc

    try:
        axis = RotationAxis(angle("axis_theta", math.pi / 2), angle("axis_phi", math.pi / 3))
        deltas = grid("deltas", (0.0,) * 7)
        if len(deltas) != 7:
            raise ConfigError(f"deltas needs 7 values, got {len(deltas)}")
        seed_value = seed if seed is not None else _int(values, "seed", 0)
        scan = ScanConfig(
            axis=axis,
            s=angle("s", math.pi / 2),
            phi_grid=grid("phi_grid", DEFAULT_PHI_GRID),
            repeats=_int(values, "repeats", 30),
            signal=_float(values, "signal", 1000.0),
            accidentals=_float(values, "accidentals", 0.0),
            misalignment=values.get("misalignment", "none"),
            spread=angle("spread", math.radians(1.0)),
            distribution=values.get("distribution", "uniform"),
            axis_offset=(angle("axis_offset_theta", 0.0), angle("axis_offset_phi", 0.0)),
            noise=values.get("noise", "poisson"),
            sigma_mode=values.get("sigma_mode", "sample"),
            seed=seed_value,
        )
        grid_flag = values.get("grid_scan", "false").lower()
        if grid_flag not in ("true", "false", "yes", "no", "1", "0"):
            raise ConfigError(f"grid_scan must be a boolean, got {grid_flag!r}")
        return CampaignConfig(
            axis=axis,
            scan=scan,
            s_grid=grid("s_grid", DEFAULT_S_GRID),
            s_max=angle("s_max", 2 * math.pi),
            steps=_int(values, "steps", 73),
            subsample=_int(values, "subsample", 10),
            iterations=_int(values, "iterations", 40),
            workers=_int(values, "workers", 1),
            deltas=deltas,
            campaign_csv=values.get("campaign_csv"),
            max_iters=_int(values, "max_iters", 20),
            tol=_float(values, "tol", 1e-10),
            out=values.get("out"),
            n_phi=_int(values, "n_phi", 721),
            draws=_int(values, "draws", 0),
            grid_scan=grid_flag in ("true", "yes", "1"),
            span=angle("span", math.radians(10.0)),
            step=angle("step", math.radians(0.5)),
            raw=dict(values),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path, units=None, seed=None):
    return build_config(read_config_file(path), units=units, seed=seed)


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def write_csv(path, columns, rows):
    """Write a header plus rows atomically (temp file in the target dir, then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(columns)
            for row in rows:
                if len(row) != len(columns):
                    raise ValueError(f"row has {len(row)} fields, expected {len(columns)}")
                writer.writerow([format_value(v) for v in row])
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _convert(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def read_csv(path, columns=None):
    """Rows as dicts with numeric fields converted; checks the header if ``columns`` given."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if columns is not None and tuple(header) != tuple(columns):
            raise ConfigError(f"{path}: header {header} does not match {list(columns)}")
        return [dict(zip(header, (_convert(x) for x in row))) for row in reader]


def scan_rows(scan):
    mean, sigma = scan.mean, scan.sigma
    for j, phi in enumerate(scan.phi):
        for r in range(scan.repeats):
            c = scan.counts[j, r]
            yield (float(np.degrees(phi)), r, c if isinstance(c, (int, np.integer)) else float(c),
                   float(mean[j]), float(sigma[j]))


def flags_text(flags):
    return ";".join(flags) if flags else "-"


def campaign_rows(rows):
    for row in rows:
        e = row.estimate
        y = e.y
        yield (float(np.degrees(row.s)), e.mean, e.err_lo, e.err_hi, flags_text(e.flags),
               e.i_min, e.i_max, y, e.y_sigma, row.theory)
