"""Command-line front end: ``polarlab {verify,path,scan,campaign,perturb,recover}``.

Exit codes: 0 success, 1 verification failure, 2 usage error, 3 missing
file, 4 config/CSV parse error, 5 invariant violation.
"""
from __future__ import annotations

import argparse
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import records
from .jones import RotationAxis, poincare_path
from .lab import bootstrap_phase, fit_sinusoid, run_campaign, run_scan
from .perturbation import (
    exact_perturbed,
    first_order_train,
    leakage_flag,
    monte_carlo_phase_drift,
    plate_sensitivities,
)
from .plates import u_tot_train
from .recovery import (
    RecoveryInput,
    RecoveryRow,
    degenerate_family,
    delta_s_estimate,
    fill_sigmas,
    grid_scan,
    iterate_recovery,
)
from .verify import format_report, run_checks

log = logging.getLogger("polarlab")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_MISSING_FILE = 3
EXIT_PARSE = 4
EXIT_INVARIANT = 5


def _out_dir(args, cfg=None):
    out = args.out or (cfg.out if cfg is not None else None) or "."
    return Path(out)


def _config(args):
    if not args.config:
        values = {}
    else:
        values = records.read_config_file(args.config)
    return records.build_config(values, units=args.units, seed=args.seed)


def cmd_verify(args):
    results = run_checks(corrupt_plate=math.radians(args.corrupt_plate))
    print(format_report(results))
    failed = [r.name for r in results if not r.passed]
    if failed:
        print("FAILED: " + ", ".join(failed))
        return EXIT_VERIFY_FAILED
    print(f"all {len(results)} checks passed")
    return EXIT_OK


def cmd_path(args):
    cfg = _config(args)
    axis = cfg.axis
    if args.theta is not None:
        axis = RotationAxis(math.radians(args.theta), axis.phi)
    if args.phi is not None:
        axis = RotationAxis(axis.theta, math.radians(args.phi))
    s_max = math.radians(args.s_max) if args.s_max is not None else cfg.s_max
    steps = args.steps if args.steps is not None else cfg.steps
    s_values, pts = poincare_path(axis, s_max, steps)
    rows = [(float(np.degrees(s)), *map(float, p)) for s, p in zip(s_values, pts)]
    path = records.write_csv(_out_dir(args, cfg) / "path.csv", records.PATH_COLUMNS, rows)
    print(f"wrote {len(rows)} points to {path}")
    return EXIT_OK


def cmd_scan(args):
    cfg = _config(args)
    scan = run_scan(cfg.scan)
    out = _out_dir(args, cfg)
    path = records.write_csv(out / "scan.csv", records.SCAN_COLUMNS, records.scan_rows(scan))
    fit = fit_sinusoid(scan)
    est = bootstrap_phase(scan, cfg.scan.s, cfg.subsample, cfg.iterations,
                          np.random.default_rng(cfg.seed))
    print(f"wrote {path}")
    print(f"fit: I_min={fit.i_min:.6f} I_max={fit.i_max:.6f}  "
          f"phi_g={est.mean:.6f} rad [-{est.err_lo:.2e}, +{est.err_hi:.2e}] "
          f"flags={records.flags_text(est.flags)}")
    return EXIT_OK


def cmd_campaign(args):
    cfg = _config(args)
    rows = run_campaign(cfg.scan, cfg.s_grid, cfg.subsample, cfg.iterations, cfg.workers)
    path = records.write_csv(_out_dir(args, cfg) / "campaign.csv", records.CAMPAIGN_COLUMNS,
                             records.campaign_rows(rows))
    for r in rows:
        e = r.estimate
        print(f"s={math.degrees(r.s):7.2f}  phi_g={e.mean:+.6f}  theory={r.theory:+.6f}  "
              f"flags={records.flags_text(e.flags)}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_perturb(args):
    cfg = _config(args)
    axis, s, deltas = cfg.axis, cfg.scan.s, np.array(cfg.deltas)
    phis = np.asarray(cfg.scan.phi_grid)
    sens = plate_sensitivities(axis, s, phis)
    out = _out_dir(args, cfg)
    rows = [(i + 1, float(np.degrees(p)), float(sens[j, i]))
            for i in range(7) for j, p in enumerate(phis)]
    p1 = records.write_csv(out / "sensitivity.csv", records.SENSITIVITY_COLUMNS, rows)

    prow = []
    first = []
    for j, p in enumerate(phis):
        train = u_tot_train(axis, s, p)
        base = abs(train.matrix()[0, 0]) ** 2
        fo = base + float(sens[j] @ deltas)
        ex = abs(exact_perturbed(train, deltas)[0, 0]) ** 2
        first.append(fo)
        prow.append((float(np.degrees(p)), base, fo, ex))
    p2 = records.write_csv(out / "perturbed.csv", records.PERTURB_COLUMNS, prow)
    if leakage_flag(first):
        log.warning("first-order intensity leaves [-0.02, 1.02]; offsets too large for first order")
    # touch the first-order train to enforce the size guard on deltas
    first_order_train(u_tot_train(axis, s, 0.0), deltas)
    print(f"wrote {p1} and {p2}")
    if cfg.draws > 0:
        drift = monte_carlo_phase_drift(axis, np.asarray(cfg.s_grid), cfg.scan.spread, cfg.draws,
                                        np.random.default_rng(cfg.seed),
                                        cfg.scan.distribution, cfg.n_phi)
        mrows = [(float(np.degrees(sv)), float(np.abs(drift[:, j]).max()), float(drift[:, j].std()))
                 for j, sv in enumerate(cfg.s_grid)]
        p3 = records.write_csv(out / "drift.csv", ("s_deg", "max_abs_dev_rad", "std_dev_rad"), mrows)
        print(f"wrote {p3}")
    return EXIT_OK


def recovery_input_from_csv(path, nominal):
    rows = records.read_csv(path, records.CAMPAIGN_COLUMNS)
    usable = [r for r in rows if "singular" not in str(r["flags"])
              and isinstance(r["i_min"], float) and math.isfinite(r["i_min"])]
    sig = fill_sigmas([float(r["sigma_y"]) for r in usable])
    out = []
    for r, sg in zip(usable, sig):
        lo, hi = min(max(r["i_min"], 0.0), 1.0), min(max(r["i_max"], 0.0), 1.0)
        out.append(RecoveryRow(math.radians(r["s_deg"]), lo, hi, float(sg)))
    phases = [(math.radians(r["s_deg"]), float(r["phi_g_rad"])) for r in usable]
    return RecoveryInput(out, nominal), phases


def cmd_recover(args):
    cfg = _config(args)
    src = cfg.campaign_csv
    if not src:
        raise records.ConfigError("recover needs 'campaign_csv' in the config")
    src = Path(src)
    if not src.is_absolute() and args.config:
        candidate = Path(args.config).parent / src
        src = candidate if candidate.exists() else src
    if not src.exists():
        raise FileNotFoundError(src)
    data, phases = recovery_input_from_csv(src, cfg.axis)
    result = iterate_recovery(data, cfg.max_iters, cfg.tol)
    rows = [(i, math.degrees(d[0]), math.degrees(d[1]), res)
            for i, (d, res) in enumerate(zip(result.history, result.residuals))]
    out = _out_dir(args, cfg)
    path = records.write_csv(out / "recovery.csv", records.RECOVERY_COLUMNS, rows)
    ds = [delta_s_estimate(r.s, r.i_min) for r in data.rows]
    print(f"recovered f = sin^2(theta)cos^2(phi) = {result.f:.10f}  "
          f"(dtheta, dphi) = ({math.degrees(result.delta[0]):+.4f}, "
          f"{math.degrees(result.delta[1]):+.4f}) deg  residual={result.residual:.3e}  "
          f"converged={result.converged}")
    print(f"max delta_s estimate = {max(ds):.3e} rad")
    fam = degenerate_family(result.f, cfg.axis, cfg.span, n=41)
    frows = [(math.degrees(a), math.degrees(b)) for a, b in fam]
    records.write_csv(out / "recovery_family.csv", ("dtheta_deg", "dphi_deg"), frows)
    if cfg.grid_scan:
        s_vals, ph = zip(*phases)
        g = grid_scan(s_vals, ph, cfg.axis, cfg.span, cfg.step)
        print(f"grid scan best (dtheta, dphi) = ({math.degrees(g.best[0]):+.2f}, "
              f"{math.degrees(g.best[1]):+.2f}) deg, cost {g.cost:.3e}, "
              f"{len(g.family)} degenerate cells")
    print(f"wrote {path}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="polarlab", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--seed", type=int, help="master RNG seed (overrides config)")
    common.add_argument("--out", help="output directory (default: config 'out' or cwd)")
    units = common.add_mutually_exclusive_group()
    units.add_argument("--degrees", dest="units", action="store_const", const="degrees",
                       help="config angles are in degrees (default)")
    units.add_argument("--radians", dest="units", action="store_const", const="radians",
                       help="config angles are in radians")
    common.add_argument("-v", "--verbose", action="store_true")

    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("verify", parents=[common], help="run the identity/oracle suite")
    p.add_argument("--corrupt-plate", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("path", parents=[common], help="Poincare-sphere path as CSV")
    p.add_argument("--theta", type=float, help="axis polar angle, degrees")
    p.add_argument("--phi", type=float, help="axis azimuth, degrees")
    p.add_argument("--s-max", type=float, help="final rotation angle, degrees")
    p.add_argument("--steps", type=int)
    p.set_defaults(func=cmd_path)

    for name, func, text in (
        ("scan", cmd_scan, "single noisy fringe scan"),
        ("campaign", cmd_campaign, "phase campaign over the s grid"),
        ("perturb", cmd_perturb, "plate-misalignment sensitivity report"),
        ("recover", cmd_recover, "recover the realized axis from a campaign CSV"),
    ):
        p = sub.add_parser(name, parents=[common], help=text)
        p.set_defaults(func=func)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename or exc}", file=sys.stderr)
        return EXIT_MISSING_FILE
    except records.ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
