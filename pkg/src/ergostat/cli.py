"""Command-line entry point.

Exit codes: 0 success, 2 usage or configuration error, 3 numerical or
domain error (including model invariant violations).
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

import numpy as np

from . import formats
from .correlation import classify, correlation_series, trajectory_path
from .distinguishability import BOTH, CLOSED, BRUTEFORCE, bound_check, f_curve
from .dynamics import GeodesicState, integrate_geodesic
from .errors import InsufficientDataError, InvalidArgumentError, NumericalDomainError
from .geometry import geometry_report
from .model import Block, sample, verify_constraints

log = logging.getLogger("ergostat")

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


def _cmd_geometry(args):
    theta, cfg = formats.load_model(args.model)
    rs = args.r if args.r else [cfg.r]
    reports = [geometry_report(theta, cfg.with_r(r), Block(args.block), args.order) for r in rs]
    return formats.dumps_json(reports[0] if len(reports) == 1 else reports)


def _geodesic(theta, cfg, velocity, tau_max, h):
    traj = integrate_geodesic(GeodesicState(theta, tuple(velocity)), cfg, tau_max, h)
    if traj.truncated:
        log.warning("geodesic left sigma > 0 at tau=%.6g; trajectory truncated", traj.tau[-1])
    return traj


def _cmd_geodesic(args):
    theta, cfg = formats.load_model(args.model)
    traj = _geodesic(theta, cfg, args.velocity, args.tau_max, args.h)
    log.info("speed drift %.3e over tau in [0, %g]", traj.speed_drift, traj.tau[-1])
    rows = np.column_stack([traj.tau, traj.y, np.sqrt(traj.speed)])
    return formats.dumps_csv(formats.TRAJECTORY_COLUMNS, rows)


def _series(args):
    theta, cfg = formats.load_model(args.model)
    schedule = formats.load_schedule(args.schedule)
    battery = formats.load_battery(args.battery)
    taus = np.linspace(0.0, args.tau_max, args.n_tau) if args.n_tau >= 2 else np.array([0.0])
    path = theta
    if args.geodesic is not None:
        traj = _geodesic(theta, cfg, args.geodesic, args.tau_max, args.h)
        if traj.truncated:
            raise NumericalDomainError("geodesic does not cover the requested tau range")
        path = trajectory_path(traj)
    return correlation_series(battery, path, cfg, schedule, taus, args.order)


def _series_csv(series):
    return formats.dumps_csv(formats.CORRELATION_COLUMNS, np.column_stack([series.tau, series.r, series.C]))


def _cmd_correlate(args):
    return _series_csv(_series(args))


def _cmd_classify(args):
    series = _series(args)
    verdict = classify(series, args.eps_b, args.eps_m, args.eps_e, args.tail_fraction, args.ergodic_rel)
    if args.series_out:
        formats.write_output(_series_csv(series), args.series_out)
    return formats.dumps_json({"level": verdict.level, "battery": series.battery, **verdict.diagnostics})


def _cmd_fcurve(args):
    if not -1 < args.r_min < args.r_max < 1:
        raise UsageError("need -1 < r-min < r-max < 1")
    if args.n < 2:
        raise UsageError("need n >= 2")
    rows = f_curve(args.r_min, args.r_max, args.n, args.method, args.resolution)
    if args.method == BOTH:
        ratios = [row.convention_ratio for row in rows if np.isfinite(row.convention_ratio)]
        if ratios:
            print(f"convention_ratio min={formats.fmt(min(ratios))} max={formats.fmt(max(ratios))}", file=sys.stderr)
    table = [(row.r, row.F_closed_paper, row.F_bruteforce, row.convention_ratio, *row.argmax) for row in rows]
    return formats.dumps_csv(formats.FCURVE_COLUMNS, table)


def _cmd_bound_check(args):
    theta, cfg = formats.load_model(args.model)
    battery = formats.load_battery(args.battery)
    reports = bound_check(battery, theta, cfg, args.r_grid, args.resolution)
    return formats.dumps_json([dataclasses.asdict(rep) for rep in reports])


def _cmd_verify_constraints(args):
    theta, cfg = formats.load_model(args.model)
    rep = verify_constraints(theta, cfg, args.tol)
    out = {"model": formats.model_to_dict(theta, cfg), "tol": rep.tol,
           "residuals": rep.residuals, "passed": rep.passed, "ok": rep.ok}
    if args.mc_samples > 0:
        x = sample(args.mc_samples, theta, cfg, args.seed)
        out["monte_carlo"] = {
            "seed": args.seed,
            "n": args.mc_samples,
            "mean": x.mean(axis=0).tolist(),
            "cov_h11_h22": float(np.mean((x[:, 0] - theta.mu) * x[:, 1])),
        }
    args._failed = not rep.ok
    return formats.dumps_json(out)


def build_parser():
    p = argparse.ArgumentParser(prog="ergostat", description="Geometry, correlation decay and distinguishability of the correlated 2x2 Gaussian matrix model.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=True):
        if model:
            sp.add_argument("--model", required=True, help="model JSON {mu, sigma, Sigma, r, symmetric}")
        sp.add_argument("--out", default=None, help="output path (default stdout)")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("geometry", help="metric, Christoffel symbols and curvature")
    common(sp)
    sp.add_argument("--block", choices=[b.value for b in Block], default=Block.BIVARIATE.value)
    sp.add_argument("--order", type=int, default=None, help="Gauss-Hermite order per axis")
    sp.add_argument("--r", type=float, nargs="+", help="override r (several values give a sweep)")
    sp.set_defaults(func=_cmd_geometry)

    sp = sub.add_parser("geodesic", help="integrate a geodesic, write trajectory CSV")
    common(sp)
    sp.add_argument("--velocity", type=float, nargs=2, metavar=("MU_DOT", "SIGMA_DOT"), required=True)
    sp.add_argument("--tau-max", type=float, default=10.0)
    sp.add_argument("--h", type=float, default=1e-3)
    sp.set_defaults(func=_cmd_geodesic)

    for name, func, helptext in (("correlate", _cmd_correlate, "correlation series CSV"),
                                 ("classify", _cmd_classify, "classify a correlation series")):
        sp = sub.add_parser(name, help=helptext)
        common(sp)
        sp.add_argument("--schedule", required=True, help="schedule JSON {kind, r0, lambda, alpha}")
        sp.add_argument("--battery", required=True, help="battery JSON list of {var, kind, ...}")
        sp.add_argument("--tau-max", type=float, default=50.0)
        sp.add_argument("--n-tau", type=int, default=2001)
        sp.add_argument("--geodesic", type=float, nargs=2, metavar=("MU_DOT", "SIGMA_DOT"), default=None,
                        help="move theta along the geodesic with this initial velocity")
        sp.add_argument("--h", type=float, default=1e-3, help="geodesic step")
        sp.add_argument("--order", type=int, default=32)
        if name == "classify":
            sp.add_argument("--eps-b", type=float, default=1e-9)
            sp.add_argument("--eps-m", type=float, default=1e-6)
            sp.add_argument("--eps-e", type=float, default=1e-6)
            sp.add_argument("--tail-fraction", type=float, default=0.2)
            sp.add_argument("--ergodic-rel", type=float, default=0.05)
            sp.add_argument("--series-out", default=None, help="also write the series CSV here")
        sp.set_defaults(func=func)

    sp = sub.add_parser("fcurve", help="F versus r")
    common(sp, model=False)
    sp.add_argument("--r-min", type=float, default=-0.99)
    sp.add_argument("--r-max", type=float, default=0.99)
    sp.add_argument("--n", type=int, default=199)
    sp.add_argument("--method", choices=[CLOSED, BRUTEFORCE, BOTH], default=CLOSED)
    sp.add_argument("--resolution", type=int, default=None, help="grid points per axis for brute force")
    sp.set_defaults(func=_cmd_fcurve)

    sp = sub.add_parser("bound-check", help="compare |C| with the F-based bounds")
    common(sp)
    sp.add_argument("--battery", required=True)
    sp.add_argument("--r-grid", type=float, nargs="+", default=[-0.9, -0.7, -0.5, -0.3, 0.0, 0.3, 0.5, 0.7, 0.9])
    sp.add_argument("--resolution", type=int, default=None, help="grid points per axis for the 4D search")
    sp.set_defaults(func=_cmd_bound_check)

    sp = sub.add_parser("verify-constraints", help="check moment constraints by quadrature")
    common(sp)
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--mc-samples", type=int, default=0)
    sp.set_defaults(func=_cmd_verify_constraints)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        text = args.func(args)
    except (formats.ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InvalidArgumentError, NumericalDomainError, InsufficientDataError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    formats.write_output(text, args.out)
    return EXIT_NUMERIC if getattr(args, "_failed", False) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
