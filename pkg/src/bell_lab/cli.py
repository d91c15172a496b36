"""Command line front end: every analysis as a subcommand.

Output contracts: --format json emits exactly one JSON document on stdout
(resolved configuration embedded under "config"); --format csv emits
"# key=value" configuration comments, a header row, and data rows; the
default table format is for humans and honors --precision. Exit codes:
0 success, 1 usage error, 2 model or domain error, 3 non-convergence.
The seed falls back to the BELL_LAB_SEED environment variable.
"""

from __future__ import annotations

import argparse
import csv as csv_mod
import json
import os
import sys

from . import plots
from .metrics import (
    AnalyzerQuad,
    CountsSextet,
    DegenerateInputError,
    ch_sum,
    lhv_extrema,
    lhv_mixture_extrema,
    normalize_mode,
    qm_counts,
)
from .optimize import NoThresholdError, critical_efficiency, optimize_angles, scan_f
from .qm import DetectionModel, EntangledState, ModelError, PolarizerModel
from .simulate import (
    SimConfig,
    calibrate_noise_mix,
    fit_fringe,
    record_to_json_dict,
    simulate_fringe,
    simulate_run,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_MODEL = 2
EXIT_NO_CONVERGENCE = 3

# Commonly quoted detection-loophole thresholds for the two limiting
# regimes: weakly entangled states (f -> 0) and the maximally entangled
# state (f = 1). Printed alongside computed values for comparison.
QUOTED_LIMIT_WEAK = 0.67
QUOTED_LIMIT_MAXIMAL = 0.81


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _parse_angles(text):
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 4:
        raise UsageError(f"--angles needs 4 comma-joined degrees, got {text!r}")
    try:
        return AnalyzerQuad(*(float(p) for p in parts))
    except (ValueError, ModelError) as e:
        raise UsageError(f"bad --angles {text!r}: {e}")


def _parse_counts(text):
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) != 6:
        raise UsageError(f"--counts needs 6 comma-joined values, got {text!r}")
    try:
        return CountsSextet.poissonized([float(p) for p in parts])
    except (ValueError, ModelError) as e:
        raise UsageError(f"bad --counts {text!r}: {e}")


def _parse_f_list(text):
    try:
        return [float(p) for p in str(text).split(",") if p.strip() != ""]
    except ValueError:
        raise UsageError(f"bad --f-values {text!r}")


def _resolve_seed(args):
    seed = args.seed
    if seed is None:
        raw = os.environ.get("BELL_LAB_SEED", "0")
        try:
            seed = int(raw)
        except ValueError:
            raise UsageError(f"BELL_LAB_SEED must be an integer, got {raw!r}")
    if seed < 0:
        raise UsageError("seed must be >= 0")
    return seed


def _pol_from(args):
    try:
        return PolarizerModel(
            args.eps_par_1, args.eps_perp_1, args.eps_par_2, args.eps_perp_2
        )
    except ModelError as e:
        raise UsageError(str(e))


def _det_from(args):
    try:
        return DetectionModel(
            eta_1=args.eta_1,
            eta_2=args.eta_2,
            dark_1=args.dark_1,
            dark_2=args.dark_2,
            pair_rate=args.pair_rate,
            window=args.window,
            duration=args.duration,
        )
    except ModelError as e:
        raise UsageError(str(e))


def _fmt(value, precision):
    if isinstance(value, float):
        return f"{value:.{precision}g}"
    return str(value)


def _machine(value):
    """Full-precision text for machine formats (stable bytes)."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _flatten(mapping, prefix=""):
    out = []
    for key, value in mapping.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.extend(_flatten(value, f"{name}."))
        else:
            out.append((name, value))
    return out


def _emit(args, config, body, rows=None, row_fields=None, rows_key="rows"):
    """Write one report to stdout in the selected format.

    config and body are ordered dicts of scalars (body may nest one level
    of dicts); rows is an optional list of dicts sharing row_fields.
    """
    out = sys.stdout
    if args.format == "json":
        doc = {"config": config}
        doc.update(body)
        if rows is not None:
            doc[rows_key] = rows
        out.write(json.dumps(doc, indent=2))
        out.write("\n")
        return
    if args.format == "csv":
        for key, value in _flatten(config):
            out.write(f"# {key}={_machine(value)}\n")
        if rows is not None:
            for key, value in _flatten(body):
                out.write(f"# {key}={_machine(value)}\n")
            out.write(",".join(row_fields) + "\n")
            for row in rows:
                out.write(",".join(_machine(row[k]) for k in row_fields) + "\n")
        else:
            flat = _flatten(body)
            out.write(",".join(k for k, _ in flat) + "\n")
            out.write(",".join(_machine(v) for _, v in flat) + "\n")
        return
    # table
    p = args.precision
    for key, value in _flatten(config):
        out.write(f"# {key} = {_fmt(value, p)}\n")
    flat = _flatten(body)
    width = max((len(k) for k, _ in flat), default=0)
    for key, value in flat:
        out.write(f"{key:<{width}}  {_fmt(value, p)}\n")
    if rows is not None:
        out.write("\n")
        cells = [row_fields] + [
            [_fmt(row[k], p) for k in row_fields] for row in rows
        ]
        widths = [max(len(r[i]) for r in cells) for i in range(len(row_fields))]
        for r in cells:
            out.write("  ".join(f"{c:<{w}}" for c, w in zip(r, widths)).rstrip() + "\n")


def _report_body(report):
    return {
        "ch": report.ch,
        "sigma_ch": report.sigma_ch,
        "r": report.r,
        "sigma_r": report.sigma_r,
    }


def _sextet_body(sextet):
    body = {name: getattr(sextet, name) for name in CountsSextet._FIELDS}
    if sextet.has_sigmas:
        body["count_sigmas"] = list(sextet.sigmas)
    return body


def cmd_predict(args):
    pol = _pol_from(args)
    det = _det_from(args)
    mode = normalize_mode(args.mode)
    config = {
        "command": "predict",
        "f": args.f,
        "mode": mode,
        "angles": None if args.counts else args.angles,
        "counts": args.counts,
        "format": args.format,
    }
    if args.counts:
        sextet = _parse_counts(args.counts)
    else:
        if args.angles is None:
            raise UsageError("predict needs --angles (or --counts to re-analyze)")
        quad = _parse_angles(args.angles)
        state = EntangledState(args.f)
        config.update(_pol_det_echo(pol, det))
        sextet = qm_counts(state, quad, pol, det, mode)
    body = {"counts": _sextet_body(sextet)}
    body.update(_report_body(ch_sum(sextet)))
    _emit(args, config, body)
    return EXIT_OK


def _pol_det_echo(pol, det):
    return {
        "eps_par_1": pol.eps_par_1,
        "eps_perp_1": pol.eps_perp_1,
        "eps_par_2": pol.eps_par_2,
        "eps_perp_2": pol.eps_perp_2,
        "eta_1": det.eta_1,
        "eta_2": det.eta_2,
        "dark_1": det.dark_1,
        "dark_2": det.dark_2,
        "pair_rate": det.pair_rate,
        "window": det.window,
        "duration": det.duration,
    }


def cmd_optimize(args):
    pol = _pol_from(args)
    det = _det_from(args)
    mode = normalize_mode(args.mode)
    state = EntangledState(args.f)
    result = optimize_angles(
        state,
        pol,
        mode,
        det,
        grid_deg=args.grid_deg,
        refine_starts=args.starts,
        budget=args.budget,
    )
    config = {
        "command": "optimize",
        "f": args.f,
        "mode": mode,
        "grid_deg": args.grid_deg,
        "starts": args.starts,
        "budget": args.budget,
        "format": args.format,
    }
    config.update(_pol_det_echo(pol, det))
    body = {
        "theta1": result.quad.theta1,
        "theta2": result.quad.theta2,
        "theta1_prime": result.quad.theta1_prime,
        "theta2_prime": result.quad.theta2_prime,
        "ch_max": result.ch_max,
        "r_at_max": result.r_at_max,
        "evaluations": result.evaluations,
        "converged": result.converged,
    }
    _emit(args, config, body)
    return EXIT_OK if result.converged else EXIT_NO_CONVERGENCE


def cmd_critical_eta(args):
    threshold = critical_efficiency(args.f, args.background, args.tol)
    config = {
        "command": "critical-eta",
        "f": args.f,
        "background": args.background,
        "tol": args.tol,
        "format": args.format,
    }
    body = {
        "eta_star": threshold.eta_star,
        "quad_at_threshold": {
            "theta1": threshold.quad_at_threshold.theta1,
            "theta2": threshold.quad_at_threshold.theta2,
            "theta1_prime": threshold.quad_at_threshold.theta1_prime,
            "theta2_prime": threshold.quad_at_threshold.theta2_prime,
        },
        "quoted_limit_weak_state": QUOTED_LIMIT_WEAK,
        "quoted_limit_maximal_state": QUOTED_LIMIT_MAXIMAL,
    }
    _emit(args, config, body)
    return EXIT_OK


def cmd_scan_f(args):
    pol = _pol_from(args)
    det = _det_from(args)
    mode = normalize_mode(args.mode)
    fs = _parse_f_list(args.f_values)
    if not fs:
        raise UsageError("--f-values is empty")
    try:
        report = scan_f(fs, pol, mode, det, budget=args.budget)
    except ModelError as e:
        raise UsageError(str(e))
    config = {
        "command": "scan-f",
        "f_values": ",".join(repr(v) for v in fs),
        "mode": mode,
        "budget": args.budget,
        "format": args.format,
    }
    config.update(_pol_det_echo(pol, det))
    rows = [
        {
            "f": f,
            "theta1": r.quad.theta1,
            "theta2": r.quad.theta2,
            "theta1_prime": r.quad.theta1_prime,
            "theta2_prime": r.quad.theta2_prime,
            "ch_max": r.ch_max,
            "r_at_max": r.r_at_max,
            "evaluations": r.evaluations,
            "converged": r.converged,
        }
        for f, r in zip(report.f_values, report.results)
    ]
    body = {
        "ch_nondecreasing": report.ch_nondecreasing,
        "violations": ",".join(str(i) for i in report.violations),
    }
    fields = list(rows[0].keys())
    if args.plot:
        plots.plot_scan_f(report, args.plot)
        body["plot_written"] = args.plot
    _emit(args, config, body, rows=rows, row_fields=fields, rows_key="results")
    return EXIT_OK if all(r.converged for r in report.results) else EXIT_NO_CONVERGENCE


def _sim_config_from(args, quad, noise_mix):
    return SimConfig(
        state=EntangledState(args.f),
        pol=_pol_from(args),
        det=_det_from(args),
        quad=quad,
        seed=_resolve_seed(args),
        noise_mix=noise_mix,
    )


def cmd_simulate(args):
    if args.angles is None:
        raise UsageError("simulate needs --angles")
    quad = _parse_angles(args.angles)
    noise_mix = args.noise_mix
    calibrated = None
    if args.calibrate_visibility is not None:
        base = _sim_config_from(args, quad, 0.0)
        theta_fixed = (
            args.calibrate_theta_fixed
            if args.calibrate_theta_fixed is not None
            else quad.theta1
        )
        noise_mix = calibrate_noise_mix(
            base, args.calibrate_visibility, theta_fixed, args.calibrate_arm
        )
        calibrated = noise_mix
    config_obj = _sim_config_from(args, quad, noise_mix)
    record = simulate_run(config_obj)
    config = {"command": "simulate", "format": args.format}
    config.update(config_obj.describe())
    body = {}
    if calibrated is not None:
        body["calibrated_noise_mix"] = calibrated
        body["calibration_target_visibility"] = args.calibrate_visibility
    body.update(record_to_json_dict(record))
    if args.plot:
        plots.plot_run(record, args.plot)
        body["plot_written"] = args.plot
    _emit(args, config, body)
    return EXIT_OK


def cmd_fringe(args):
    quad = AnalyzerQuad(args.theta_fixed, args.theta_fixed, 0.0, 0.0)
    config_obj = _sim_config_from(args, quad, args.noise_mix)
    points = simulate_fringe(
        config_obj,
        args.theta_fixed,
        n_points=args.n_points,
        per_point_duration=args.per_point_duration,
        arm_fixed=args.arm_fixed,
    )
    config = {
        "command": "fringe",
        "theta_fixed": args.theta_fixed,
        "arm_fixed": args.arm_fixed,
        "n_points": args.n_points,
        "per_point_duration": args.per_point_duration,
        "noise_mix": args.noise_mix,
        "seed": config_obj.seed,
        "format": args.format,
    }
    config.update(_pol_det_echo(config_obj.pol, config_obj.det))
    config["f"] = args.f
    body = {}
    if args.plot:
        plots.plot_fringe(points, args.plot)
        body["plot_written"] = args.plot
    rows = [{"angle_deg": a, "count": c} for a, c in points]
    _emit(
        args,
        config,
        body,
        rows=rows,
        row_fields=["angle_deg", "count"],
        rows_key="points",
    )
    return EXIT_OK


def _read_fringe_csv(stream):
    points = []
    for row in csv_mod.reader(stream):
        if not row or row[0].lstrip().startswith("#"):
            continue
        try:
            a, c = float(row[0]), float(row[1])
        except (ValueError, IndexError):
            continue  # header or malformed line
        points.append((a, c))
    if not points:
        raise UsageError("no numeric angle,count rows found in fringe input")
    return points


def cmd_fit(args):
    if args.input == "-":
        points = _read_fringe_csv(sys.stdin)
    else:
        try:
            with open(args.input, newline="") as fh:
                points = _read_fringe_csv(fh)
        except OSError as e:
            raise UsageError(f"cannot read {args.input!r}: {e}")
    fit = fit_fringe(points)
    config = {
        "command": "fit",
        "input": args.input,
        "n_points": len(points),
        "format": args.format,
    }
    body = {
        "amplitude": fit.amplitude,
        "offset": fit.offset,
        "phase_deg": fit.phase_deg,
        "visibility": fit.visibility,
        "sigma_visibility": fit.sigma_visibility,
        "goodness": fit.goodness,
    }
    if args.plot:
        plots.plot_fringe(points, args.plot, fit=fit)
        body["plot_written"] = args.plot
    _emit(args, config, body)
    return EXIT_OK


def cmd_lhv(args):
    hi, lo = lhv_extrema()
    config = {
        "command": "lhv",
        "mixtures": args.mixtures,
        "seed": _resolve_seed(args),
        "format": args.format,
    }
    body = {"max": hi, "min": lo}
    if args.mixtures > 0:
        mhi, mlo = lhv_mixture_extrema(args.mixtures, _resolve_seed(args))
        body["mixture_max"] = mhi
        body["mixture_min"] = mlo
    _emit(args, config, body)
    return EXIT_OK


def _add_common(parser):
    parser.add_argument(
        "--format",
        choices=["table", "json", "csv"],
        default="table",
        help="output format (default table; json and csv are stable contracts)",
    )
    parser.add_argument(
        "--precision",
        type=int,
        default=6,
        help="significant digits in table output (machine formats are full precision)",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="RNG seed; falls back to BELL_LAB_SEED, then 0",
    )


def _add_pol(parser):
    parser.add_argument("--eps-par-1", type=float, default=1.0, help="pass-axis transmission, arm 1")
    parser.add_argument("--eps-perp-1", type=float, default=0.0, help="cross-axis transmission, arm 1")
    parser.add_argument("--eps-par-2", type=float, default=1.0, help="pass-axis transmission, arm 2")
    parser.add_argument("--eps-perp-2", type=float, default=0.0, help="cross-axis transmission, arm 2")


def _add_det(parser):
    parser.add_argument("--eta-1", type=float, default=1.0, help="detector efficiency, arm 1")
    parser.add_argument("--eta-2", type=float, default=1.0, help="detector efficiency, arm 2")
    parser.add_argument("--dark-1", type=float, default=0.0, help="dark rate arm 1 (counts/s)")
    parser.add_argument("--dark-2", type=float, default=0.0, help="dark rate arm 2 (counts/s)")
    parser.add_argument("--pair-rate", type=float, default=1.0, help="pair production rate (pairs/s)")
    parser.add_argument("--window", type=float, default=0.0, help="coincidence window (s)")
    parser.add_argument("--duration", type=float, default=1.0, help="integration time per setting (s)")


def _add_mode(parser):
    parser.add_argument(
        "--mode",
        choices=["coincidence-normalized", "coincidence", "singles"],
        default="coincidence-normalized",
        help="counting mode for the removed-analyzer terms",
    )


def build_parser():
    parser = _Parser(
        prog="bell-lab",
        description="Two-photon polarization correlation lab: CH inequality "
        "analysis, angle optimization, efficiency thresholds, and a seeded "
        "Monte Carlo counting simulator.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("predict", help="expected counts and CH report for a quad")
    p.add_argument("--f", type=float, default=1.0, help="state amplitude ratio")
    p.add_argument("--angles", help="theta1,theta2,theta1',theta2' in degrees")
    p.add_argument("--counts", help="re-analyze six measured counts a,b,c,d,e,f")
    _add_mode(p)
    _add_pol(p)
    _add_det(p)
    _add_common(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("optimize", help="CH-maximizing analyzer angles")
    p.add_argument("--f", type=float, required=True)
    p.add_argument("--grid-deg", type=float, default=5.0, help="coarse grid spacing")
    p.add_argument("--starts", type=int, default=8, help="refinement starts")
    p.add_argument("--budget", type=int, default=20000, help="refinement evaluation budget")
    _add_mode(p)
    _add_pol(p)
    _add_det(p)
    _add_common(p)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("critical-eta", help="efficiency where the singles-mode violation vanishes")
    p.add_argument("--f", type=float, required=True)
    p.add_argument("--background", type=float, default=0.0, help="dark-to-pair-rate ratio per arm")
    p.add_argument("--tol", type=float, default=1e-3, help="bisection tolerance on eta")
    _add_common(p)
    p.set_defaults(func=cmd_critical_eta)

    p = sub.add_parser("scan-f", help="optimize over a list of f values")
    p.add_argument("--f-values", required=True, help="comma-joined f list, e.g. 0,0.4,1")
    p.add_argument("--budget", type=int, default=20000)
    p.add_argument("--plot", help="also render ch_max and R vs f to this file")
    _add_mode(p)
    _add_pol(p)
    _add_det(p)
    _add_common(p)
    p.set_defaults(func=cmd_scan_f)

    p = sub.add_parser("simulate", help="Poisson-simulate one run of the six settings")
    p.add_argument("--f", type=float, required=True)
    p.add_argument("--angles", required=True, help="theta1,theta2,theta1',theta2'")
    p.add_argument("--noise-mix", type=float, default=0.0, help="white-noise fraction in [0,1]")
    p.add_argument(
        "--calibrate-visibility",
        type=float,
        help="pick noise_mix so the model fringe visibility hits this target "
        "(overrides --noise-mix)",
    )
    p.add_argument(
        "--calibrate-theta-fixed",
        type=float,
        help="fixed analyzer angle for the calibration fringe (default theta1)",
    )
    p.add_argument("--calibrate-arm", type=int, choices=[1, 2], default=1)
    p.add_argument("--plot", help="render the six counts to this file")
    _add_pol(p)
    _add_det(p)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fringe", help="Poisson-simulate a fringe scan, CSV friendly")
    p.add_argument("--f", type=float, required=True)
    p.add_argument("--theta-fixed", type=float, required=True)
    p.add_argument("--arm-fixed", type=int, choices=[1, 2], default=1)
    p.add_argument("--n-points", type=int, default=36)
    p.add_argument("--per-point-duration", type=float, default=1.0)
    p.add_argument("--noise-mix", type=float, default=0.0)
    p.add_argument("--plot", help="render the fringe to this file")
    _add_pol(p)
    _add_det(p)
    _add_common(p)
    p.set_defaults(func=cmd_fringe)

    p = sub.add_parser("fit", help="fit A cos^2(theta - phi) + B to angle,count data")
    p.add_argument("--input", default="-", help="CSV path or - for stdin")
    p.add_argument("--plot", help="render data and fit to this file")
    _add_common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("lhv", help="local deterministic-strategy extrema of the CH sum")
    p.add_argument("--mixtures", type=int, default=0, help="also sample this many random convex mixtures")
    _add_common(p)
    p.set_defaults(func=cmd_lhv)

    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.seed is not None and args.seed < 0:
            raise UsageError("seed must be >= 0")
        return args.func(args)
    except SystemExit as e:  # argparse --help
        code = e.code if e.code is not None else 0
        return int(code)
    except UsageError as e:
        print(f"bell-lab: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (NoThresholdError, DegenerateInputError, ModelError) as e:
        print(f"bell-lab: model error: {e}", file=sys.stderr)
        return EXIT_MODEL


if __name__ == "__main__":
    sys.exit(main())
