"""Command-line front end.

Subcommands: ``curve`` (sweep CSV), ``estimate`` (replicated single-stage
estimation), ``adaptive`` (three-stage protocol), ``presets`` (list named
configurations).  CSV goes to --out (default stdout); human-readable
reports go to stderr so piped CSV stays clean.

Exit codes: 0 success, 2 parse/validation error, 3 numerical failure,
4 protocol region miss.
"""

from __future__ import annotations

import argparse
import contextlib
import csv
import math
import sys

from .core import optimal_setup
from .curves import CURVE_KINDS, run_curve, write_curve_csv
from .errors import ParseError, PPSMError, RegionMiss, ValidationError
from .estimation import HiddenCouplingSampler, adaptive_protocol, mle, sample_record
from .fisher import cfi
from .numerics import RngStream
from .scenario import PRESETS, parse_scenario, resolve_g_mod

ESTIMATE_HEADER = ("replication", "g_hat", "stderr", "crb_ratio")


def _g_mod_value(text):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}")


def _phi_list(text):
    try:
        values = tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated float list, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("phi list is empty")
    return values


def _add_common(parser):
    parser.add_argument("--scenario", metavar="PATH", help="key = value config file")
    parser.add_argument("--preset", choices=sorted(PRESETS), help="named base configuration")
    parser.add_argument("--out", metavar="PATH", help="CSV output path (default stdout)")
    parser.add_argument("--seed", type=int, help="unsigned 64-bit stream seed")
    parser.add_argument("--phi", type=_phi_list, help="comma-separated selection angles")
    parser.add_argument("--g-min", type=float, dest="g_min")
    parser.add_argument("--g-max", type=float, dest="g_max")
    parser.add_argument("--g-steps", type=int, dest="g_steps")
    parser.add_argument("--g-mod", type=_g_mod_value, dest="g_mod", help="modulation, or 'auto'")
    parser.add_argument("--n-total", type=int, dest="n_total", help="trials per run / total budget")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ppsm",
        description="Modulated pre-/post-selected measurement curves and estimation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_curve = sub.add_parser("curve", help="sweep a quantity over the coupling grid")
    _add_common(p_curve)
    p_curve.add_argument(
        "--kind", choices=CURVE_KINDS, default="shift", help="quantity to sweep"
    )
    p_curve.set_defaults(func=cmd_curve)

    p_est = sub.add_parser("estimate", help="replicated single-configuration estimation")
    _add_common(p_est)
    p_est.add_argument("--g-true", type=float, dest="g_true", required=True,
                       help="hidden true coupling used by the simulator")
    p_est.add_argument("--replications", type=int, default=1)
    p_est.set_defaults(func=cmd_estimate)

    p_adapt = sub.add_parser("adaptive", help="three-stage adaptive estimation")
    _add_common(p_adapt)
    p_adapt.add_argument("--g-true", type=float, dest="g_true", required=True,
                         help="hidden true coupling used by the simulator")
    p_adapt.add_argument("--phi-final", type=float, dest="phi_final", default=0.2,
                         help="selection angle of the final stage (0, pi/4)")
    p_adapt.set_defaults(func=cmd_adaptive)

    p_presets = sub.add_parser("presets", help="list named presets")
    p_presets.set_defaults(func=cmd_presets)
    return parser


def _load_scenario(args):
    overrides = {
        key: getattr(args, key, None)
        for key in ("seed", "phi", "g_min", "g_max", "g_steps", "g_mod", "n_total")
    }
    return parse_scenario(path=args.scenario, preset=args.preset, overrides=overrides)


@contextlib.contextmanager
def _out_stream(path):
    if path is None:
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            yield handle


def _write_estimate_csv(stream, reports):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(ESTIMATE_HEADER)
    for index, report in enumerate(reports):
        writer.writerow(
            (
                str(index),
                format(report.g_hat, ".17g"),
                format(report.stderr_hat, ".17g"),
                format(report.crb_ratio, ".17g"),
            )
        )


def _print_report(report, label="estimate"):
    print(f"[{label}]", file=sys.stderr)
    print(f"  g_hat        = {report.g_hat:.17g}", file=sys.stderr)
    print(f"  stderr       = {report.stderr_hat:.17g}", file=sys.stderr)
    print(f"  n_total      = {report.n_total}", file=sys.stderr)
    print(f"  fisher_bound = {report.fisher_bound:.17g}", file=sys.stderr)
    print(f"  crb_ratio    = {report.crb_ratio:.17g}", file=sys.stderr)


def _print_trace(trace):
    print("[trace]", file=sys.stderr)
    print("  stage      phi          g_M           estimate      budget", file=sys.stderr)
    for i, stage in enumerate(trace.stages):
        print(
            f"  {stage:<9}  {trace.phi_used[i]:<11.6g}  {trace.g_M_used[i]:<12.6g}  "
            f"{trace.estimates[i]:<12.6g}  {trace.budget_split[i]:.2f}",
            file=sys.stderr,
        )


def cmd_curve(args):
    scenario = _load_scenario(args)
    table = run_curve(scenario, args.kind)
    with _out_stream(args.out) as stream:
        write_curve_csv(table, stream)
    return 0


def cmd_estimate(args):
    scenario = _load_scenario(args)
    if scenario.n_total < 1000:
        raise ValidationError("estimation requires n_total >= 1000")
    if args.replications < 1:
        raise ValidationError("replications must be at least 1")
    phi = scenario.phi[0]
    g_mod = resolve_g_mod(scenario, phi)
    template = optimal_setup(scenario.pointer(), phi, g=args.g_true, g_M=g_mod)
    rng = RngStream(scenario.seed)
    reports = []
    for r in range(args.replications):
        record = sample_record(template, scenario.n_total, rng.child(r))
        reports.append(mle(record, template, (scenario.g_min, scenario.g_max)))
    _print_report(reports[-1], label=f"estimate, phi={phi:g}, g_mod={g_mod:g}")
    if args.replications >= 2:
        import numpy as np

        estimates = np.array([rep.g_hat for rep in reports])
        crb = 1.0 / (scenario.n_total * cfi(template))
        var = float(np.var(estimates, ddof=1))
        print(f"[replications] mean = {estimates.mean():.17g}  "
              f"variance = {var:.17g}  variance/crb = {var / crb:.17g}", file=sys.stderr)
    with _out_stream(args.out) as stream:
        _write_estimate_csv(stream, reports)
    return 0


def cmd_adaptive(args):
    scenario = _load_scenario(args)
    if scenario.n_total < 3000:
        raise ValidationError("adaptive estimation requires n_total >= 3000")
    if not 0.0 < args.phi_final < math.pi / 4.0:
        raise ValidationError("phi_final must lie in (0, pi/4)")
    pointer = scenario.pointer()
    sampler = HiddenCouplingSampler(pointer=pointer, g_true=args.g_true)
    trace, report = adaptive_protocol(
        sampler,
        scenario.case,
        scenario.n_total,
        pointer,
        args.phi_final,
        RngStream(scenario.seed),
        g_search=(scenario.g_min, scenario.g_max),
    )
    _print_trace(trace)
    _print_report(report, label="adaptive final")
    with _out_stream(args.out) as stream:
        _write_estimate_csv(stream, [report])
    return 0


def cmd_presets(args):
    for name in sorted(PRESETS):
        values = PRESETS[name]
        print(
            f"{name}: case={values['case']}, q0={values['q0']:g}, "
            f"sigma={values['sigma']:g}, unit={values['unit']}, "
            f"g in [{values['g_min']:g}, {values['g_max']:g}]"
        )
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except RegionMiss as exc:
        print(f"protocol aborted: {exc}", file=sys.stderr)
        if exc.trace is not None:
            _print_trace(exc.trace)
        return 4
    except PPSMError as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
