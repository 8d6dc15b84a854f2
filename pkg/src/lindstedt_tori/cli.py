"""Command line front-end: ``series``, ``pade``, ``gevrey`` and ``validate``.

Exit status: 0 success, 1 input error, 2 numerical failure, 3 internal
consistency failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

import gmpy2
from gmpy2 import mpfr

from . import diagnostics, gevrey, io, lindstedt, pade
from .errors import InputError, LindstedtError
from .numerics import FREQUENCY_KINDS, format_decimal

log = logging.getLogger("lindstedt_tori")


def _ln(x):
    return format_decimal(gmpy2.log(x), 12) if x > 0 else "-inf"


def cmd_series(args):
    overrides = {"gamma": args.gamma, "omega": args.omega, "omega_value": args.omega_value,
                 "omega_units": args.omega_units, "order": args.order, "digits": args.digits,
                 "filter": args.filter, "grid_size": args.grid_size}
    if args.config:
        rc = io.load_run_config(args.config, overrides)
    else:
        rc = io.parse_run_config({}, overrides)
    cfg = rc.series

    def progress(n, s):
        log.info("order %d residual %.3e", n, float(s.per_order_residual[-1]))

    try:
        series = lindstedt.run(cfg, progress=progress)
    except LindstedtError as exc:
        partial = getattr(exc, "partial", None)
        if partial is not None and partial.N >= 0:
            # the failing order never got appended; what is stored is consistent
            partial.beta_provisional = True
            io.write_archive(args.out, partial)
            print(f"aborted at order {partial.N + 1}; partial archive with orders 0..{partial.N} "
                  f"written to {args.out}", file=sys.stderr)
        raise
    io.write_archive(args.out, series)
    res = series.per_order_residual[1:]
    worst = max(res, default=mpfr(0))
    print(f"orders 0..{series.N} written to {args.out}")
    print(f"max cohomology residual {float(worst):.3e}; last {float(res[-1]) if res else 0.0:.3e}")
    return 0


def _load(args):
    return io.read_archive(args.input)


def _analysis(args, *names):
    """Fill unset analysis flags from ``--config`` (or the built-in defaults)."""
    a = io.load_run_config(args.config).analysis if args.config else io.AnalysisConfig()
    for name in names:
        if getattr(args, name) is None:
            setattr(args, name, getattr(a, name))


def cmd_pade(args):
    _analysis(args, "theta", "pade_orders", "log_mode")
    series = _load(args)
    if args.pade_orders is None:
        orders = pade.default_ladder(series, args.log_mode)
    else:
        orders = io.parse_pade_orders(args.pade_orders)
    comps = args.components.split(",") if args.components else None
    sets = pade.pole_cloud(series, args.theta, orders, log_mode=args.log_mode, components=comps)
    chash = io.config_hash(io.config_record(series.config))
    failures = [f"{s.component} [{s.m}/{s.n}] failed: {s.error}" for s in sets if s.error]
    io.write_csv(args.out, pade.POLE_COLUMNS, pade.pole_rows(sets), chash, failures)
    total = sum(len(s.poles) for s in sets)
    spurious = sum(p.spurious for s in sets for p in s.poles)
    print(f"{total} poles ({spurious} flagged spurious) from {len(sets)} approximants -> {args.out}")
    for f in failures:
        print(f, file=sys.stderr)
    return 0


def cmd_gevrey(args):
    _analysis(args, "rho", "r", "fit")
    series = _load(args)
    lo, hi = io.parse_fit_range(args.fit) if isinstance(args.fit, str) else args.fit
    if hi > series.N:
        raise InputError(f"fit range {lo}:{hi} exceeds computed order {series.N}")
    rows = gevrey.a_table(series, args.rho, args.r)
    chash = io.config_hash(io.config_record(series.config))
    io.write_csv(args.out, ("n", "A_component1", "A_component2", "A_both"), rows, chash,
                 [f"rho {args.rho} r {args.r}"])
    fits = [gevrey.fit_log(gevrey.a_sequence(series, args.rho, args.r, c), lo, hi, str(c))
            for c in (1, 2, "both")]
    sys.stdout.write(gevrey.fit_summary(fits))
    return 0


def cmd_validate(args):
    _analysis(args, "eps")
    series = _load(args)
    chash = io.config_hash(io.config_record(series.config))
    coh = diagnostics.cohomology_residuals(series)
    rows = []
    with series.ctx:
        eps = mpfr(args.eps)
        for n in range(1, series.N + 1):
            inv = diagnostics.invariance_residual(series, eps, n)
            rows.append([n, _ln(coh[n - 1]), _ln(inv)])
    io.write_csv(args.out, ("n", "ln_cohomology_residual", "ln_invariance_residual"), rows, chash,
                 [f"eps {args.eps}"])
    worst = max(coh, default=mpfr(0))
    print(f"max cohomology residual {float(worst):.3e}; residual table -> {args.out}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="lindstedt-tori",
                                description="Lindstedt series of lower dimensional tori and their analysis.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress per order")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("series", help="compute a series and write an archive")
    s.add_argument("--config", help="JSON run configuration")
    s.add_argument("--gamma", type=int, choices=(0, 1))
    s.add_argument("--omega", choices=FREQUENCY_KINDS)
    s.add_argument("--omega-value", help="decimal frequency for --omega custom")
    s.add_argument("--omega-units", choices=lindstedt.OMEGA_UNITS)
    s.add_argument("--order", type=int)
    s.add_argument("--digits", type=int)
    s.add_argument("--filter", type=int)
    s.add_argument("--grid-size", type=int)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_series)

    s = sub.add_parser("pade", help="pole clouds of Pade or Log-Pade approximants")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--config", help="JSON run configuration (analysis block)")
    s.add_argument("--theta")
    s.add_argument("--orders", dest="pade_orders", help="comma separated m/n list (default: largest near-diagonal pair that fits)")
    s.add_argument("--log", dest="log_mode", action="store_true", default=None,
                   help="use the logarithmic derivative")
    s.add_argument("--components", help="subset of g1,g2,mu1,mu2")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_pade)

    s = sub.add_parser("gevrey", help="A(n) table and logarithmic fits")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--config", help="JSON run configuration (analysis block)")
    s.add_argument("--rho", help="default 0.1")
    s.add_argument("--r", type=int, help="default 4")
    s.add_argument("--fit", help="lo:hi, default 40:110")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_gevrey)

    s = sub.add_parser("validate", help="cohomology and invariance residuals")
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--config", help="JSON run configuration (analysis block)")
    s.add_argument("--eps", help="default 1e-2")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_validate)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except LindstedtError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # anything unforeseen is an internal failure
        log.exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
