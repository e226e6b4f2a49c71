"""Command-line entry point: ``aidecoh <subcommand> CONFIG``.

Exit codes: 0 success, 1 validation failure, 2 configuration error,
3 runtime or numerical error.
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings

from . import __version__
from .config import ConfigError, load_config
from .parallel import THREADS_ENV, resolve_workers

EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2, 3

log = logging.getLogger("aidecoh")


def _global_flags(parser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    parser.add_argument("--seed", type=int, default=d, help="override [oracle] seed")
    parser.add_argument("--threads", type=int, default=d,
                        help=f"worker count (default: ${THREADS_ENV} or CPU count)")
    parser.add_argument("--strict-regime", action="store_true",
                        default=argparse.SUPPRESS if suppress else False,
                        help="turn regime warnings into errors")
    parser.add_argument("--output", default=d, help="output path ('-' for stdout)")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aidecoh", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"aidecoh {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    _global_flags(p, suppress=False)
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("config", help="configuration file")
        _global_flags(sp, suppress=True)
        return sp

    add("sweep", "evaluate a closed-form model along one parameter axis")
    add("validate", "run oracle-vs-closed-form checks")
    sp = add("flyby", "impulsive fly-by response (optionally checked against trajectories)")
    sp.add_argument("--oracle", action="store_true", help="also integrate the trajectories")
    sp.add_argument("--trajectory", metavar="PATH", help="write the integrated tracks here")
    sp.add_argument("--records", type=int, default=1000, help="track rows for --trajectory")
    sp = add("cosmic", "DC-Stark kick and event rate for a passing charge")
    sp.add_argument("--b-max", type=float, help="event-rate impact radius (default: [cosmic] b)")
    sp = add("dump-bath", "write sampled bath realisations, one particle per row")
    sp.add_argument("--samples", type=int, default=1, help="number of realisations")
    return p


def _cmd_sweep(cfg, args, workers):
    from .sweep import run_sweep, write_table
    if cfg.sweep is None:
        raise ConfigError("the sweep command needs a [sweep] section")
    write_table(run_sweep(cfg, workers, args.strict_regime), cfg, "sweep")
    return EXIT_OK


def _cmd_validate(cfg, args, workers):
    from .sweep import run_validation, write_table
    report = run_validation(cfg, workers)
    for line in report.lines():
        print(line, file=sys.stderr if cfg.output.path == "-" else sys.stdout)
    write_table(report.table(), cfg, "validate")
    return EXIT_OK if report.passed else EXIT_VALIDATION


def _cmd_flyby(cfg, args, workers):
    from .flyby import flyby_overlap_factors, flyby_phase
    from .oracle import integrate_flyby_trajectories, tidal_phase_bound, write_trajectory_dump
    from .sweep import Table, write_table
    if cfg.flyby is None:
        raise ConfigError("the flyby command needs a [flyby] section")
    e, c = cfg.experiment, cfg.constants
    f1, f2, f3 = flyby_overlap_factors(cfg.flyby, e, c, args.strict_regime)
    X = f1 * f2 * f3
    row = [0.5 + 0.5 * X.real, 0.5 - 0.5 * X.real, abs(X), flyby_phase(cfg.flyby, e, c),
           tidal_phase_bound(cfg.flyby, e, c)]
    cols = ["rho_theta0_0", "rho_theta0_pi", "contrast", "phase", "tidal_bound"]
    if args.oracle or args.trajectory:
        n_rec = args.records if args.trajectory else 0
        traj = integrate_flyby_trajectories(cfg.flyby, e, c, cfg.trajectory_step, n_records=n_rec)
        cols += ["trajectory_phase", "halving_difference"]
        row += [traj.phase, traj.halving_difference]
        if args.trajectory:
            write_trajectory_dump(args.trajectory, traj, cfg.output.delimiter)
    write_table(Table(tuple(cols), [row]), cfg, "flyby")
    return EXIT_OK


def _cmd_cosmic(cfg, args, workers):
    from .cosmic import (crossover_radius, event_rate, stark_kick, stark_kick_quadrature,
                         stark_kick_with_bias)
    from .sweep import Table, write_table
    if cfg.cosmic is None:
        raise ConfigError("the cosmic command needs a [cosmic] section")
    s, c = cfg.cosmic, cfg.constants
    b_max = args.b_max if args.b_max is not None else s.b
    rate = event_rate(s, b_max, cfg.experiment.tau)
    cols = ("stark_kick", "stark_kick_with_bias", "quadrature_force", "quadrature_displayed",
            "crossover_radius", "b_max", "rate", "waiting_time", "per_shot")
    row = [stark_kick(s, c), stark_kick_with_bias(s, c), stark_kick_quadrature(s, c, "force"),
           stark_kick_quadrature(s, c, "displayed"), crossover_radius(s, c), b_max,
           rate.rate, rate.waiting_time, rate.per_shot]
    write_table(Table(cols, [row]), cfg, "cosmic")
    return EXIT_OK


def _cmd_dump_bath(cfg, args, workers):
    import io
    from .bath import sample_bath, write_bath_dump
    from .sweep import header_lines
    if args.samples < 1:
        raise ConfigError("--samples must be >= 1")
    samples = [sample_bath(cfg.bath, cfg.experiment.tau, cfg.oracle.seed, i)
               for i in range(args.samples)]
    buf = io.StringIO()
    for ln in header_lines(cfg, "dump-bath"):
        buf.write(ln + "\n")
    write_bath_dump(buf, samples, cfg.output.delimiter)
    if cfg.output.path == "-":
        sys.stdout.write(buf.getvalue())
    else:
        with open(cfg.output.path, "w", newline="", encoding="utf-8") as fh:
            fh.write(buf.getvalue())
    return EXIT_OK


_COMMANDS = {"sweep": _cmd_sweep, "validate": _cmd_validate, "flyby": _cmd_flyby,
             "cosmic": _cmd_cosmic, "dump-bath": _cmd_dump_bath}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        workers = resolve_workers(args.threads)
        cfg = load_config(args.config).with_overrides(seed=args.seed, output=args.output)
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        with warnings.catch_warnings():
            if args.strict_regime:
                from .regime import RegimeWarning
                warnings.simplefilter("error", RegimeWarning)
            return _COMMANDS[args.command](cfg, args, workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, ValueError, OSError, RuntimeError, UserWarning) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
