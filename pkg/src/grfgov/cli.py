"""Command-line interface: sim, plot, and check subcommands."""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .checks import SUITES
from .scenarios import SCENARIOS, default_config, load_config, \
    run_simulation
from .telemetry import emit_plots, export_csv, read_csv


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="grfgov",
        description="Reference-governor simulation for a thruster-assisted "
                    "variable-length inverted pendulum")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("sim", help="run a scenario and write CSV")
    sim.add_argument("--scenario", required=True, choices=SCENARIOS)
    sim.add_argument("--erg", required=True, choices=("on", "off"))
    sim.add_argument("--config", help="JSON config path")
    sim.add_argument("--dt", type=float, help="integration step [s]")
    sim.add_argument("--duration", type=float, help="run length [s]")
    sim.add_argument("--out", required=True, help="output CSV path")

    plot = sub.add_parser("plot", help="render SVG charts from a CSV")
    plot.add_argument("--in", dest="infile", required=True)
    plot.add_argument("--out", required=True, help="SVG path prefix")
    plot.add_argument("--mu-s", type=float, default=None,
                      help="overlay friction-cone bounds at this mu_s")

    check = sub.add_parser("check", help="run a property suite")
    check.add_argument("--suite", required=True, choices=sorted(SUITES))
    return parser


def _cmd_sim(args) -> int:
    if args.config:
        cfg = load_config(args.config, scenario=args.scenario)
    else:
        cfg = default_config(args.scenario)
    sim = cfg.sim
    if args.dt is not None:
        sim = replace(sim, dt_s=args.dt)
    if args.duration is not None:
        sim = replace(sim, duration_s=args.duration)
    cfg = replace(cfg, sim=sim,
                  erg=replace(cfg.erg, enabled=(args.erg == "on")))
    result = run_simulation(cfg)
    export_csv(result.records, args.out,
               n_c=cfg.constraints.n_constraints)
    print(f"wrote {args.out}: {len(result.records)} steps, "
          f"scenario={cfg.scenario}, erg={args.erg}")
    return 0


def _cmd_plot(args) -> int:
    records = read_csv(args.infile)
    paths = emit_plots(records, args.out, mu_s=args.mu_s)
    for p in paths:
        print(f"wrote {p}")
    return 0


def _cmd_check(args) -> int:
    ok, lines = SUITES[args.suite]()
    for line in lines:
        print(line)
    print(f"suite {args.suite}: {'PASS' if ok else 'FAIL'}")
    return 0 if ok else 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "sim":
            return _cmd_sim(args)
        if args.command == "plot":
            return _cmd_plot(args)
        return _cmd_check(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
