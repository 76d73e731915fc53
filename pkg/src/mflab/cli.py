"""Command-line interface.

Subcommands:
    run <config>      full certified run from a preset name or config file
    sweep <configs>   several runs in a worker pool
    check             randomized property suites only
    demo-mixture      the two-flow separation demonstration

Exit status: 0 on success, 1 on usage errors, 2 when a certification fails.
"""

from __future__ import annotations

import argparse
import glob
import sys

from .config import PRESETS, apply_overrides, resolve_config
from .errors import MFLabError, UsageError
from .runner import demo_mixture, run, sweep
from .suites import run_property_suites


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mflab",
                     description="certified mean-field closeness runs on small lattices")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", parents=[], help="single certified run")
    run_p.add_argument("config",
                       help=f"config file path or preset: {', '.join(sorted(PRESETS))}")
    run_p.add_argument("--seed", type=int)
    run_p.add_argument("--out-dir")
    run_p.add_argument("--dt", type=float)
    run_p.add_argument("--t-final", type=float)
    run_p.add_argument("--k", type=int, action="append",
                       help="marginal order; repeat for several")
    run_p.add_argument("--tol", type=float)

    sweep_p = sub.add_parser("sweep", help="run many configs concurrently")
    sweep_p.add_argument("configs", nargs="+",
                         help="config paths, globs, or preset names")
    sweep_p.add_argument("--out-dir", help="root directory; one subdir per run")
    sweep_p.add_argument("--jobs", type=int)

    check_p = sub.add_parser("check", help="randomized property suites")
    check_p.add_argument("--seed", type=int, default=0)

    demo_p = sub.add_parser("demo-mixture",
                            help="mean-field flow vs mixture of pure flows")
    demo_p.add_argument("--sites", type=int, default=4)
    demo_p.add_argument("--particles", type=int, default=3)
    demo_p.add_argument("--t-final", type=float, default=1.0)
    demo_p.add_argument("--dt", type=float, default=1e-3)
    demo_p.add_argument("--v-preset", default="bounded")
    demo_p.add_argument("--out-dir", default="mflab-out/mixture")
    return parser


def _expand_specs(raw: list[str]) -> list[str]:
    specs = []
    for item in raw:
        if item in PRESETS:
            specs.append(item)
            continue
        matches = sorted(glob.glob(item))
        if matches:
            specs.extend(matches)
        else:
            specs.append(item)  # resolve_config reports the missing file
    return specs


def _cmd_run(args) -> int:
    config = resolve_config(args.config)
    config = apply_overrides(config, seed=args.seed, out_dir=args.out_dir,
                             dt=args.dt, t_final=args.t_final, k_values=args.k,
                             tol=args.tol)
    report = run(config)
    status = "PASS" if report.passed else "FAIL"
    print(f"{status} {config.name}: outputs in {report.out_dir}")
    for name, margin in sorted(report.summary["min_margins"].items()):
        print(f"  {name:<26} min margin {margin: .3e}")
    for violation in report.summary["violations"][:5]:
        print(f"  VIOLATION {violation}")
    return report.exit_code


def _cmd_sweep(args) -> int:
    results = sweep(_expand_specs(args.configs), out_root=args.out_dir,
                    jobs=args.jobs)
    worst = 0
    for spec, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'} {spec}: {detail}")
        if not passed:
            worst = 2
    return worst


def _cmd_check(args) -> int:
    results = run_property_suites(args.seed)
    worst = 0
    for res in results:
        rel = "<=" if res.direction == "max" else ">="
        bound = res.tolerance if res.direction == "max" else -res.tolerance
        status = "PASS" if res.passed else "FAIL"
        print(f"{status} {res.name:<26} ({res.count} cases) worst {res.worst: .3e} "
              f"{rel} {bound: .0e}")
        if not res.passed:
            worst = 2
    return worst


def _cmd_demo(args) -> int:
    report = demo_mixture(sites=args.sites, n_particles=args.particles,
                          t_final=args.t_final, dt=args.dt,
                          v_preset=args.v_preset, out_dir=args.out_dir)
    s = report.summary
    status = "PASS" if report.passed else "FAIL"
    print(f"{status} mixture demo: outputs in {report.out_dir}")
    print(f"  initial one-particle fidelity defect {s['initial_one_particle_defect']:.3e}")
    print(f"  max gap between the two candidate flows {s['max_flow_gap']:.6f} "
          f"at t = {s['t_at_max_gap']:.3f}")
    return report.exit_code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "run":
            code = _cmd_run(args)
        elif args.command == "sweep":
            code = _cmd_sweep(args)
        elif args.command == "check":
            code = _cmd_check(args)
        else:
            code = _cmd_demo(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except MFLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return code


if __name__ == "__main__":
    sys.exit(main())
