"""Command-line front end for the experiment suite.

Subcommands mirror the runners in :mod:`quasi1d.experiments` plus a
``verify`` gate that executes the randomized property suites and prints the
maximum residuals. Flags can be preloaded from a plain ``key=value`` config
file (command-line flags still win), and ``QUASI1D_SEED`` overrides the
property-suite seed.

Exit codes: 0 on success, 1 on solver or verification failure, 2 on bad
arguments.
"""

import argparse
import sys

from . import experiments
from .verification import run_verification

__all__ = ["cli_main", "main"]


def _parse_int_list(text):
    try:
        return [int(tok) for tok in str(text).split(",") if tok != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers: {text!r}") from exc


def _load_config_file(path):
    values = {}
    with open(path, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = line.split("=", 1)
            values[key.strip().replace("-", "_")] = value.strip()
    return values


def _add_common(parser):
    parser.add_argument("--output", default="results",
                        help="directory for report files (default: results)")
    parser.add_argument("--format", choices=("csv", "json"), default="json",
                        help="report file format")
    parser.add_argument("--cfl", type=float, default=0.9,
                        help="CFL cap for adaptive stepping")
    parser.add_argument("--tol", type=float, default=None,
                        help="absolute and relative tolerance for adaptive stepping")
    parser.add_argument("--config", default=None,
                        help="key=value file supplying flag defaults")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="quasi1d",
        description="entropy stable quasi-1D shallow water / gas flow experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("swe-convergence", help="shallow water convergence study")
    p.add_argument("--kind", choices=("manufactured", "fine-grid"),
                   default="manufactured")
    p.add_argument("--degree", type=_parse_int_list, default=[1, 2, 3, 4, 5])
    p.add_argument("--elements", type=_parse_int_list, default=None,
                   help="comma-separated doubling chain of element counts")
    p.add_argument("--t-final", type=float, default=0.5)
    p.add_argument("--g", type=float, default=9.81)
    p.add_argument("--flux", choices=("ec", "es-lxf", "es-wb"), default="es-lxf")
    p.add_argument("--reference-degree", type=int, default=3)
    p.add_argument("--reference-elements", type=int, default=8000)
    _add_common(p)

    p = sub.add_parser("swe-wellbalanced", help="lake-at-rest preservation test")
    p.add_argument("--case", choices=("continuous", "discontinuous", "both"),
                   default="both")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--elements", type=int, default=200)
    p.add_argument("--t-final", type=float, default=1.0)
    p.add_argument("--g", type=float, default=9.81)
    _add_common(p)

    p = sub.add_parser("swe-channel", help="transcritical converging-diverging channel")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--elements", type=int, default=200)
    p.add_argument("--t-final", type=float, default=500.0)
    p.add_argument("--g", type=float, default=9.81)
    p.add_argument("--steady-tol", type=float, default=1e-8)
    _add_common(p)

    p = sub.add_parser("euler-ec", help="entropy conservation verification run")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--elements", type=int, default=64)
    p.add_argument("--t-final", type=float, default=2.0)
    p.add_argument("--gamma", type=float, default=1.4)
    p.add_argument("--flux", choices=("ec", "es-lxf"), default="ec")
    _add_common(p)

    p = sub.add_parser("euler-convergence", help="gas flow convergence study")
    p.add_argument("--kind", choices=("manufactured", "fine-grid",
                                      "fine-grid-nonuniform"),
                   default="manufactured")
    p.add_argument("--degree", type=_parse_int_list, default=[1, 2, 3, 4, 5])
    p.add_argument("--elements", type=_parse_int_list, default=None)
    p.add_argument("--t-final", type=float, default=0.1)
    p.add_argument("--gamma", type=float, default=1.4)
    p.add_argument("--flux", choices=("ec", "es-lxf"), default="es-lxf")
    p.add_argument("--reference-degree", type=int, default=2)
    p.add_argument("--reference-elements", type=int, default=24000)
    _add_common(p)

    p = sub.add_parser("euler-nozzle", help="subsonic or transonic Laval nozzle")
    p.add_argument("--regime", choices=("subsonic", "transonic"),
                   default="subsonic")
    p.add_argument("--degree", type=int, default=3)
    p.add_argument("--elements", type=int, default=None)
    p.add_argument("--t-final", type=float, default=5.0)
    p.add_argument("--gamma", type=float, default=1.4)
    p.add_argument("--pressure-ratio", type=float, default=None)
    _add_common(p)

    p = sub.add_parser("verify", help="run the property suites, print residuals")
    p.add_argument("--pairs", type=int, default=10000,
                   help="random state pairs per flux suite")
    p.add_argument("--states", type=int, default=100,
                   help="random states for gradient/convexity checks")
    p.add_argument("--max-degree", type=int, default=7)
    p.add_argument("--seed", type=int, default=None,
                   help="override the QUASI1D_SEED environment variable")
    p.add_argument("--g", type=float, default=9.81)
    p.add_argument("--gamma", type=float, default=1.4)
    p.add_argument("--config", default=None)
    return parser


def _tolerances(args, default=1e-8):
    tol = args.tol if getattr(args, "tol", None) is not None else default
    return {"abs_tol": tol, "rel_tol": tol}


def _dispatch(args):
    if args.command == "verify":
        report = run_verification(n_pairs=args.pairs, n_states=args.states,
                                  max_degree=args.max_degree, seed=args.seed,
                                  gravity=args.g, gamma=args.gamma)
        for line in report.lines():
            print(line)
        print("verification:", "PASS" if report.passed else "FAIL")
        return 0 if report.passed else 1

    if args.command == "swe-convergence":
        report = experiments.run_swe_convergence(
            kind=args.kind, degrees=args.degree, resolutions=args.elements,
            gravity=args.g, t_final=args.t_final, interface_flux=args.flux,
            reference=(args.reference_degree, args.reference_elements),
            cfl=args.cfl, **_tolerances(args, 1e-10))
    elif args.command == "swe-wellbalanced":
        kinds = ("continuous", "discontinuous") if args.case == "both" \
            else (args.case,)
        paths = []
        for kind in kinds:
            report = experiments.run_swe_wellbalanced(
                kind=kind, degree=args.degree, num_elements=args.elements,
                t_final=args.t_final, gravity=args.g)
            paths += report.save(args.output, args.format)
            print(f"{report.experiment}: "
                  f"L1 {report.metrics['l1_error']:.3e}  "
                  f"L2 {report.metrics['l2_error']:.3e}  "
                  f"Linf {report.metrics['linf_error']:.3e}")
        for path in paths:
            print("wrote", path)
        return 0
    elif args.command == "swe-channel":
        report = experiments.run_swe_channel(
            degree=args.degree, num_elements=args.elements, gravity=args.g,
            t_final=args.t_final, steady_tol=args.steady_tol, cfl=args.cfl,
            **_tolerances(args, 1e-6))
    elif args.command == "euler-ec":
        report = experiments.run_euler_ec(
            degree=args.degree, num_elements=args.elements,
            t_final=args.t_final, gamma=args.gamma, interface_flux=args.flux,
            cfl=args.cfl, **_tolerances(args, 1e-10))
    elif args.command == "euler-convergence":
        report = experiments.run_euler_convergence(
            kind=args.kind, degrees=args.degree, resolutions=args.elements,
            gamma=args.gamma, t_final=args.t_final, interface_flux=args.flux,
            reference=(args.reference_degree, args.reference_elements),
            cfl=args.cfl, **_tolerances(args, 1e-10))
    elif args.command == "euler-nozzle":
        report = experiments.run_euler_nozzle(
            regime=args.regime, degree=args.degree,
            num_elements=args.elements, gamma=args.gamma,
            t_final=args.t_final, pressure_ratio=args.pressure_ratio,
            cfl=args.cfl, **_tolerances(args))
    else:  # pragma: no cover - argparse enforces the choices
        raise ValueError(f"unhandled command {args.command!r}")

    for path in report.save(args.output, args.format):
        print("wrote", path)
    for key, value in report.metrics.items():
        print(f"{key}: {value}")
    return 0


def cli_main(argv=None):
    parser = _build_parser()
    # Pre-scan for --config so file values become defaults that flags override.
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    if known.config is not None:
        try:
            file_values = _load_config_file(known.config)
        except (OSError, ValueError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        for action in parser._subparsers._group_actions[0].choices.values():
            usable = {dest: value for dest, value in file_values.items()
                      if any(a.dest == dest for a in action._actions)}
            for dest, value in usable.items():
                target = next(a for a in action._actions if a.dest == dest)
                if target.type is not None:
                    value = target.type(value)
                action.set_defaults(**{dest: value})

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2

    try:
        return _dispatch(args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
