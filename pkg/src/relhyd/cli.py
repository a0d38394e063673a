"""Command-line front end.

Subcommands: `run` (march one problem and optionally dump the solution),
`converge` (grid-convergence table on a smooth problem), `reference`
(first-order fine-mesh reference curve).  A plain `key = value` config file
can stand in for flags; explicit flags win.  Exit codes: 0 success,
1 configuration error, 2 admissibility abort.
"""

from __future__ import annotations

import argparse
import sys

from . import norms, output, reference
from .driver import ConfigError, RunConfig, run
from .eos import AdmissibilityError, ConvergenceError, EosModel
from .problems import PROBLEMS

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_ADMISSIBILITY = 2


def _add_common(sub):
    sub.add_argument("--config", help="key = value file; flags override it")
    sub.add_argument("--problem", help=f"one of {', '.join(sorted(PROBLEMS))}")
    sub.add_argument("--eos", choices=["id", "tm", "ip", "rc"],
                     help="equation of state (problem default when omitted)")
    sub.add_argument("--gamma", type=float, default=None,
                     help="heat ratio for --eos id")
    sub.add_argument("--degree", type=int, default=3)
    sub.add_argument("--cells", default="64", help="NX or NX,NY")
    sub.add_argument("--tfinal", type=float, default=None)
    sub.add_argument("--safety", type=float, default=None)
    sub.add_argument("--alpha-max", type=float, default=None)
    sub.add_argument("--correction", choices=["radau", "g2"], default="radau")
    sub.add_argument("--jet-pressure", type=float, default=None)
    sub.add_argument("--out", default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relhyd",
        description="Relativistic hydrodynamics with single-stage "
                    "flux-reconstruction and subcell blending")
    subs = parser.add_subparsers(dest="command", required=True)
    _add_common(subs.add_parser("run", help="advance one problem to its final time"))
    _add_common(subs.add_parser("converge", help="grid-convergence study"))
    ref = subs.add_parser("reference", help="first-order fine-mesh reference")
    _add_common(ref)
    return parser


def parse_config_file(path: str) -> dict:
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{line_no}: expected key = value")
                key, value = (part.strip() for part in line.split("=", 1))
                values[key.replace("-", "_")] = value
    except OSError as err:
        raise ConfigError(f"cannot read config file: {err}") from err
    return values


_CONFIG_CASTS = {
    "gamma": float, "degree": int, "tfinal": float, "safety": float,
    "alpha_max": float, "jet_pressure": float,
}


def _merge_config_file(args: argparse.Namespace):
    if not args.config:
        return
    values = parse_config_file(args.config)
    for key, raw in values.items():
        if not hasattr(args, key):
            raise ConfigError(f"unknown config key {key!r}")
        if getattr(args, key) in (None, "64") or (
                key == "cells" and getattr(args, key) == "64"):
            cast = _CONFIG_CASTS.get(key, str)
            setattr(args, key, cast(raw))


def _parse_cells(text) -> tuple:
    try:
        return tuple(int(part) for part in str(text).split(","))
    except ValueError as err:
        raise ConfigError(f"bad --cells value {text!r}") from err


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    if not args.problem:
        raise ConfigError("--problem is required")
    eos = None
    if args.eos:
        eos = EosModel.parse(args.eos, args.gamma if args.gamma else 5.0 / 3.0)
    elif args.gamma:
        prob = PROBLEMS.get(args.problem)
        if prob is None:
            raise ConfigError(f"unknown problem {args.problem!r}")
        eos = EosModel.parse(prob.default_eos.kind.value, args.gamma)
    return RunConfig(
        problem=args.problem, eos=eos, degree=args.degree,
        cells=_parse_cells(args.cells), t_final=args.tfinal,
        safety=args.safety, alpha_max=args.alpha_max,
        correction=args.correction, jet_pressure=args.jet_pressure)


def _cmd_run(args) -> int:
    config = _config_from_args(args)
    result = run(config)
    print(f"{args.problem}: t={result.t:.6g} steps={result.steps} "
          f"wall={result.wall_time:.2f}s alpha_max={result.stats.alpha_max:.3f} "
          f"corrections={result.stats.flux_corrections}")
    if args.out:
        output.write_solution_csv(result, args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_converge(args) -> int:
    config = _config_from_args(args)
    rows = norms.convergence_study(config, _parse_cells(args.cells))
    print(f"{'cells':>8} {'L1 error':>14} {'L1 ord':>8} {'L2 error':>14} "
          f"{'L2 ord':>8} {'Linf error':>14} {'Linf ord':>8}")
    for row in rows:
        print(f"{row['cells']:>8d} {row['l1_error']:>14.6e} {row['l1_order']:>8.3f} "
              f"{row['l2_error']:>14.6e} {row['l2_order']:>8.3f} "
              f"{row['linf_error']:>14.6e} {row['linf_order']:>8.3f}")
    if args.out:
        output.write_table_csv(rows, args.out)
        print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_reference(args) -> int:
    config = _config_from_args(args)
    prob, eos, t_final, _, _ = config.resolve()
    cells = _parse_cells(args.cells)[0]
    ref = reference.reference_solution(prob, eos, cells, t_final)
    if args.out:
        output.write_reference_csv(ref, args.out)
        print(f"wrote {args.out}")
    else:
        print(f"reference on {cells} cells at t={t_final:.6g}: "
              f"rho in [{ref.rho.min():.6g}, {ref.rho.max():.6g}]")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _merge_config_file(args)
        handler = {"run": _cmd_run, "converge": _cmd_converge,
                   "reference": _cmd_reference}[args.command]
        return handler(args)
    except ConfigError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (AdmissibilityError, ConvergenceError) as err:
        print(f"admissibility abort: {err}", file=sys.stderr)
        return EXIT_ADMISSIBILITY
    except ValueError as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
