"""
Command-line entry point.

  fraclap solve   --s 0.5 --domain "-1,1" --f const:1 --n 512 --out sol.json
  fraclap analyze --input sol.json --sigma 0.1:1.9:0.1 --out rates.csv
  fraclap verify  --suite getoor --s 0.25,0.5,0.75 --tol 1e-4
  fraclap sweep   --s 0.1:0.9:0.1 --n 2048 --out sweep.csv   (or --config sweep.json)

Every command that writes a file also writes <file>.manifest.json. Exit codes: 0 success,
1 failed check or computation error, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import re
import sys
from pathlib import Path
from typing import Any, Callable

import numpy as np
from pydantic import ValidationError

from .besov import k_functional
from .config import SweepConfig, load_sweep_config, parse_domain, parse_grid, resolve_threads
from .errors import ConfigError, DescriptorError, FracLapError
from .fracop import FracParams
from .harness import DEFAULT_MIN_CELLS, estimate_index, measure_profile, sweep_s
from .reports import (
    K_COLUMNS,
    MODULUS_COLUMNS,
    RATE_COLUMNS,
    SWEEP_COLUMNS,
    VERIFY_COLUMNS,
    format_csv,
    k_rows,
    modulus_rows,
    rate_rows,
    read_grid_function,
    sweep_rows,
    verify_rows,
    write_manifest,
    write_solution,
    write_text,
)
from .solver1d import Mesh, solve_dirichlet
from .verify import SUITES, SuiteOptions, run_suite

logger = logging.getLogger(__name__)

# Suites run when --suite is not given.
CONTRACTED_SUITES = ("getoor", "cone-identity", "marchaud", "k-functional", "equivalence")
K_TS = np.logspace(-4, 4, 161)

_NEGATIVE_VALUE = re.compile(r"^-\.?\d")


def _glue_negative_values(argv: list[str]) -> list[str]:
    """["--domain", "-1,1"] -> ["--domain=-1,1"]; argparse reads "-1,1" as an option."""
    out: list[str] = []
    i = 0
    while i < len(argv):
        token = argv[i]
        nxt = argv[i + 1] if i + 1 < len(argv) else None
        if token.startswith("--") and "=" not in token and nxt and _NEGATIVE_VALUE.match(nxt):
            out.append(f"{token}={nxt}")
            i += 2
            continue
        out.append(token)
        i += 1
    return out


def _params(args: argparse.Namespace) -> dict[str, Any]:
    return {k: v for k, v in sorted(vars(args).items()) if k != "argv" and not callable(v)}


def run_solve(args: argparse.Namespace) -> int:
    dom = parse_domain(args.domain)
    mesh = Mesh.uniform(dom, args.n)
    u, report = solve_dirichlet(mesh, FracParams(args.s), args.f)
    sol, rep = write_solution(args.out, u, report)
    write_manifest(args.out, "solve", args.argv, _params(args), args.seed)
    logger.info(
        "Solved s=%s on %s with %d elements: energy=%.10g stability_gap=%.3e cond=%.3e",
        args.s, args.domain, args.n, report.energy, report.stability_gap, report.cond_est,
    )
    logger.info("Wrote %s and %s", sol, rep)
    return 0


def run_analyze(args: argparse.Namespace) -> int:
    u = read_grid_function(args.input)
    sigmas = parse_grid(args.sigma) if args.sigma else []
    threads = resolve_threads(args.threads)
    profile = measure_profile(u, args.rho, args.min_cells, threads)
    est = estimate_index(profile, sigmas)
    out = Path(args.out)
    write_text(out, format_csv(RATE_COLUMNS, rate_rows(est, sigmas)))
    profile_out = out.with_name(out.stem + ".profile.csv")
    write_text(profile_out, format_csv(MODULUS_COLUMNS, modulus_rows(profile)))
    if args.k_out:
        kp = k_functional(u, K_TS)
        write_text(args.k_out, format_csv(K_COLUMNS, k_rows(kp)))
    write_manifest(out, "analyze", args.argv, _params(args), args.seed)
    logger.info(
        "sigma*=%.4f (95%% CI %.4f..%.4f, r2=%.6f) from %d steps",
        est.sigma_star, est.slope_ci[0], est.slope_ci[1], est.r2, len(est.steps),
    )
    return 0


def run_verify(args: argparse.Namespace) -> int:
    names = [n.strip() for n in (args.suite or ",".join(CONTRACTED_SUITES)).split(",") if n]
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise ConfigError(f"Unknown suite: {', '.join(unknown)}. Supported: {', '.join(SUITES)}")
    opts = SuiteOptions(
        s_values=tuple(parse_grid(args.s)), tol=args.tol, seed=args.seed, n=args.n,
        points=args.points, threads=resolve_threads(args.threads),
    )
    rows = [row for name in names for row in run_suite(name, opts)]
    table = format_csv(VERIFY_COLUMNS, verify_rows(rows))
    sys.stdout.write(table)
    if args.out:
        write_text(args.out, table)
        write_manifest(args.out, "verify", args.argv, _params(args), args.seed)
    failed = [r for r in rows if not r.passed]
    for r in failed:
        logger.error("FAILED %s %s: %.3e > %.3e", r.suite, r.case, r.value, r.tolerance)
    logger.info("%d/%d checks passed", len(rows) - len(failed), len(rows))
    return 1 if failed else 0


def _sweep_config(args: argparse.Namespace) -> SweepConfig:
    if args.config:
        return load_sweep_config(Path(args.config).read_text(encoding="utf-8"))
    if not args.s:
        raise ConfigError("sweep needs --config or --s")
    try:
        return SweepConfig(
            s_grid=parse_grid(args.s), n=args.n, domain=args.domain, f=args.f,
            min_cells=args.min_cells, rho=args.rho, threads=args.threads, seed=args.seed,
        )
    except ValidationError as e:
        raise ConfigError(f"Invalid sweep options: {e}") from e


def run_sweep(args: argparse.Namespace) -> int:
    cfg = _sweep_config(args)
    rows = sweep_s(cfg)
    write_text(args.out, format_csv(SWEEP_COLUMNS, sweep_rows(rows)))
    params = {**_params(args), "config": cfg.model_dump()}
    write_manifest(args.out, "sweep", args.argv, params, cfg.seed)
    errors = [r for r in rows if r.error]
    logger.info("Sweep wrote %d rows to %s (%d failed)", len(rows), args.out, len(errors))
    return 1 if errors else 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--threads", type=int, default=None,
                        help="Worker threads (default: FRACLAP_THREADS or all cores)")
    common.add_argument("--seed", type=int, default=0, help="Random seed (default 0)")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", "-v", action="store_true", help="Debug logging")
    verbosity.add_argument("--quiet", "-q", action="store_true", help="Warnings and errors only")

    parser = argparse.ArgumentParser(
        prog="fraclap",
        description="Fractional Laplacian solver and Besov regularity measurements.",
    )
    subparsers = parser.add_subparsers(dest="command", help="command")

    solve = subparsers.add_parser("solve", parents=[common], help="Solve (-Δ)^s u = f in 1D")
    solve.add_argument("--s", type=float, required=True, help="Order s in [0.05, 0.95]")
    solve.add_argument("--domain", default="-1,1", help='Interval union "a,b;c,d" (default -1,1)')
    solve.add_argument("--f", default="const:1", help="Right-hand side descriptor")
    solve.add_argument("--n", type=int, default=512, help="Mesh elements (default 512)")
    solve.add_argument("--out", required=True, help="Solution JSON path")
    solve.set_defaults(handler=run_solve)

    analyze = subparsers.add_parser(
        "analyze", parents=[common], help="Moduli and fitted smoothness index of a solution"
    )
    analyze.add_argument("--input", required=True, help="GridFunction JSON")
    analyze.add_argument("--sigma", default="", help="Indices to test, lo:hi:step or a,b,c")
    analyze.add_argument("--rho", type=float, default=0.25, help="Largest step (default 0.25)")
    analyze.add_argument("--min-cells", type=int, default=4,
                         help="Shortest step in cells (default 4)")
    analyze.add_argument("--k-out", default=None, help="Also write the K-functional CSV here")
    analyze.add_argument("--out", required=True, help="RateEstimate CSV path")
    analyze.set_defaults(handler=run_analyze)

    verify = subparsers.add_parser("verify", parents=[common], help="Run verification suites")
    verify.add_argument("--suite", default=None,
                        help=f"Comma-separated suites: {', '.join(SUITES)}")
    verify.add_argument("--s", default="0.25,0.5,0.75", help="Orders s (default 0.25,0.5,0.75)")
    verify.add_argument("--tol", type=float, default=1e-4, help="Pointwise tolerance")
    verify.add_argument("--n", type=int, default=1025, help="Grid points (default 1025)")
    verify.add_argument("--points", type=int, default=10, help="Probe points per case")
    verify.add_argument("--out", default=None, help="Also write the table as CSV")
    verify.set_defaults(handler=run_verify)

    sweep = subparsers.add_parser("sweep", parents=[common], help="Solve and measure across s")
    sweep.add_argument("--config", default=None, help="JSON experiment configuration")
    sweep.add_argument("--s", default=None, help="s grid, lo:hi:step or a,b,c")
    sweep.add_argument("--n", type=int, default=2048, help="Mesh elements (default 2048)")
    sweep.add_argument("--domain", default="-1,1", help="Interval union (default -1,1)")
    sweep.add_argument("--f", default="const:1", help="Right-hand side descriptor")
    sweep.add_argument("--min-cells", type=int, default=DEFAULT_MIN_CELLS,
                       help=f"Shortest step in cells (default {DEFAULT_MIN_CELLS})")
    sweep.add_argument("--rho", type=float, default=0.25, help="Largest step (default 0.25)")
    sweep.add_argument("--out", required=True, help="Sweep CSV path")
    sweep.set_defaults(handler=run_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    raw = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_glue_negative_values(raw))
    except SystemExit as e:
        return int(e.code or 0)
    level = logging.INFO
    if getattr(args, "verbose", False):
        level = logging.DEBUG
    elif getattr(args, "quiet", False):
        level = logging.WARNING
    logging.basicConfig(level=level, format="%(message)s")
    handler: Callable[[argparse.Namespace], int] | None = getattr(args, "handler", None)
    if handler is None:
        parser.print_help(sys.stderr)
        return 2
    args.argv = raw
    try:
        return handler(args)
    except (ConfigError, DescriptorError) as e:
        logger.error("fraclap %s: %s", args.command, e)
        return 2
    except FracLapError as e:
        logger.error("fraclap %s failed: %s", args.command, e)
        return 1


if __name__ == "__main__":
    sys.exit(main())
