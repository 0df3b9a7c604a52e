"""Command-line front end.

    slabadjoint run     [--config PATH] [--grid N] [--out DIR] [--format tsv|json|both] [--seed N]
    slabadjoint verify  ...
    slabadjoint tables  ...

Exit status: 0 when every gating verification passes, 1 when any fails
(reports are still written), 2 for configuration errors.
"""
from __future__ import annotations

import argparse
import sys

from .bvp import Grid
from .checks import CheckResult, check_grid_convergence, grid_levels_for, run_all_checks
from .config import FORMATS, RunConfig, apply_pairs, load_config
from .errors import ConfigError, OffGridError
from .pipeline import analyze_detector
from .report import write_outputs, write_verification

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="run configuration (default: built-in slab data)")
    common.add_argument("--grid", type=int, metavar="N", help="number of grid nodes (odd)")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--format", choices=FORMATS, help="output format")
    common.add_argument("--seed", type=int, help="seed for the random checks")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override any config key, e.g. tolerance.quad_vs_closed=1e-12")
    common.add_argument("-q", "--quiet", action="store_true", help="suppress per-check lines")

    parser = argparse.ArgumentParser(prog="slabadjoint", description="Slab detector sensitivities and uncertainties")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="full pipeline, tables, and verification")
    sub.add_parser("verify", parents=[common], help="oracle suites only")
    sub.add_parser("tables", parents=[common], help="paper-style tables only")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    pairs = []
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        pairs.append((key.strip(), value.strip()))
    if args.grid is not None:
        pairs.append(("grid.n_nodes", str(args.grid)))
    if args.out is not None:
        pairs.append(("output.dir", args.out))
    if args.format is not None:
        pairs.append(("output.format", args.format))
    if args.seed is not None:
        pairs.append(("mc.seed", str(args.seed)))
    return apply_pairs(cfg, pairs).validate()


def analyze_all(cfg: RunConfig):
    """Analyses for detectors that sit on grid nodes, plus failure records for the rest."""
    analyses, failures = [], []
    for b in cfg.detectors:
        p = cfg.parameters_at(b)
        grid = Grid.for_params(p, cfg.n_nodes)
        try:
            analyses.append(analyze_detector(p, grid))
        except OffGridError as exc:
            failures.append(CheckResult("grid/detector-on-node", False, float("nan"), 0.0, str(exc), detector=b))
    return analyses, failures


def verification(cfg: RunConfig, analyses, failures) -> list:
    checks = list(failures)
    checks += run_all_checks(
        analyses, cfg.tolerances, cfg.cases, cfg.grid_levels,
        duality_samples=cfg.duality_samples, mc_samples=cfg.mc_samples, seed=cfg.seed,
    )
    tol = cfg.tolerances
    for f in failures:
        p = cfg.parameters_at(f.detector)
        checks += check_grid_convergence(p, cfg.grid_levels or grid_levels_for(cfg.n_nodes), tol)
    return checks


def _report(checks, quiet: bool) -> int:
    gating = [c for c in checks if c.gating]
    failed = [c for c in gating if not c.passed]
    for c in checks:
        if not quiet or not c.passed:
            print(c.line())
    print(f"{len(gating) - len(failed)}/{len(gating)} gating checks passed")
    return EXIT_OK if not failed else EXIT_FAILED


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    analyses, failures = analyze_all(cfg)
    if args.command == "tables":
        write_outputs(cfg.out_dir, cfg.out_format, cfg, analyses, tables_only=True)
        for f in failures:
            print(f.line())
        return EXIT_OK if not failures else EXIT_FAILED

    checks = verification(cfg, analyses, failures)
    if args.command == "run":
        write_outputs(cfg.out_dir, cfg.out_format, cfg, analyses)
        for a in analyses:
            print(f"R(b={a.detector_b:g} cm) = {a.response_closed:.6e}; "
                  f"adjoint solves per response: {a.ledger.adjoint_solves}")
    write_verification(cfg.out_dir, cfg.out_format, checks)
    return _report(checks, args.quiet)


if __name__ == "__main__":
    sys.exit(main())
