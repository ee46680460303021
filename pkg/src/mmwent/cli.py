"""Command-line front end for the sweep scenarios.

Exit codes: 0 on success, 2 on configuration errors, 3 when any row
failed the truncation-convergence check (the CSV is still written with
those rows flagged).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .link import FrequencyOutOfModelRange
from .sweeps import (
    EB_THRESHOLDS,
    FIG1,
    FIG2,
    FIG3,
    FIG4,
    LINK_BUDGET,
    ConfigError,
    default_spec,
    from_config_file,
    render_link_report,
    run_sweep,
    write_csv,
)

__all__ = ["main", "build_parser"]

_COMMANDS = (
    ("fig1", FIG1, "thermal state preparation: entanglement vs temperature and squeezing"),
    ("fig2", FIG2, "squeezed vacuum through one thermal channel vs transmissivity"),
    ("fig3", FIG3, "non-Gaussian states vs squeezed vacuum through one thermal channel"),
    ("fig4", FIG4, "reflecting relay vs entanglement-swapping relay"),
    ("link-budget", LINK_BUDGET, "physical link evaluation over distance"),
    ("eb-thresholds", EB_THRESHOLDS, "entanglement-breaking transmissivities and distances"),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mmwent",
        description="Entanglement survival over millimeter-wave thermal-loss links")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for command, scenario, help_text in _COMMANDS:
        sp = sub.add_parser(command, help=help_text)
        sp.set_defaults(scenario=scenario)
        sp.add_argument("--config", metavar="PATH", help="config file (key = value sections)")
        sp.add_argument("--out", metavar="PATH", help="output CSV path")
        sp.add_argument("--freq-ghz", metavar="LIST", help="comma-separated frequencies in GHz")
        sp.add_argument("--temp-k", type=float, help="environment temperature in K")
        sp.add_argument("--squeeze-db", type=float, help="initial squeezing in dB")
        sp.add_argument("--cutoff", type=int, help="joint photon-number cutoff")
        sp.add_argument("--tol", type=float, help="convergence tolerance for truncated states")
        sp.add_argument("--absorption-table", metavar="PATH",
                        help="two-column absorption table (GHz, dB/km), or 'default'")
        sp.add_argument("--points", type=int, help="grid points per swept axis")
    return parser


def _assemble_spec(args: argparse.Namespace):
    if args.config:
        spec = from_config_file(args.config, args.scenario)
    else:
        spec = default_spec(args.scenario)
    overrides = {}
    if args.freq_ghz is not None:
        try:
            overrides["freq_ghz"] = tuple(float(x) for x in args.freq_ghz.split(","))
        except ValueError as exc:
            raise ConfigError(f"bad --freq-ghz list: {args.freq_ghz!r}") from exc
    if args.temp_k is not None:
        overrides["temp_k"] = args.temp_k
    if args.squeeze_db is not None:
        overrides["squeeze_db"] = args.squeeze_db
    if args.cutoff is not None:
        overrides["total_photon_cutoff"] = args.cutoff
    if args.tol is not None:
        overrides["convergence_tol"] = args.tol
    if args.absorption_table is not None:
        overrides["absorption_table"] = args.absorption_table
    if args.points is not None:
        overrides["steps"] = args.points
        if args.scenario == FIG1:
            overrides["steps2"] = args.points
    return replace(spec, **overrides) if overrides else spec


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = _assemble_spec(args)
        result = run_sweep(spec)
    except (ConfigError, FrequencyOutOfModelRange) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out_path = args.out or f"{spec.scenario}.csv"
    write_csv(result, out_path)
    if spec.scenario == LINK_BUDGET:
        print(render_link_report(result))
    print(f"wrote {out_path}: {len(result.rows)} rows, "
          f"{result.nonconverged_count} non-converged")
    return 3 if result.nonconverged_count else 0


if __name__ == "__main__":
    sys.exit(main())
