"""Command-line interface: run one simulation, compare systems across seeds,
or replay a recorded LLM experiment offline."""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import replace
from pathlib import Path

from taxsim.config import TAX_SYSTEMS, SimConfig, load_config
from taxsim.simulation import ComparisonRow, run, sweep


def _load_or_default(config_path: str | None) -> SimConfig:
    return load_config(config_path) if config_path else SimConfig()


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_or_default(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if args.system is not None:
        config = replace(config, tax_system=args.system)
    if args.months is not None:
        config = replace(config, months=args.months)
    if args.out is not None:
        config = replace(config, output_dir=args.out)
    result = run(config)
    out = result.write_outputs(config.output_dir)
    print(f"wrote {out / 'monthly.csv'}")
    for key, value in result.summary.items():
        print(f"{key}: {value}")
    return 0


def _cmd_compare(args: argparse.Namespace) -> int:
    config = _load_or_default(args.config)
    systems = [s.strip() for s in args.systems.split(",") if s.strip()]
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    if not systems or not seeds:
        print("compare needs at least one system and one seed", file=sys.stderr)
        return 2
    rows = sweep(config, systems, seeds)
    out = Path(args.out or config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_comparison_csv(out / "comparison.csv", rows)
    print(f"{'system':<12} {'seed':>6} {'social_outcome':>16}")
    for row in rows:
        print(f"{row.tax_system:<12} {row.seed:>6} {row.final_social_outcome:>16.6f}")
    by_system: dict[str, list[float]] = {}
    for row in rows:
        by_system.setdefault(row.tax_system, []).append(row.final_social_outcome)
    print("per-system mean final social outcome:")
    for system, values in by_system.items():
        print(f"  {system:<12} {sum(values) / len(values):.6f}")
    print(f"wrote {out / 'comparison.csv'}")
    return 0


def _cmd_replay(args: argparse.Namespace) -> int:
    config = _load_or_default(args.config)
    config = replace(
        config,
        gateway=replace(config.gateway, mode="replay", cache_path=args.cache),
    )
    if args.out is not None:
        config = replace(config, output_dir=args.out)
    result = run(config)
    out = result.write_outputs(config.output_dir)
    print(f"replayed {config.months} months from {args.cache}")
    print(f"wrote {out / 'monthly.csv'}")
    return 0


def _write_comparison_csv(path: Path, rows: list[ComparisonRow]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            [
                "tax_system",
                "seed",
                "final_gini",
                "final_equality",
                "final_productivity",
                "final_social_outcome",
            ]
        )
        for row in rows:
            writer.writerow(
                [
                    row.tax_system,
                    row.seed,
                    f"{row.final_gini:.6f}",
                    f"{row.final_equality:.6f}",
                    f"{row.final_productivity:.6f}",
                    f"{row.final_social_outcome:.6f}",
                ]
            )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taxsim",
        description="Agent-based income-tax simulator with pluggable policies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one simulation")
    run_p.add_argument("--config", help="JSON config file (defaults when omitted)")
    run_p.add_argument("--seed", type=int, help="override the rng seed")
    run_p.add_argument("--system", choices=TAX_SYSTEMS, help="override the tax system")
    run_p.add_argument("--months", type=int, help="override the month count")
    run_p.add_argument("--out", help="output directory")
    run_p.set_defaults(func=_cmd_run)

    cmp_p = sub.add_parser("compare", help="run several systems across seeds")
    cmp_p.add_argument("--config", help="JSON config file shared by every run")
    cmp_p.add_argument("--systems", required=True, help="comma list, e.g. free,us_federal")
    cmp_p.add_argument("--seeds", required=True, help="comma list of integers")
    cmp_p.add_argument("--out", help="output directory")
    cmp_p.set_defaults(func=_cmd_compare)

    rep_p = sub.add_parser("replay", help="re-run an LLM experiment from a cache")
    rep_p.add_argument("--config", help="JSON config file of the recorded run")
    rep_p.add_argument("--cache", required=True, help="JSONL exchange cache")
    rep_p.add_argument("--out", help="output directory")
    rep_p.set_defaults(func=_cmd_replay)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
