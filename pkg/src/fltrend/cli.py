"""Command-line front end: run a speed x algorithm x seed sweep and write results.

    fltrend --scenario scenarios/default.yaml --out results/
    fltrend --print-defaults > my.yaml
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import yaml

from .scenario import Scenario, dump_scenario, load_scenario
from .sweep import DEFAULT_SPEEDS, SweepSpec, emit_config_echo, emit_csv, emit_plot_series, run_sweep
from .triggers import ALGORITHMS

log = logging.getLogger("fltrend")


def parse_speeds(text: str) -> tuple:
    try:
        speeds = tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad speed list {text!r}; expected e.g. 5,10,15")
    if not speeds or any(v < 0 for v in speeds):
        raise argparse.ArgumentTypeError("speeds must be a non-empty list of non-negative numbers")
    return speeds


def positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fltrend", description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", type=Path, help="YAML scenario file (defaults fill missing keys)")
    ap.add_argument("--algorithm", default="all", choices=ALGORITHMS + ("all",))
    ap.add_argument("--speeds", type=parse_speeds, default=DEFAULT_SPEEDS, help="comma-separated km/h")
    ap.add_argument("--seeds", type=positive_int, default=10, help="runs per (algorithm, speed)")
    ap.add_argument("--master-seed", type=int, default=2012)
    ap.add_argument("--duration", type=float, help="override duration_s from the scenario")
    ap.add_argument("--workers", type=positive_int, default=1)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--emit-packet-log", action="store_true",
                    help="also write per-run packet and event logs under OUT/logs")
    ap.add_argument("--print-defaults", action="store_true", help="print the default scenario as YAML and exit")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.print_defaults:
        sys.stdout.write(dump_scenario(Scenario()))
        return 0
    try:
        base = load_scenario(args.scenario) if args.scenario else Scenario()
        if args.duration is not None:
            base = replace(base, duration_s=args.duration)
        base.validate()
        algorithms = ALGORITHMS if args.algorithm == "all" else (args.algorithm,)
        spec = SweepSpec(base_scenario=base, speeds_kmph=args.speeds, algorithms=algorithms,
                         seeds=args.seeds, master_seed=args.master_seed)

        out = args.out
        out.mkdir(parents=True, exist_ok=True)
        on_run = None
        if args.emit_packet_log:
            logs = out / "logs"
            logs.mkdir(exist_ok=True)

            def on_run(alg, v, i, res):
                stem = f"{alg}_{v:g}kmph_seed{i}"
                res.write_packet_log(logs / f"{stem}.packets")
                res.write_event_log(logs / f"{stem}.events")

        result = run_sweep(spec, workers=args.workers, on_run=on_run)
        emit_csv(result, out / "results.csv")
        emit_plot_series(result, out / "series")
        emit_config_echo(result, out / "config.jsonl")
    except (OSError, ValueError, TypeError, RuntimeError, KeyError, yaml.YAMLError) as exc:
        print(f"fltrend: error: {exc}", file=sys.stderr)
        return 1
    log.info("%d runs written to %s", len(result.rows), out)
    print(f"{len(result.rows)} runs -> {out / 'results.csv'}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
