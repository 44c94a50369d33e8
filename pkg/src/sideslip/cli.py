"""Command-line harness.

Subcommands:
    simulate   scenario -> sensor log (seed mandatory)
    estimate   sensor log + config -> estimate trace + metrics
    compare    run several variants over one log, print a metrics table
    diagnose   estimate with the stability-diagnostic columns enabled

Exit status is nonzero on any abort (bad schema, bad arguments, runtime
errors), with the offending frame or column named on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .harness import (compare_variants, config_to_dict, default_config,
                      evaluate_frames, ingest_log, load_config, metrics_table,
                      metrics_to_dict, run_estimate, write_log)
from .pipeline import VARIANTS
from .simulator import SCENARIO_NAMES, generate_scenario, make_scenario


def _add_config_arg(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None,
                   help="JSON config file; defaults reproduce the standard parameter tables")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sideslip",
        description="Adaptive sideslip / road-bank / sensor-bias estimation harness")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a scenario sensor log")
    sim.add_argument("--scenario", required=True, choices=SCENARIO_NAMES)
    sim.add_argument("--seed", required=True, type=int,
                     help="RNG seed (mandatory for reproducibility)")
    sim.add_argument("--out", required=True, type=Path)
    sim.add_argument("--duration", type=float, default=None)
    sim.add_argument("--speed", type=float, default=None, help="initial speed [m/s]")
    sim.add_argument("--tire", choices=("linear", "brush"), default="linear")
    sim.add_argument("--mu-peak", type=float, default=1.0)
    sim.add_argument("--stiffness-scale", type=float, default=1.0,
                     help="plant linear-slope stiffness as a fraction of nominal")
    sim.add_argument("--steer-amplitude", type=float, default=None)
    sim.add_argument("--bank-deg", type=float, default=14.0)
    sim.add_argument("--bias", type=float, default=0.0)
    sim.add_argument("--noise-scale", type=float, default=1.0)
    _add_config_arg(sim)

    est = sub.add_parser("estimate", help="run one estimator over a log")
    est.add_argument("--log", required=True, type=Path)
    est.add_argument("--variant", choices=VARIANTS, default=None)
    est.add_argument("--out", required=True, type=Path, help="trace CSV output")
    est.add_argument("--metrics", type=Path, default=None, help="metrics JSON output")
    _add_config_arg(est)

    cmp_ = sub.add_parser("compare", help="run several variants over a log")
    cmp_.add_argument("--log", required=True, type=Path)
    cmp_.add_argument("--variants", default=",".join(VARIANTS),
                      help="comma-separated variant list")
    cmp_.add_argument("--out-dir", type=Path, default=None,
                      help="write per-variant traces and metrics.json here")
    _add_config_arg(cmp_)

    dia = sub.add_parser("diagnose", help="estimate with stability diagnostics")
    dia.add_argument("--log", required=True, type=Path)
    dia.add_argument("--variant", choices=VARIANTS, default=None)
    dia.add_argument("--out", required=True, type=Path)
    dia.add_argument("--metrics", type=Path, default=None)
    dia.add_argument("--true-stiffness", default=None,
                     help="'c_f,c_r' ground-truth pair (simulated runs only)")
    _add_config_arg(dia)

    cfg = sub.add_parser("config", help="print the default config document")
    return parser


def _cmd_simulate(args) -> int:
    _, params = load_config(args.config)
    overrides = dict(seed=args.seed, tire_kind=args.tire, mu_peak=args.mu_peak,
                     stiffness_scale=args.stiffness_scale, bias=args.bias,
                     bank_deg=args.bank_deg, noise_scale=args.noise_scale,
                     steer_amplitude=args.steer_amplitude)
    if args.duration is not None:
        overrides["duration"] = args.duration
    if args.speed is not None:
        overrides["speed"] = args.speed
    run = generate_scenario(make_scenario(args.scenario, **overrides), params)
    write_log(args.out, run.samples, run.truth)
    print(f"wrote {len(run.samples)} frames to {args.out}")
    return 0


def _run_one(args, diagnostics: bool, true_stiffness=None) -> int:
    config, params = load_config(args.config)
    if args.variant is not None:
        config = replace(config, variant=args.variant)
    if diagnostics:
        config = replace(config, diagnostics=True)
    samples, truth = ingest_log(args.log, expected_dt=config.dt)
    frames, metrics, _ = run_estimate(samples, config, params, truth=truth,
                                      true_stiffness=true_stiffness,
                                      trace_path=args.out)
    print(f"wrote {len(frames)} frames to {args.out}")
    if metrics is not None:
        print(metrics_table({config.variant: metrics}))
        if args.metrics is not None:
            args.metrics.write_text(json.dumps(metrics_to_dict(metrics), indent=2) + "\n")
    elif args.metrics is not None:
        print("no ground-truth columns in the log; metrics not written", file=sys.stderr)
    return 0


def _cmd_compare(args) -> int:
    config, params = load_config(args.config)
    samples, truth = ingest_log(args.log, expected_dt=config.dt)
    if truth is None:
        print("compare requires ground-truth columns in the log", file=sys.stderr)
        return 1
    variants = [v.strip() for v in args.variants.split(",") if v.strip()]
    for v in variants:
        if v not in VARIANTS:
            print(f"unknown variant '{v}'", file=sys.stderr)
            return 1
    results = compare_variants(samples, variants, config, params, truth)
    print(metrics_table(results))
    if args.out_dir is not None:
        args.out_dir.mkdir(parents=True, exist_ok=True)
        blob = {name: metrics_to_dict(m) for name, m in results.items()}
        (args.out_dir / "metrics.json").write_text(json.dumps(blob, indent=2) + "\n")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "estimate":
            return _run_one(args, diagnostics=False)
        if args.command == "diagnose":
            stiff = None
            if args.true_stiffness is not None:
                stiff = np.array([float(x) for x in args.true_stiffness.split(",")])
            return _run_one(args, diagnostics=True, true_stiffness=stiff)
        if args.command == "compare":
            return _cmd_compare(args)
        if args.command == "config":
            print(json.dumps(default_config(), indent=2))
            return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 2


if __name__ == "__main__":
    sys.exit(main())
