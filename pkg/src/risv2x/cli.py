"""Command-line interface: experiment sweeps, the env server, test fixtures."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import protocol
from .config import ScenarioConfig, load_config
from .harness import (
    SWEEP_VARIABLES,
    ExperimentSpec,
    emit_metrics_csv,
    run_eval,
)
from .policies import PolicySpec
from .scenario import generate_trajectory_csv, load_trajectories


def _parse_sweep(text: str) -> tuple[str, list]:
    if "=" not in text:
        raise argparse.ArgumentTypeError("expected <var>=<v1,v2,...>")
    var, _, values = text.partition("=")
    var = var.strip()
    if var not in SWEEP_VARIABLES:
        raise argparse.ArgumentTypeError(
            f"unknown sweep variable {var!r}; choose from {', '.join(SWEEP_VARIABLES)}"
        )
    parsed: list = []
    for chunk in values.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if var == "trajectory_scenario":
            parsed.append(chunk)
        else:
            parsed.append(float(chunk) if "." in chunk else int(chunk))
    return var, parsed


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="risv2x",
        description="RIS-assisted ISAC vehicular network simulator",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run an experiment sweep and write metrics")
    sim.add_argument("--config", help="JSON scenario config (defaults used if omitted)")
    sim.add_argument("--policy", default="random", choices=["random", "random_ris", "greedy"])
    sim.add_argument("--runs", type=int, default=50)
    sim.add_argument("--sweep", type=_parse_sweep, default=None, metavar="VAR=V1,V2,...",
                     help="sweep variable and values; payload_K values count 1060-bit units")
    sim.add_argument("--out", required=True, help="output directory")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--trajectories", help="trajectory CSV for playback scenarios")
    sim.add_argument("--greedy-budget", type=int, default=64,
                     help="RIS phase candidates per slot for the greedy policy")
    sim.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    srv = sub.add_parser("serve", help="serve the environment protocol")
    srv.add_argument("--transport", default="stdio", help="stdio or tcp:<host>:<port>")

    gen = sub.add_parser("gen-trajectories", help="write a synthetic trajectory CSV")
    gen.add_argument("--vehicles", type=int, required=True)
    gen.add_argument("--out", required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--duration", type=float, default=60.0, help="seconds of motion")
    gen.add_argument("--period", type=float, default=1.0, help="sample period in seconds")
    return parser


def cmd_simulate(args) -> int:
    config = load_config(args.config) if args.config else ScenarioConfig()
    config.validate()
    sweep_var, sweep_values = args.sweep if args.sweep else (None, [None])
    trajectories = None
    if args.trajectories:
        trajectories = load_trajectories(args.trajectories, config)
    spec = ExperimentSpec(
        config=config,
        sweep_var=sweep_var,
        sweep_values=sweep_values,
        runs=args.runs,
        policy=PolicySpec(kind=args.policy, greedy_phase_budget=args.greedy_budget),
        base_seed=args.seed,
        trajectories=trajectories,
    )
    results = run_eval(spec)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = out_dir / "metrics.csv"
    emit_metrics_csv(results, csv_path, sweep_var)
    print(f"wrote {csv_path}")
    if not args.no_plot:
        from .plots import render_sweep_figures

        for fig_path in render_sweep_figures(results, out_dir, sweep_var, args.policy):
            print(f"wrote {fig_path}")
    for point in results:
        r = point.report
        label = f"{sweep_var}={point.sweep_value}" if sweep_var else "point"
        print(
            f"{label}: ccr_v2i={r.mean('ccr_v2i'):.4f} ccr_v2v={r.mean('ccr_v2v'):.4f} "
            f"ccr_total={r.mean('ccr_total'):.4f} ({r.n_runs} runs)"
        )
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "simulate":
        return cmd_simulate(args)
    if args.command == "serve":
        try:
            protocol.serve(args.transport)
        except KeyboardInterrupt:
            pass
        return 0
    if args.command == "gen-trajectories":
        generate_trajectory_csv(
            args.out,
            n_vehicles=args.vehicles,
            seed=args.seed,
            duration_s=args.duration,
            period_s=args.period,
        )
        print(f"wrote {args.out}")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
