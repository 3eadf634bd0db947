"""Experiment sweeps, episode rollout, and metrics persistence.

Seed derivation: the environment seed of run ``r`` is ``base_seed + r`` at
every sweep point, so sweep points share random draws (paired comparisons);
the policy stream is offset by POLICY_SEED_OFFSET.  Both derivations are
stable across versions.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import ScenarioConfig
from .connectivity import CCRReport, EpisodeStats, ccr_v2i, ccr_v2v, objective_value
from .env import SimEnv
from .policies import PolicySpec, make_policy
from .scenario import TrajectorySet, sample_trajectories

POLICY_SEED_OFFSET = 1_000_003

SWEEP_VARIABLES = ("payload_K", "v2i_power", "window_N", "n_vehicles", "trajectory_scenario")

METRICS_HEADER = "sweep_var,sweep_value,run,ccr_v2i,ccr_v2v,ccr_total,objective,mean_reward"

PAYLOAD_UNIT_BITS = 1060.0      # payload_K sweep values count multiples of this


class HarnessError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    config: ScenarioConfig
    sweep_var: str | None = None
    sweep_values: list = field(default_factory=lambda: [None])
    runs: int = 50
    policy: PolicySpec = field(default_factory=PolicySpec)
    base_seed: int = 0
    trajectories: TrajectorySet | None = None

    def validate(self) -> None:
        if not self.sweep_values:
            raise HarnessError("sweep values must be non-empty")
        if self.runs < 1:
            raise HarnessError("need at least one run per sweep point")
        if self.sweep_var is not None and self.sweep_var not in SWEEP_VARIABLES:
            raise HarnessError(f"unknown sweep variable {self.sweep_var!r}")
        if self.sweep_var == "trajectory_scenario" and self.trajectories is None:
            raise HarnessError("trajectory_scenario sweep needs a loaded trajectory set")
        self.policy.validate()


@dataclass
class SweepPointResult:
    sweep_value: object
    report: CCRReport


def env_seed(base_seed: int, run: int) -> int:
    return base_seed + run


def policy_seed(base_seed: int, run: int) -> int:
    return base_seed + run + POLICY_SEED_OFFSET


def apply_sweep(config: ScenarioConfig, var: str | None, value) -> ScenarioConfig:
    if var is None or var == "trajectory_scenario":
        return config
    if var == "payload_K":
        return config.replace(payload_bits=float(value) * PAYLOAD_UNIT_BITS)
    if var == "v2i_power":
        return config.replace(v2i_power_dbm=float(value))
    if var == "window_N":
        return config.replace(window_slots=int(value))
    if var == "n_vehicles":
        n = int(value)
        return config.replace(n_vehicles=n, n_v2v_links=None)
    raise HarnessError(f"unknown sweep variable {var!r}")


def rollout_episode(env: SimEnv, policy, seed: int) -> EpisodeStats:
    """Run one full episode and summarize its connectivity statistics."""
    env.reset(seed)
    while not env.done:
        env.step(policy(env))
    psi_v, psi_j = env.psi_matrices()
    psi_all = np.vstack([m for m in (psi_v, psi_j) if m.shape[0] > 0])
    window = env.config.window_slots
    return EpisodeStats(
        ccr_v2i=ccr_v2i(psi_all, window),
        ccr_v2v=ccr_v2v(env.delivered),
        objective=objective_value(psi_v, psi_j, env.delivered, window),
        mean_reward=float(np.mean(env.rewards)),
    )


def run_eval(spec: ExperimentSpec) -> list[SweepPointResult]:
    """Evaluate the policy at every sweep point, ``runs`` episodes each."""
    spec.validate()
    results = []
    for value in spec.sweep_values:
        cfg = apply_sweep(spec.config, spec.sweep_var, value)
        report = CCRReport()
        for run in range(spec.runs):
            policy = make_policy(PolicySpec(
                kind=spec.policy.kind,
                greedy_phase_budget=spec.policy.greedy_phase_budget,
                seed=policy_seed(spec.base_seed, run),
            ))
            tset = None
            if spec.trajectories is not None:
                strategy = value if spec.sweep_var == "trajectory_scenario" else "random"
                tset = sample_trajectories(
                    spec.trajectories,
                    str(strategy),
                    cfg.n_vehicles,
                    np.random.default_rng(env_seed(spec.base_seed, run)),
                )
            env = SimEnv(cfg, trajectory_set=tset)
            report.add(rollout_episode(env, policy, env_seed(spec.base_seed, run)))
        results.append(SweepPointResult(sweep_value=value, report=report))
    return results


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return "" if x is None else str(x)


def emit_metrics_csv(results: list[SweepPointResult], path, sweep_var: str | None) -> None:
    """Write per-run rows plus one across-run mean row per sweep point."""
    path = Path(path)
    var = sweep_var or "none"
    try:
        fh = open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise HarnessError(f"cannot write metrics to {path}: {exc}") from exc
    with fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER.split(","))
        for point in results:
            sval = _fmt(point.sweep_value)
            for run, ep in enumerate(point.report.episodes):
                writer.writerow([
                    var, sval, run,
                    _fmt(ep.ccr_v2i), _fmt(ep.ccr_v2v), _fmt(ep.ccr_total),
                    _fmt(ep.objective), _fmt(ep.mean_reward),
                ])
        for point in results:
            sval = _fmt(point.sweep_value)
            r = point.report
            writer.writerow([
                var, sval, "mean",
                _fmt(r.mean("ccr_v2i")), _fmt(r.mean("ccr_v2v")), _fmt(r.mean("ccr_total")),
                _fmt(r.mean("objective")), _fmt(r.mean("mean_reward")),
            ])


def read_metrics_csv(path) -> list[dict]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))
