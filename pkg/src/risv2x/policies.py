"""Baseline policies: uniform random, random-RIS overlay, one-step greedy."""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .env import Action, SimEnv, resolve_channel_collisions


@dataclass
class PolicySpec:
    kind: str = "random"                 # random | random_ris | greedy
    greedy_phase_budget: int = 64
    seed: int = 0

    def validate(self) -> None:
        if self.kind not in ("random", "random_ris", "greedy"):
            raise ValueError(f"unknown policy kind {self.kind!r}")
        if self.greedy_phase_budget < 1:
            raise ValueError("greedy_phase_budget must be >= 1")


def random_action(env: SimEnv, rng: np.random.Generator) -> Action:
    """Uniform draw over the valid discrete ranges; collisions resolved the
    same way decode_action resolves them."""
    cfg = env.config
    desired = rng.integers(0, cfg.n_vehicles, cfg.n_pairs)
    power = rng.integers(0, cfg.n_power_levels, cfg.n_pairs)
    phases = rng.integers(0, cfg.phase_levels, cfg.ris_elements)
    return Action(
        channel=resolve_channel_collisions(desired, cfg.n_vehicles),
        power=np.asarray(power, dtype=int),
        phases=np.asarray(phases, dtype=int),
    )


def random_ris_overlay(action: Action, rng: np.random.Generator,
                       n_phase_levels: int) -> Action:
    """Replace the RIS phases with uniform draws, leaving channel/power alone."""
    return Action(
        channel=np.asarray(action.channel, dtype=int).copy(),
        power=np.asarray(action.power, dtype=int).copy(),
        phases=rng.integers(0, n_phase_levels, len(action.phases)),
    )


def _phase_candidates(env: SimEnv, rng: np.random.Generator, budget: int,
                      previous: np.ndarray) -> list[np.ndarray]:
    cfg = env.config
    q, f = cfg.phase_levels, cfg.ris_elements
    if q ** f <= budget:
        return [np.array(p, dtype=int) for p in itertools.product(range(q), repeat=f)]
    cands = [np.zeros(f, dtype=int), previous.astype(int).copy()][:budget]
    while len(cands) < budget:
        cands.append(rng.integers(0, q, f))
    return cands


def greedy_action(
    env: SimEnv,
    rng: np.random.Generator,
    phase_budget: int = 64,
    return_trace: bool = False,
):
    """Coordinate-ascent argmax of the previewed immediate reward.

    First every pair scans all channel x power combinations with the other
    pairs held fixed (candidates are collision-resolved before evaluation,
    ties go to the lowest indices); then a budget of RIS phase vectors is
    tried: the all-zero vector, the incumbent vector, and random fills, or
    the full enumeration when Q**F fits within the budget.
    """
    cfg = env.config
    current = Action(
        channel=np.arange(cfg.n_pairs, dtype=int),
        power=np.full(cfg.n_pairs, cfg.n_power_levels - 1, dtype=int),
        phases=env.current_phases.copy(),
    )
    best = env.preview_reward(current)
    trace = [(current, best)]

    for d in range(cfg.n_pairs):
        for c in range(cfg.n_vehicles):
            for p in range(cfg.n_power_levels):
                desired = current.channel.copy()
                desired[d] = c
                cand = Action(
                    channel=resolve_channel_collisions(desired, cfg.n_vehicles),
                    power=np.where(np.arange(cfg.n_pairs) == d, p, current.power),
                    phases=current.phases,
                )
                value = env.preview_reward(cand)
                trace.append((cand, value))
                if value > best:
                    best = value
                    current = cand

    for phases in _phase_candidates(env, rng, phase_budget, current.phases):
        cand = Action(channel=current.channel, power=current.power, phases=phases)
        value = env.preview_reward(cand)
        trace.append((cand, value))
        if value > best:
            best = value
            current = cand

    if return_trace:
        return current, best, trace
    return current


def make_policy(spec: PolicySpec):
    """Build a callable(env) -> Action for the requested baseline."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "random":
        return lambda env: random_action(env, rng)
    if spec.kind == "greedy":
        return lambda env: greedy_action(env, rng, spec.greedy_phase_budget)
    # random_ris: greedy channel/power, uniformly random phases on top.
    def _random_ris(env: SimEnv) -> Action:
        base = greedy_action(env, rng, phase_budget=1)
        return random_ris_overlay(base, rng, env.config.phase_levels)
    return _random_ris
