"""Sliding-window connectivity indicators, payload delivery, CCR metrics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class MetricError(ValueError):
    pass


class WindowTracker:
    """Tracks, per entity, whether the last N threshold outcomes all passed.

    The indicator is 1 only once N outcomes exist and every one of the most
    recent N passed.  Implemented as a consecutive-pass run length, which is
    equivalent to scanning a ring buffer of the last N outcomes.
    """

    def __init__(self, window: int, n_entities: int = 1):
        if window < 1:
            raise MetricError("window must be >= 1")
        self.window = window
        self.n_entities = n_entities
        self._run = np.zeros(n_entities, dtype=np.int64)

    def update(self, outcomes) -> np.ndarray:
        out = np.atleast_1d(np.asarray(outcomes, dtype=bool))
        if out.shape != (self.n_entities,):
            raise MetricError(f"expected {self.n_entities} outcomes, got {out.shape}")
        self._run = np.where(out, self._run + 1, 0)
        return self._run >= self.window

    def preview(self, outcomes) -> np.ndarray:
        """Indicator values if ``outcomes`` were pushed, without mutating."""
        out = np.atleast_1d(np.asarray(outcomes, dtype=bool))
        return np.where(out, self._run + 1, 0) >= self.window


def update_window(tracker: WindowTracker, outcome: bool) -> bool:
    """Single-entity convenience wrapper returning the indicator."""
    return bool(tracker.update([outcome])[0])


class PayloadTracker:
    """Remaining payload bits per V2V pair within one episode."""

    def __init__(self, n_pairs: int, payload_bits: float):
        if payload_bits <= 0:
            raise MetricError("payload must be positive")
        self.payload_bits = float(payload_bits)
        self.remaining = np.full(n_pairs, float(payload_bits))

    def update(self, scheduled, rate_bps, dt: float) -> np.ndarray:
        """Subtract c * rate * dt bits, clamped at zero; returns remaining."""
        sent = np.asarray(scheduled, dtype=float) * np.asarray(rate_bps, dtype=float) * dt
        self.remaining = np.maximum(0.0, self.remaining - sent)
        return self.remaining

    def preview(self, scheduled, rate_bps, dt: float) -> np.ndarray:
        sent = np.asarray(scheduled, dtype=float) * np.asarray(rate_bps, dtype=float) * dt
        return np.maximum(0.0, self.remaining - sent)

    @property
    def delivered(self) -> np.ndarray:
        return self.remaining == 0.0


def ccr_v2i(psi: np.ndarray, window: int) -> float:
    """Mean window indicator over entities and window-valid slots.

    ``psi`` has shape (n_entities, T) with column t holding the slot-(t+1)
    indicators.  Slots before the window fills contribute nothing; the
    normalizer is n_entities * (T - N + 1).
    """
    psi = np.asarray(psi, dtype=float)
    if psi.ndim != 2 or psi.shape[0] < 1:
        raise MetricError("need a (n_entities, T) indicator matrix")
    n, total = psi.shape
    if total < window:
        raise MetricError("episode shorter than the window")
    valid = psi[:, window - 1:]
    return float(valid.sum() / (n * (total - window + 1)))


def ccr_v2v(delivered_flags) -> float:
    """Fraction of pair-episodes whose payload was fully delivered."""
    flags = np.asarray(list(delivered_flags), dtype=bool)
    if flags.size == 0:
        raise MetricError("no pair-episodes recorded")
    return float(flags.mean())


def objective_value(
    psi_nontarget: np.ndarray,
    psi_target: np.ndarray,
    delivered: np.ndarray,
    window: int,
) -> float:
    """Episode objective: per-slot averages of delivery and window indicators.

    Every window-valid slot (t >= N) contributes the delivered-by-deadline
    fraction plus the mean non-target and target indicators; the sum is
    normalized by the episode length T.
    """
    psi_v = np.asarray(psi_nontarget, dtype=float)
    psi_j = np.asarray(psi_target, dtype=float)
    total = psi_v.shape[1] if psi_v.size else psi_j.shape[1]
    if total < window:
        raise MetricError("episode shorter than the window")
    n_valid = total - window + 1
    value = float(np.asarray(delivered, dtype=float).mean()) * n_valid
    if psi_v.size:
        value += psi_v[:, window - 1:].mean(axis=0).sum()
    if psi_j.size:
        value += psi_j[:, window - 1:].mean(axis=0).sum()
    return value / total


@dataclass
class EpisodeStats:
    """Connectivity summary of one evaluated episode."""

    ccr_v2i: float
    ccr_v2v: float
    objective: float
    mean_reward: float

    @property
    def ccr_total(self) -> float:
        return self.ccr_v2i + self.ccr_v2v


@dataclass
class CCRReport:
    """Aggregate of per-episode connectivity statistics across runs."""

    episodes: list[EpisodeStats] = field(default_factory=list)

    def add(self, stats: EpisodeStats) -> None:
        self.episodes.append(stats)

    @property
    def n_runs(self) -> int:
        return len(self.episodes)

    def _series(self, name: str) -> np.ndarray:
        return np.array([getattr(e, name) for e in self.episodes], dtype=float)

    def mean(self, name: str) -> float:
        return float(self._series(name).mean())

    def std(self, name: str) -> float:
        return float(self._series(name).std())

    def stderr(self, name: str) -> float:
        s = self._series(name)
        return float(s.std() / np.sqrt(len(s))) if len(s) else 0.0
