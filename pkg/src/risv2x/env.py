"""Slot-stepped environment: observations, action decoding, reward.

Each slot's fading and shadowing are drawn before the agent acts, so a
policy may preview the immediate reward of candidate actions against the
same randomness.  Direct-link and RIS-segment draws come from separate
seeded streams; disabling the RIS therefore leaves the direct-link
realization bit-identical.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import channel as ch
from . import radio
from .config import GAIN_FLOOR_DB, ScenarioConfig
from .connectivity import PayloadTracker, WindowTracker
from .scenario import (
    RoadGrid,
    TrajectorySet,
    VehicleState,
    build_grid_scenario,
    playback_scenario,
    step_mobility,
)


class ActionError(ValueError):
    pass


class EnvError(RuntimeError):
    pass


@dataclass
class Action:
    """Channel reuse, power level, and RIS phase selection for one slot."""

    channel: np.ndarray       # (D,) V2I channel index per pair
    power: np.ndarray         # (D,) index into the configured power levels
    phases: np.ndarray        # (F,) phase index in {0..Q-1}


@dataclass
class Observation:
    """Heterogeneous state graph.

    Vehicle feature layout (length 3V+4): x, y, pair gain in dB per
    neighbor, remaining payload bits per neighbor, previous-slot receiver
    interference in dBm per neighbor, target flag, echo gain in dB.
    BS features (V+2): x, y, V2I gain in dB per vehicle.  RIS features
    (F+2): x, y, phase index per element.  Node ids: vehicles 0..V-1,
    BS = V, RIS = V+1.
    """

    vehicle_features: np.ndarray
    bs_features: np.ndarray
    ris_features: np.ndarray
    edges: list[tuple[int, int, str]]

    @property
    def n_vehicles(self) -> int:
        return self.vehicle_features.shape[0]


@dataclass
class StepResult:
    observation: Observation
    reward: float
    done: bool
    info: dict


def _affine_indices(raw: np.ndarray, n_options: int) -> np.ndarray:
    """Map [-1, 1] reals onto {0..n-1}, rounding half away from zero."""
    u = (raw + 1.0) * 0.5 * (n_options - 1)
    return np.floor(u + 0.5).astype(int)


def resolve_channel_collisions(desired: np.ndarray, n_channels: int) -> np.ndarray:
    """Keep the lower pair index on a contested channel; defer the rest to
    the lowest free channel, preserving one-pair-per-channel reuse."""
    n_pairs = len(desired)
    if n_pairs > n_channels:
        raise ActionError("more pairs than channels; reuse constraint unsatisfiable")
    used = np.zeros(n_channels, dtype=bool)
    out = np.empty(n_pairs, dtype=int)
    for d in range(n_pairs):
        c = int(desired[d])
        if not used[c]:
            out[d] = c
        else:
            c = int(np.argmin(used))
            out[d] = c
        used[out[d]] = True
    return out


def decode_action(
    raw,
    n_channels: int,
    n_pairs: int,
    n_power_levels: int,
    n_phase_levels: int,
    n_elements: int,
) -> Action:
    """Decode a raw [-1, 1] vector of length D + D + F into a valid Action."""
    raw = np.asarray(raw, dtype=float).ravel()
    expected = 2 * n_pairs + n_elements
    if raw.size != expected:
        raise ActionError(f"raw action length {raw.size}, expected {expected}")
    raw = np.clip(raw, -1.0, 1.0)
    desired = _affine_indices(raw[:n_pairs], n_channels)
    power = _affine_indices(raw[n_pairs:2 * n_pairs], n_power_levels)
    phases = _affine_indices(raw[2 * n_pairs:], n_phase_levels)
    channel_idx = resolve_channel_collisions(desired, n_channels)
    return Action(channel=channel_idx, power=power, phases=phases)


@dataclass
class ChannelRealization:
    """One slot's random draws evaluated into link gains."""

    direct_v2i: np.ndarray        # (V,) complex, BS-vehicle
    direct_v2v: np.ndarray        # (D,) complex, pair transmitter-BS
    direct_sense: np.ndarray      # (J,) complex, BS-target
    seg_bs_to_ris: np.ndarray | None      # (F,)
    seg_ris_to_bs: np.ndarray | None      # (F,)
    seg_ris_to_vehicle: np.ndarray | None  # (V, F)
    seg_tx_to_ris: np.ndarray | None       # (D, F)
    seg_ris_to_target: np.ndarray | None   # (J, F)


def _gain_db(power_gain: float) -> float:
    if power_gain <= 0.0:
        return GAIN_FLOOR_DB
    return max(GAIN_FLOOR_DB, 10.0 * math.log10(power_gain))


def _power_dbm(watts: float) -> float:
    if watts <= 0.0:
        return GAIN_FLOOR_DB
    return max(GAIN_FLOOR_DB, 10.0 * math.log10(watts) + 30.0)


class SimEnv:
    """Single-agent environment over one scenario instance."""

    def __init__(self, config: ScenarioConfig, trajectory_set: TrajectorySet | None = None):
        config.validate()
        self.config = config
        self._tset = trajectory_set
        self._grid = RoadGrid(config.region_width_m, config.region_height_m)
        self._p_levels_w = np.array([radio.dbm_to_watt(p) for p in config.v2v_power_levels_dbm])
        self._v2i_power_w = radio.dbm_to_watt(config.v2i_power_dbm)
        self._sense_power_w = radio.dbm_to_watt(config.sensing_power_dbm)
        self._noise_comm_w = radio.dbm_to_watt(config.noise_comm_dbm)
        self._noise_sense_w = radio.dbm_to_watt(config.noise_sense_dbm)
        self._bs = np.asarray(config.bs_position, dtype=float)
        self._ris = np.asarray(config.ris_position, dtype=float)
        self._started = False

    # -- lifecycle ----------------------------------------------------------

    def reset(self, seed: int | None = None) -> Observation:
        cfg = self.config
        base = cfg.seed if seed is None else seed
        streams = np.random.SeedSequence(base).spawn(4)
        self._rng_mobility = np.random.default_rng(streams[1])
        self._rng_direct = np.random.default_rng(streams[2])
        self._rng_ris = np.random.default_rng(streams[3])

        if self._tset is None:
            self._states = build_grid_scenario(cfg, streams[0])
            self._playback = None
        else:
            self._states, self._playback = playback_scenario(cfg, self._tset, streams[0])

        self._targets = np.array([s.id for s in self._states if s.is_target], dtype=int)
        self._nontargets = np.array([s.id for s in self._states if not s.is_target], dtype=int)
        self._pairs_tx = np.arange(cfg.n_pairs)
        self._pairs_rx = np.array([self._states[d].v2v_peer for d in range(cfg.n_pairs)], dtype=int)

        self._window_v = WindowTracker(cfg.window_slots, len(self._nontargets))
        self._window_j = WindowTracker(cfg.window_slots, len(self._targets))
        self._payload = PayloadTracker(cfg.n_pairs, cfg.payload_bits)
        self._interference_w = np.zeros(cfg.n_pairs)
        self._seen_slot = False                      # interference history exists
        self._phases = np.zeros(cfg.ris_elements, dtype=int)
        self._slot = 0
        self._rewards: list[float] = []
        self._psi_v_hist: list[np.ndarray] = []
        self._psi_j_hist: list[np.ndarray] = []
        self._edges = self._build_edges()
        self._draw_realization()
        self._started = True
        return self._build_observation()

    @property
    def done(self) -> bool:
        return self._started and self._slot >= self.config.episode_slots

    @property
    def slot(self) -> int:
        return self._slot

    @property
    def current_phases(self) -> np.ndarray:
        return self._phases

    @property
    def action_size(self) -> int:
        return 2 * self.config.n_pairs + self.config.ris_elements

    def decode(self, raw) -> Action:
        cfg = self.config
        return decode_action(
            raw,
            n_channels=cfg.n_vehicles,
            n_pairs=cfg.n_pairs,
            n_power_levels=cfg.n_power_levels,
            n_phase_levels=cfg.phase_levels,
            n_elements=cfg.ris_elements,
        )

    # -- channel draws ------------------------------------------------------

    def _positions(self) -> np.ndarray:
        return np.stack([s.position for s in self._states])

    def _draw_realization(self) -> None:
        cfg = self.config
        params = cfg.channel
        pos = self._positions()
        V, D, J = cfg.n_vehicles, cfg.n_pairs, len(self._targets)
        rho = params.pathloss_const

        # Fixed draw order: shadows then fadings, v2i / v2v / sense blocks.
        sh_v2i = self._rng_direct.normal(0.0, params.shadow_sigma_v2i_db, V)
        sh_v2v = self._rng_direct.normal(0.0, params.shadow_sigma_v2v_db, D)
        sh_sense = self._rng_direct.normal(0.0, params.shadow_sigma_sense_db, J)
        fad_v2i = ch.sample_fading(self._rng_direct, V)
        fad_v2v = ch.sample_fading(self._rng_direct, D)
        fad_sense = ch.sample_fading(self._rng_direct, J)

        direct_v2i = ch.direct_gains_batch(self._bs, pos, rho, params.exponent_v2i,
                                           sh_v2i, fad_v2i)
        direct_v2v = ch.direct_gains_batch(pos[self._pairs_tx], self._bs, rho,
                                           params.exponent_v2v, sh_v2v, fad_v2v)
        direct_sense = (
            ch.direct_gains_batch(self._bs, pos[self._targets], rho,
                                  params.exponent_sense, sh_sense, fad_sense)
            if J else np.zeros(0, dtype=complex)
        )

        if cfg.ris_enabled:
            lam, sp, F = params.wavelength_m, params.element_spacing_m, cfg.ris_elements
            eta, sig = params.exponent_ris, params.shadow_sigma_ris_db
            sh_b2r = self._rng_ris.normal(0.0, sig)
            sh_r2b = self._rng_ris.normal(0.0, sig)
            sh_r2v = self._rng_ris.normal(0.0, sig, V)
            sh_t2r = self._rng_ris.normal(0.0, sig, D)
            sh_r2j = self._rng_ris.normal(0.0, sig, J)
            seg = lambda nodes, s: ch.ris_segment_gains_batch(
                nodes, self._ris, rho, eta, s, lam, sp, F)
            seg_bs_to_ris = seg(self._bs, sh_b2r)[0]
            seg_ris_to_bs = seg(self._bs, sh_r2b)[0]
            seg_ris_to_vehicle = seg(pos, sh_r2v)
            seg_tx_to_ris = seg(pos[self._pairs_tx], sh_t2r)
            seg_ris_to_target = (
                seg(pos[self._targets], sh_r2j)
                if J else np.zeros((0, F), dtype=complex)
            )
        else:
            seg_bs_to_ris = seg_ris_to_bs = None
            seg_ris_to_vehicle = seg_tx_to_ris = seg_ris_to_target = None

        self._real = ChannelRealization(
            direct_v2i, direct_v2v, direct_sense,
            seg_bs_to_ris, seg_ris_to_bs,
            seg_ris_to_vehicle, seg_tx_to_ris, seg_ris_to_target,
        )
        self._composite_cache: dict[bytes, tuple] = {}

    def _composites(self, phases: np.ndarray):
        """Composite V2I/V2V/echo gains for the pending slot under ``phases``."""
        key = np.asarray(phases, dtype=int).tobytes()
        hit = self._composite_cache.get(key)
        if hit is not None:
            return hit
        cfg = self.config
        r = self._real
        if not cfg.ris_enabled:
            g_v2i = r.direct_v2i
            g_v2v = r.direct_v2v
            h = r.direct_sense
            echo = h.real * h.real + h.imag * h.imag
        else:
            theta = ch.reflection_matrix(phases, cfg.phase_levels, cfg.ris_amplitude)
            g_v2i = ch.cascade_batch(r.seg_ris_to_vehicle, theta, r.seg_bs_to_ris,
                                     r.direct_v2i)
            g_v2v = ch.cascade_batch(r.seg_ris_to_bs, theta, r.seg_tx_to_ris,
                                     r.direct_v2v)
            h = ch.cascade_batch(r.seg_bs_to_ris, theta, r.seg_ris_to_target,
                                 r.direct_sense)
            echo = h.real * h.real + h.imag * h.imag
        out = (g_v2i, g_v2v, echo)
        self._composite_cache[key] = out
        return out

    # -- metrics ------------------------------------------------------------

    def _validate_action(self, action: Action) -> None:
        cfg = self.config
        chn = np.asarray(action.channel)
        pwr = np.asarray(action.power)
        phs = np.asarray(action.phases)
        if chn.shape != (cfg.n_pairs,) or pwr.shape != (cfg.n_pairs,):
            raise ActionError("channel/power vectors must have one entry per pair")
        if phs.shape != (cfg.ris_elements,):
            raise ActionError("phase vector must have one entry per RIS element")
        if np.any(chn < 0) or np.any(chn >= cfg.n_vehicles):
            raise ActionError("channel index out of range")
        if len(np.unique(chn)) != cfg.n_pairs:
            raise ActionError("two pairs share one channel")
        if np.any(pwr < 0) or np.any(pwr >= cfg.n_power_levels):
            raise ActionError("power index out of range")
        if np.any(phs < 0) or np.any(phs >= cfg.phase_levels):
            raise ActionError("phase index out of range")

    def _slot_metrics(self, action: Action) -> radio.SlotLinkMetrics:
        cfg = self.config
        g_v2i, g_v2v, echo = self._composites(action.phases)
        c = np.zeros((cfg.n_vehicles, cfg.n_pairs))
        c[action.channel, np.arange(cfg.n_pairs)] = 1.0
        p_w = self._p_levels_w[action.power]
        sinr_i = radio.v2i_sinr_all(c, p_w, g_v2i, g_v2v, self._v2i_power_w, self._noise_comm_w)
        sinr_d, interference = radio.v2v_sinr_all(
            action.channel, c, p_w, g_v2i, g_v2v, self._v2i_power_w, self._noise_comm_w
        )
        snr_j = radio.sensing_snr(echo, self._sense_power_w, self._noise_sense_w)
        return radio.SlotLinkMetrics(
            sinr_v2i=sinr_i,
            sinr_v2v=sinr_d,
            rate_v2i=radio.rate(sinr_i, cfg.bandwidth_hz),
            rate_v2v=radio.rate(sinr_d, cfg.bandwidth_hz),
            snr_sense=snr_j,
            interference_w=interference,
        )

    def _reward_terms(self, psi_v, psi_j, remaining) -> float:
        penalty = float(np.mean(remaining / self.config.payload_bits))
        return float(np.sum(psi_v) + np.sum(psi_j) - penalty)

    def preview_reward(self, action: Action) -> float:
        """Immediate reward of ``action`` against the pending slot's draws.

        Does not mutate trackers or consume randomness, so candidates can
        be compared apples-to-apples.
        """
        if self.done:
            raise EnvError("episode finished")
        self._validate_action(action)
        cfg = self.config
        metrics = self._slot_metrics(action)
        vehicle_ok, target_ok = radio.meets_thresholds(
            metrics, cfg.rate_threshold_bps_hz, cfg.snr_threshold_db, self._targets
        )
        psi_v = self._window_v.preview(vehicle_ok[self._nontargets])
        psi_j = self._window_j.preview(target_ok)
        remaining = self._payload.preview(1.0, metrics.rate_v2v, cfg.slot_duration_s)
        return self._reward_terms(psi_v, psi_j, remaining)

    def step(self, action: Action) -> StepResult:
        if not self._started:
            raise EnvError("reset the environment first")
        if self.done:
            raise EnvError("episode finished")
        self._validate_action(action)
        cfg = self.config

        metrics = self._slot_metrics(action)
        vehicle_ok, target_ok = radio.meets_thresholds(
            metrics, cfg.rate_threshold_bps_hz, cfg.snr_threshold_db, self._targets
        )
        psi_v = self._window_v.update(vehicle_ok[self._nontargets])
        psi_j = self._window_j.update(target_ok)
        remaining = self._payload.update(1.0, metrics.rate_v2v, cfg.slot_duration_s)
        reward = self._reward_terms(psi_v, psi_j, remaining)

        self._psi_v_hist.append(psi_v.copy())
        self._psi_j_hist.append(psi_j.copy())
        self._rewards.append(reward)
        self._interference_w = metrics.interference_w
        self._seen_slot = True
        self._phases = np.asarray(action.phases, dtype=int).copy()
        self._slot += 1
        done = self.done

        self._advance_mobility()
        self._draw_realization()
        obs = self._build_observation()

        info = {
            "psi_v": int(np.sum(psi_v)),
            "psi_j": int(np.sum(psi_j)),
            "payload_frac": (remaining / cfg.payload_bits).tolist(),
            "delivered": int(np.sum(self._payload.delivered)),
            "metrics": metrics,
        }
        return StepResult(observation=obs, reward=reward, done=done, info=info)

    def _advance_mobility(self) -> None:
        cfg = self.config
        if self._playback is not None:
            idx = min(self._slot, cfg.episode_slots - 1)
            for s in self._states:
                s.position[0], s.position[1] = self._playback[s.id, idx]
        else:
            self._states = step_mobility(
                self._grid, self._states, cfg.slot_duration_s, self._rng_mobility
            )

    # -- observation --------------------------------------------------------

    def _build_edges(self) -> list[tuple[int, int, str]]:
        V = self.config.n_vehicles
        bs, ris = V, V + 1
        edges = [(int(self._pairs_tx[d]), int(self._pairs_rx[d]), "v2v")
                 for d in range(self.config.n_pairs)]
        edges += [(v, bs, "v2i") for v in range(V)]
        edges += [(v, ris, "ris") for v in range(V)]
        edges.append((bs, ris, "ris"))
        edges += [(int(j), bs, "sense") for j in self._targets]
        return edges

    def _build_observation(self) -> Observation:
        cfg = self.config
        V = cfg.n_vehicles
        g_v2i, g_v2v, echo = self._composites(self._phases)

        feats = np.zeros((V, 3 * V + 4))
        pos = self._positions()
        feats[:, 0] = pos[:, 0]
        feats[:, 1] = pos[:, 1]
        for d in range(cfg.n_pairs):
            tx, rx = int(self._pairs_tx[d]), int(self._pairs_rx[d])
            feats[tx, 2 + rx] = _gain_db(abs(g_v2v[d]) ** 2)
            feats[tx, 2 + V + rx] = self._payload.remaining[d]
            if self._seen_slot:
                feats[tx, 2 + 2 * V + rx] = _power_dbm(float(self._interference_w[d]))
            else:
                feats[tx, 2 + 2 * V + rx] = GAIN_FLOOR_DB
        # Zero-valued gain/interference slots carry the floor encoding.
        gain_cols = feats[:, 2:2 + V]
        gain_cols[gain_cols == 0.0] = GAIN_FLOOR_DB
        int_cols = feats[:, 2 + 2 * V:2 + 3 * V]
        int_cols[int_cols == 0.0] = GAIN_FLOOR_DB
        feats[:, 2 + 3 * V] = 0.0
        feats[:, 3 + 3 * V] = GAIN_FLOOR_DB
        for j, t in enumerate(self._targets):
            feats[t, 2 + 3 * V] = 1.0
            feats[t, 3 + 3 * V] = _gain_db(float(echo[j]))

        bs_feats = np.concatenate((
            self._bs[:2],
            [_gain_db(abs(g) ** 2) for g in g_v2i],
        ))
        ris_feats = np.concatenate((self._ris[:2], self._phases.astype(float)))
        return Observation(
            vehicle_features=feats,
            bs_features=bs_feats,
            ris_features=ris_feats,
            edges=self._edges,
        )

    # -- episode reporting ---------------------------------------------------

    def psi_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """Window indicator histories, shapes (V-J, T) and (J, T)."""
        psi_v = (np.stack(self._psi_v_hist, axis=1)
                 if self._psi_v_hist and len(self._nontargets)
                 else np.zeros((len(self._nontargets), len(self._psi_v_hist))))
        psi_j = (np.stack(self._psi_j_hist, axis=1)
                 if self._psi_j_hist and len(self._targets)
                 else np.zeros((len(self._targets), len(self._psi_j_hist))))
        return psi_v, psi_j

    @property
    def delivered(self) -> np.ndarray:
        return self._payload.delivered

    @property
    def rewards(self) -> list[float]:
        return self._rewards

    @property
    def target_indices(self) -> np.ndarray:
        return self._targets

    @property
    def pair_links(self) -> list[tuple[int, int]]:
        return [(int(t), int(r)) for t, r in zip(self._pairs_tx, self._pairs_rx)]
