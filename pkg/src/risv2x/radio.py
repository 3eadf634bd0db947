"""Per-slot link quality: SINRs, Shannon rates, sensing SNR, threshold tests."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class RadioError(ValueError):
    pass


def dbm_to_watt(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def watt_to_dbm(p_watt: float) -> float:
    if p_watt <= 0:
        raise RadioError("power must be positive for dBm conversion")
    return 10.0 * math.log10(p_watt) + 30.0


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


@dataclass
class SlotLinkMetrics:
    """Link metrics for one slot; powers in watts, rates in bit/s."""

    sinr_v2i: np.ndarray          # (V,) linear
    sinr_v2v: np.ndarray          # (D,) linear
    rate_v2i: np.ndarray          # (V,) bps
    rate_v2v: np.ndarray          # (D,) bps
    snr_sense: np.ndarray         # (J,) linear
    interference_w: np.ndarray    # (D,) co-channel interference power at each pair


def _check_powers(*powers) -> None:
    for p in powers:
        if np.any(np.asarray(p) < 0):
            raise RadioError("negative power")


def v2i_sinr_all(c, p_v2v_w, g_v2i, g_v2v, v2i_power_w, noise_w) -> np.ndarray:
    """SINR of every V2I uplink given the reuse matrix c of shape (V, D)."""
    _check_powers(p_v2v_w, v2i_power_w, noise_w)
    c = np.asarray(c, dtype=float)
    pg = np.asarray(p_v2v_w) * np.abs(np.asarray(g_v2v)) ** 2     # (D,)
    interference = c @ pg                                          # (V,)
    signal = v2i_power_w * np.abs(np.asarray(g_v2i)) ** 2
    return signal / (interference + noise_w)


def v2v_sinr_all(channel_idx, c, p_v2v_w, g_v2i, g_v2v, v2i_power_w, noise_w):
    """SINR of every V2V pair plus the interference power at each receiver.

    The pair's own signal is excluded from its denominator; co-channel V2V
    pairs and the sharing V2I uplink interfere.
    """
    _check_powers(p_v2v_w, v2i_power_w, noise_w)
    c = np.asarray(c, dtype=float)
    ch = np.asarray(channel_idx)
    pg = np.asarray(p_v2v_w) * np.abs(np.asarray(g_v2v)) ** 2      # (D,)
    per_channel = c @ pg                                           # (V,)
    gv2 = np.abs(np.asarray(g_v2i)) ** 2
    interference = per_channel[ch] - pg + v2i_power_w * gv2[ch]    # (D,)
    interference = np.maximum(interference, 0.0)                   # guard fp residue
    sinr = pg / (interference + noise_w)
    return sinr, interference


def sinr_v2i(v: int, c, p_v2v_w, g_v2i, g_v2v, v2i_power_w, noise_w) -> float:
    return float(v2i_sinr_all(c, p_v2v_w, g_v2i, g_v2v, v2i_power_w, noise_w)[v])


def sinr_v2v(d: int, channel_idx, c, p_v2v_w, g_v2i, g_v2v, v2i_power_w, noise_w) -> float:
    sinr, _ = v2v_sinr_all(channel_idx, c, p_v2v_w, g_v2i, g_v2v, v2i_power_w, noise_w)
    return float(sinr[d])


def rate(sinr, bandwidth_hz: float):
    """Shannon rate W * log2(1 + SINR) in bit/s."""
    return bandwidth_hz * np.log2(1.0 + np.asarray(sinr, dtype=float))


def spectral_efficiency(sinr):
    return np.log2(1.0 + np.asarray(sinr, dtype=float))


def sensing_snr(echo, sensing_power_w: float, noise_w: float):
    """Sensing SNR P_j * echo**2 / sigma2; the echo gain enters squared."""
    e = np.asarray(echo, dtype=float)
    if np.any(e < 0):
        raise RadioError("echo gain must be nonnegative")
    _check_powers(sensing_power_w, noise_w)
    return sensing_power_w * e ** 2 / noise_w


def meets_thresholds(
    metrics: SlotLinkMetrics,
    rate_threshold_bps_hz: float,
    snr_threshold_db: float,
    target_indices,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-vehicle rate test and per-target joint rate plus sensing-SNR test.

    The rate test compares spectral efficiency log2(1+SINR) against the
    bps/Hz threshold; both comparisons use the >= convention.
    """
    se = spectral_efficiency(metrics.sinr_v2i)
    vehicle_ok = se >= rate_threshold_bps_hz
    snr_ok = metrics.snr_sense >= db_to_linear(snr_threshold_db)
    target_ok = vehicle_ok[np.asarray(target_indices, dtype=int)] & snr_ok
    return vehicle_ok, target_ok
