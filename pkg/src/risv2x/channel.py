"""Complex channel gains: direct links, RIS segments, reflection, composites.

Sign conventions: path loss attenuates as d**(-eta) for every link class;
log-normal shadowing enters as a dB draw; small-scale fading has
exponentially distributed power with unit mean and uniform phase.  RIS
segments carry the distance phase and a uniform-linear-array response but
no small-scale fading.
"""
from __future__ import annotations

import math

import numpy as np

TAU = 2.0 * math.pi


class ChannelError(ValueError):
    pass


def sample_fading(rng: np.random.Generator, size=None) -> complex | np.ndarray:
    """Draw fading with |h|^2 ~ Exponential(mean 1) and uniform phase."""
    power = rng.exponential(1.0, size=size)
    phase = rng.uniform(0.0, TAU, size=size)
    h = np.sqrt(power) * np.exp(1j * phase)
    return complex(h) if size is None else h


def pathloss_amplitude(distance_m: float, pathloss_const: float, exponent: float,
                       shadow_db: float) -> float:
    """sqrt(rho * beta_lin * d**(-eta)) with beta_lin = 10**(shadow/10)."""
    beta_lin = 10.0 ** (shadow_db / 10.0)
    return math.sqrt(pathloss_const * beta_lin * distance_m ** (-exponent))


def _distances(a, b) -> np.ndarray:
    """Euclidean distances with a fixed accumulation order (x, y, z)."""
    delta = np.atleast_2d(np.asarray(b, dtype=float)) - np.atleast_2d(np.asarray(a, dtype=float))
    return np.sqrt(np.sum(delta * delta, axis=-1))


def direct_gain(
    tx_pos,
    rx_pos,
    pathloss_const: float,
    exponent: float,
    shadow_db: float,
    fading: complex,
    same_node: bool = False,
) -> complex:
    """Direct-link gain; exactly 0 for a node paired with itself."""
    if same_node:
        return 0j
    d = float(_distances(tx_pos, rx_pos)[0])
    if d == 0.0:
        raise ChannelError("coincident nodes")
    return pathloss_amplitude(d, pathloss_const, exponent, shadow_db) * fading


def array_response(angle_rad: float, n_elements: int, wavelength_m: float,
                   spacing_m: float) -> np.ndarray:
    """Uniform-linear-array response; element 0 is exactly 1."""
    if n_elements < 1:
        raise ChannelError("need at least one element")
    f = np.arange(n_elements)
    return np.exp(-1j * TAU * (spacing_m / wavelength_m) * f * math.sin(angle_rad))


def azimuth_to_ris(node_pos, ris_pos) -> float:
    """Elevation-free azimuth of the node seen from the RIS boresight (+x axis)."""
    dx = float(node_pos[0]) - float(ris_pos[0])
    dy = float(node_pos[1]) - float(ris_pos[1])
    return math.atan2(dy, dx)


def ris_segment_gain(
    node_pos,
    ris_pos,
    pathloss_const: float,
    exponent: float,
    shadow_db: float,
    wavelength_m: float,
    spacing_m: float,
    n_elements: int,
) -> np.ndarray:
    """Node-to-RIS (or RIS-to-node) segment gain vector of length F."""
    d = float(_distances(node_pos, ris_pos)[0])
    if d == 0.0:
        raise ChannelError("coincident nodes")
    amp = pathloss_amplitude(d, pathloss_const, exponent, shadow_db)
    response = array_response(azimuth_to_ris(node_pos, ris_pos), n_elements,
                              wavelength_m, spacing_m)
    return amp * np.exp(-1j * TAU * d / wavelength_m) * response


def phase_shift(index: int, n_levels: int) -> float:
    """Discrete phase value 2*pi*q/Q for element index q."""
    return TAU * index / n_levels


def reflection_matrix(phase_indices, n_levels: int, amplitudes=1.0) -> np.ndarray:
    """Diagonal of the reflection coefficient matrix as a length-F vector."""
    idx = np.asarray(phase_indices)
    if np.any(idx < 0) or np.any(idx >= n_levels):
        raise ChannelError(f"phase index out of range [0, {n_levels})")
    amps = np.broadcast_to(np.asarray(amplitudes, dtype=float), idx.shape)
    if np.any(amps < 0) or np.any(amps > 1):
        raise ChannelError("amplitudes must lie in [0, 1]")
    return amps * np.exp(1j * TAU * idx / n_levels)


def _cascade(ris_to_receiver, reflection, transmitter_to_ris, direct) -> complex:
    a = np.asarray(ris_to_receiver)
    t = np.asarray(reflection)
    b = np.asarray(transmitter_to_ris)
    if not (a.shape == t.shape == b.shape):
        raise ChannelError("segment vector length mismatch")
    return complex(np.sum(np.conj(a) * t * b) + direct)


def composite_v2i_gain(ris_to_vehicle, reflection, bs_to_ris, bs_to_vehicle) -> complex:
    """V2I link gain: (g_Rv)^H Theta g_BR plus the direct BS-vehicle gain."""
    return _cascade(ris_to_vehicle, reflection, bs_to_ris, bs_to_vehicle)


def composite_v2v_gain(ris_to_bs, reflection, tx_to_ris, tx_to_bs) -> complex:
    """V2V pair gain: (g_RB)^H Theta g_dR plus the direct transmitter-BS gain."""
    return _cascade(ris_to_bs, reflection, tx_to_ris, tx_to_bs)


def echo_gain(bs_to_ris, reflection, ris_to_target, bs_to_target) -> complex:
    """Sensing echo gain h * conj(h); real and nonnegative by construction."""
    h = _cascade(bs_to_ris, reflection, ris_to_target, bs_to_target)
    return complex(h.real * h.real + h.imag * h.imag, 0.0)


# -- batched forms (same math as the scalar operations above) ----------------

def direct_gains_batch(tx_pos, rx_pos, pathloss_const, exponent, shadow_db,
                       fading) -> np.ndarray:
    """Direct gains for n links at once; tx/rx broadcast against each other."""
    d = _distances(tx_pos, rx_pos)
    if np.any(d == 0.0):
        raise ChannelError("coincident nodes")
    beta_lin = 10.0 ** (np.asarray(shadow_db, dtype=float) / 10.0)
    amp = np.sqrt(pathloss_const * beta_lin * d ** (-exponent))
    return amp * np.asarray(fading)


def ris_segment_gains_batch(node_pos, ris_pos, pathloss_const, exponent,
                            shadow_db, wavelength_m, spacing_m,
                            n_elements: int) -> np.ndarray:
    """Segment gain vectors for n nodes at once, shape (n, F)."""
    nodes = np.atleast_2d(np.asarray(node_pos, dtype=float))
    ris = np.asarray(ris_pos, dtype=float)
    delta = nodes - ris
    d = _distances(nodes, ris)
    if np.any(d == 0.0):
        raise ChannelError("coincident nodes")
    beta_lin = 10.0 ** (np.asarray(shadow_db, dtype=float) / 10.0)
    amp = np.sqrt(pathloss_const * beta_lin * d ** (-exponent))
    az = np.arctan2(delta[:, 1], delta[:, 0])
    f = np.arange(n_elements)
    response = np.exp(-1j * TAU * (spacing_m / wavelength_m)
                      * np.sin(az)[:, None] * f[None, :])
    return (amp * np.exp(-1j * TAU * d / wavelength_m))[:, None] * response


def cascade_batch(ris_side, reflection, node_side, direct) -> np.ndarray:
    """Composite gains for n links: rows of conj(a) * Theta * b summed, plus direct."""
    a = np.atleast_2d(np.asarray(ris_side))
    b = np.atleast_2d(np.asarray(node_side))
    return (np.conj(a) * np.asarray(reflection) * b).sum(axis=1) + np.asarray(direct)
