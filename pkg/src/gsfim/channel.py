"""Channel and noise models.

The default model draws every frequency-domain coefficient i.i.d. circularly
symmetric complex Gaussian with unit variance.  A tapped-delay-line mode is
provided for frequency-correlated fading: tap gains are drawn per antenna
pair from a configurable power-delay profile, transformed to the full OFDM
grid, and the bins belonging to one interleaved group are sliced out.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import ConfigError
from .ssd import build_interleaver


@dataclass(frozen=True)
class NoiseModel:
    """Receiver noise level; sigma2 is the per-real-dimension variance.

    Each complex noise sample has variance 2*sigma2.  sigma2 = 0 is allowed
    for noiseless oracle runs.
    """

    sigma2: float

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ConfigError("noise variance must be >= 0")


@dataclass(frozen=True)
class ChannelModelSpec:
    """Channel kind plus the power-delay profile for the tdl mode.

    ``pdp`` is a tuple of (delay_in_samples, power_db) pairs; powers are
    normalized to unit total gain after linearization.
    """

    kind: str = "iid"
    pdp: tuple[tuple[int, float], ...] = ()

    def __post_init__(self):
        if self.kind not in ("iid", "tdl"):
            raise ConfigError(f"channel.kind must be 'iid' or 'tdl', got {self.kind!r}")
        if self.kind == "tdl" and not self.pdp:
            raise ConfigError("channel.kind = tdl requires a channel.pdp")

    def linear_powers(self) -> np.ndarray:
        p = np.array([10.0 ** (db / 10.0) for _, db in self.pdp])
        return p / p.sum()


@dataclass(frozen=True)
class ChannelSet:
    """Per-user, per-subcarrier channel blocks, shape (n_users, n_f, n_rx, n_tx)."""

    blocks: np.ndarray


def draw_channels(
    spec: ChannelModelSpec, cfg: SystemConfig, rng: np.random.Generator, group: int = 0
) -> ChannelSet:
    """Draw one realization of all users' channels for one subcarrier group."""
    shape = (cfg.n_users, cfg.n_f, cfg.n_rx, cfg.n_tx)
    if spec.kind == "iid":
        blocks = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)
        return ChannelSet(blocks=blocks)
    # tdl: taps per (user, rx, tx), FFT to the full grid, slice this group's bins
    n_total = cfg.total_subcarriers
    delays = np.array([d for d, _ in spec.pdp], dtype=np.float64)
    amps = np.sqrt(spec.linear_powers())
    tap_shape = (cfg.n_users, cfg.n_rx, cfg.n_tx, len(delays))
    taps = (rng.standard_normal(tap_shape) + 1j * rng.standard_normal(tap_shape)) / np.sqrt(2.0)
    taps = taps * amps
    bins = build_interleaver(n_total, cfg.n_f).positions(group)
    # response at bin b: sum_l g_l * exp(-2j*pi*b*d_l / n_total)
    phases = np.exp(-2j * np.pi * np.outer(bins, delays) / n_total)  # (n_f, n_taps)
    freq = np.einsum("urtl,fl->ufrt", taps, phases)
    return ChannelSet(blocks=np.ascontiguousarray(freq))


def add_noise(signal: np.ndarray, noise: NoiseModel, rng: np.random.Generator) -> np.ndarray:
    """Add i.i.d. complex Gaussian noise with variance 2*sigma2 per entry."""
    signal = np.asarray(signal, dtype=np.complex128)
    if noise.sigma2 == 0.0:
        return signal.copy()
    scale = np.sqrt(noise.sigma2)
    return signal + scale * (
        rng.standard_normal(signal.shape) + 1j * rng.standard_normal(signal.shape)
    )


def snr_to_sigma2(snr_db: float, cfg: SystemConfig) -> float:
    """Per-real-dimension noise variance hitting the requested receive SNR.

    SNR is defined as E[||H s||^2] / E[||n||^2] with unit-energy payload
    symbols and unit-variance channel entries, so the average received signal
    energy is n_rx*n_a*n_af and the noise energy is n_rx*n_f*2*sigma2.
    """
    n0 = cfg.n_a * cfg.n_af / (cfg.n_f * 10.0 ** (snr_db / 10.0))
    return n0 / 2.0
