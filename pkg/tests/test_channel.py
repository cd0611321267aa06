import math

import numpy as np
import pytest

from gsfim import modem, precoder, ssd
from gsfim.channel import ChannelModelSpec, NoiseModel, add_noise, draw_channels, snr_to_sigma2
from gsfim.config import SystemConfig
from gsfim.errors import ConfigError

from conftest import MU4, TINY


class TestDrawChannels:
    def test_iid_unit_variance(self):
        rng = np.random.default_rng(0)
        total = 0.0
        count = 0
        spec = ChannelModelSpec()
        while count < 100_000:
            blocks = draw_channels(spec, MU4, rng).blocks
            total += float(np.sum(np.abs(blocks) ** 2))
            count += blocks.size
        assert 0.99 < total / count < 1.01

    def test_seeded_determinism(self):
        spec = ChannelModelSpec()
        a = draw_channels(spec, TINY, np.random.default_rng(7)).blocks
        b = draw_channels(spec, TINY, np.random.default_rng(7)).blocks
        assert np.array_equal(a, b)

    def test_tdl_single_tap_is_flat(self):
        spec = ChannelModelSpec(kind="tdl", pdp=((0, 0.0),))
        cfg = SystemConfig(
            n_users=2, n_tx=4, n_rx=2, n_s=2, n_a=1, n_f=2, n_af=1, mod_order=2,
            total_subcarriers=8,
        )
        blocks = draw_channels(spec, cfg, np.random.default_rng(1)).blocks
        assert np.allclose(blocks[:, 0], blocks[:, 1], atol=1e-12)

    def test_tdl_unit_mean_power(self):
        spec = ChannelModelSpec(kind="tdl", pdp=((0, 0.0), (2, -3.0), (5, -6.0)))
        cfg = SystemConfig(
            n_users=2, n_tx=4, n_rx=2, n_s=2, n_a=1, n_f=2, n_af=1, mod_order=2,
            total_subcarriers=16,
        )
        rng = np.random.default_rng(2)
        total = 0.0
        count = 0
        for _ in range(2000):
            blocks = draw_channels(spec, cfg, rng, group=0).blocks
            total += float(np.sum(np.abs(blocks) ** 2))
            count += blocks.size
        assert 0.95 < total / count < 1.05

    def test_tdl_requires_pdp(self):
        with pytest.raises(ConfigError):
            ChannelModelSpec(kind="tdl")


class TestNoise:
    def test_sigma_zero_is_identity(self):
        signal = np.arange(8, dtype=np.complex128)
        out = add_noise(signal, NoiseModel(0.0), np.random.default_rng(0))
        assert np.array_equal(out, signal)

    def test_empirical_variance(self):
        noise = NoiseModel(0.3)
        rng = np.random.default_rng(3)
        samples = add_noise(np.zeros(1_000_000, dtype=np.complex128), noise, rng)
        var = float(np.mean(np.abs(samples) ** 2))
        assert abs(var - 0.6) < 0.006

    def test_seeded_reproducible(self):
        noise = NoiseModel(1.0)
        a = add_noise(np.zeros(16), noise, np.random.default_rng(5))
        b = add_noise(np.zeros(16), noise, np.random.default_rng(5))
        assert np.array_equal(a, b)

    def test_negative_variance_rejected(self):
        with pytest.raises(ConfigError):
            NoiseModel(-1.0)


class TestSnrMapping:
    def test_infinite_snr(self):
        assert snr_to_sigma2(math.inf, TINY) == 0.0

    def test_zero_db_balanced_dims(self):
        cfg = SystemConfig(n_users=1, n_tx=2, n_rx=2, n_s=2, n_a=1, n_f=2, n_af=2, mod_order=2)
        # n_a * n_af == n_f, so the complex noise variance is 1 at 0 dB
        assert abs(2.0 * snr_to_sigma2(0.0, cfg) - 1.0) < 1e-15

    def test_monte_carlo_energy_ratio(self):
        cfg = TINY
        luts = modem.build_luts(cfg)
        const = modem.make_constellation(cfg.mod_order)
        crm = ssd.crm_for(cfg)
        spec = ChannelModelSpec()
        rng = np.random.default_rng(11)
        snr_db = 5.0
        noise = NoiseModel(snr_to_sigma2(snr_db, cfg))
        sig = 0.0
        nse = 0.0
        eq_energy = 0.0
        n_draws = 10_000
        for _ in range(n_draws):
            channels = draw_channels(spec, cfg, rng)
            precoders = precoder.build_precoders(channels, cfg)
            eqs = precoder.assemble_precoded_system(channels, precoders, cfg)
            bits = rng.integers(0, 2, modem.bits_per_gsfim_symbol(cfg), dtype=np.uint8)
            spread = ssd.apply_crm(modem.map_bits(bits, cfg, luts, const).vec, crm)
            rx = eqs[0].assembled @ spread
            sig += float(np.real(np.vdot(rx, rx)))
            eq_energy += float(np.real(np.vdot(rx, rx)))
            n = add_noise(np.zeros(cfg.obs_len, dtype=np.complex128), noise, rng)
            nse += float(np.real(np.vdot(n, n)))
        ratio = sig / nse
        target = 10.0 ** (snr_db / 10.0)
        assert abs(ratio / target - 1.0) < 0.03
        # energy accounting: E||H s||^2 close to n_rx * n_a * n_af
        mean_sig = eq_energy / n_draws
        assert 0.95 < mean_sig / (cfg.n_rx * cfg.n_a * cfg.n_af) < 1.05
