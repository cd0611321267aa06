import numpy as np
import pytest

from gsfim import modem, precoder, ssd
from gsfim.channel import ChannelModelSpec, NoiseModel, add_noise, draw_channels, snr_to_sigma2
from gsfim.config import SystemConfig
from gsfim.detectors import active_backend, available_backends, build_support_set, use_backend

TINY = SystemConfig(n_users=2, n_tx=4, n_rx=2, n_s=2, n_a=1, n_f=2, n_af=1, mod_order=2)
SCALED = SystemConfig(n_users=2, n_tx=10, n_rx=5, n_s=5, n_a=2, n_f=4, n_af=3, mod_order=4)
MU4 = SystemConfig(n_users=4, n_tx=20, n_rx=5, n_s=5, n_a=2, n_f=4, n_af=3, mod_order=4)


@pytest.fixture
def tiny_cfg():
    return TINY


@pytest.fixture
def scaled_cfg():
    return SCALED


@pytest.fixture
def mu4_cfg():
    return MU4


@pytest.fixture(params=available_backends())
def backend(request):
    previous = active_backend()
    use_backend(request.param)
    yield request.param
    use_backend(previous)


class LinkInstance:
    """One transmitted symbol with everything a detector test needs."""

    def __init__(self, cfg, seed, snr_db, user=0):
        self.cfg = cfg
        self.luts = modem.build_luts(cfg)
        self.constellation = modem.make_constellation(cfg.mod_order)
        self.supports = build_support_set(cfg, self.luts)
        self.crm = ssd.crm_for(cfg)
        rng = np.random.default_rng(np.random.SeedSequence([seed]))
        channels = draw_channels(ChannelModelSpec(), cfg, rng)
        precoders = precoder.build_precoders(channels, cfg)
        self.eqs = precoder.assemble_precoded_system(channels, precoders, cfg)
        self.bits = rng.integers(0, 2, (cfg.n_users, modem.bits_per_gsfim_symbol(cfg)), dtype=np.uint8)
        spread = [
            ssd.apply_crm(modem.map_bits(self.bits[u], cfg, self.luts, self.constellation).vec, self.crm)
            for u in range(cfg.n_users)
        ]
        self.symbol = modem.map_bits(self.bits[user], cfg, self.luts, self.constellation)
        x = precoder.transmit(precoders, spread, cfg)
        sigma2 = 0.0 if snr_db is None else snr_to_sigma2(snr_db, cfg)
        self.noise = NoiseModel(sigma2)
        self.y = add_noise(precoder.apply_channel(channels, user, x), self.noise, rng)
        self.eq = self.eqs[user]
        self.h_tilde = ssd.effective_channel(self.eq, self.crm)
        self.user = user

    @property
    def tx_bits(self):
        return self.bits[self.user]


@pytest.fixture
def make_link():
    return LinkInstance
