"""Link-level simulator for precoded multiuser MIMO-OFDM downlinks with
joint space-frequency index modulation and frequency-direction spreading."""

from .channel import (
    ChannelModelSpec,
    ChannelSet,
    NoiseModel,
    add_noise,
    draw_channels,
    snr_to_sigma2,
)
from .config import DetectorParams, SystemConfig
from .modem import (
    Constellation,
    GsfimSymbol,
    Luts,
    PatternLut,
    bits_per_gsfim_symbol,
    build_luts,
    build_pattern_lut,
    demap_symbol,
    hard_demap_noisy,
    make_constellation,
    map_bits,
    n_comb,
)

__version__ = "0.1.0"
