#!/usr/bin/env python3
"""Benchmark the compiled detector kernels against the pure-numpy fallback.

Times each detector on a fixed mid-size scenario (2 users, 5x10 per-subcarrier
channels, 4 subcarriers, QPSK) plus the small reference scenario, then reports
per-call latency and the compiled/python speedup.

Usage: python benchmarks/bench_detectors.py [--repeats N]
"""

import argparse
import time

import numpy as np

from gsfim import modem, precoder, ssd
from gsfim.channel import ChannelModelSpec, NoiseModel, add_noise, draw_channels, snr_to_sigma2
from gsfim.config import SystemConfig
from gsfim.detectors import (
    admm_detect,
    available_backends,
    build_support_set,
    mld,
    ob_mmse_detect,
    smmp_detect,
    use_backend,
)

MID = SystemConfig(n_users=2, n_tx=10, n_rx=5, n_s=5, n_a=2, n_f=4, n_af=3, mod_order=4)
SMALL = SystemConfig(n_users=2, n_tx=4, n_rx=2, n_s=2, n_a=1, n_f=2, n_af=1, mod_order=2)


def make_instance(cfg, snr_db, seed):
    luts = modem.build_luts(cfg)
    constellation = modem.make_constellation(cfg.mod_order)
    supports = build_support_set(cfg, luts)
    crm = ssd.crm_for(cfg)
    rng = np.random.default_rng(seed)
    channels = draw_channels(ChannelModelSpec(), cfg, rng)
    precoders = precoder.build_precoders(channels, cfg)
    eqs = precoder.assemble_precoded_system(channels, precoders, cfg)
    bits = rng.integers(0, 2, modem.bits_per_gsfim_symbol(cfg), dtype=np.uint8)
    spread = [ssd.apply_crm(modem.map_bits(bits, cfg, luts, constellation).vec, crm)]
    spread += [np.zeros(cfg.vec_len, dtype=np.complex128)] * (cfg.n_users - 1)
    x = precoder.transmit(precoders, spread, cfg)
    noise = NoiseModel(snr_to_sigma2(snr_db, cfg))
    y = add_noise(precoder.apply_channel(channels, 0, x), noise, rng)
    h_tilde = ssd.effective_channel(eqs[0], crm)
    return y, h_tilde, supports, luts, constellation, noise


def time_call(fn, repeats):
    fn()  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - start) / repeats


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=30)
    args = parser.parse_args()

    y, h, supports, luts, constellation, noise = make_instance(MID, 6.0, seed=1)
    ys, hs, sup_s, luts_s, const_s, noise_s = make_instance(SMALL, 10.0, seed=2)
    noiseless = NoiseModel(0.0)  # worst case: the support scan never stops early

    cases = [
        ("mld (small, 8 hyp)",
         lambda: mld(ys, hs, sup_s, const_s, SMALL)),
        ("obmmse (typical)",
         lambda: ob_mmse_detect(y, h, supports, noise, constellation, MID)),
        ("obmmse (full scan)",
         lambda: ob_mmse_detect(y, h, supports, noiseless, constellation, MID)),
        ("smmp L=1",
         lambda: smmp_detect(y, h, luts, constellation, MID)),
        ("admm Q=30 x3 starts",
         lambda: admm_detect(y, h, luts, constellation, noise, MID,
                             rng=np.random.default_rng(3))),
    ]

    backends = available_backends()
    results = {}
    for backend in backends:
        use_backend(backend)
        for name, fn in cases:
            results[(backend, name)] = time_call(fn, args.repeats)

    width = max(len(name) for name, _ in cases)
    header = f"{'kernel':<{width}}  " + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for name, _ in cases:
        row = f"{name:<{width}}  "
        for backend in backends:
            row += f"{results[(backend, name)] * 1e3:>10.3f}ms"
        if len(backends) == 2:
            row += f"{results[('python', name)] / results[('compiled', name)]:>9.1f}x"
        print(row)


if __name__ == "__main__":
    main()
