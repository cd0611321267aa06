"""Fast invariant suite behind the `validate` CLI subcommand.

Each check returns a pass/fail with a one-line detail; the suite is meant to
smoke-test an installation or a new scenario config in seconds, not to
replace the full test suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import modem, precoder, ssd
from .channel import ChannelModelSpec, NoiseModel, draw_channels, snr_to_sigma2
from .config import SUPPORTED_QAM_ORDERS, SystemConfig
from .detectors import build_support_set, mld, ob_mmse_detect
from .harness import RunSpec, run_trial


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _check(name: str, passed: bool, detail: str) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), detail=detail)


def check_constellations() -> CheckResult:
    worst = 0.0
    for m in SUPPORTED_QAM_ORDERS:
        points = modem.make_constellation(m).points
        worst = max(worst, abs(float(np.mean(np.abs(points) ** 2)) - 1.0))
    return _check("constellation-normalization", worst < 1e-12, f"max |E|s|^2 - 1| = {worst:.2e}")


def check_crm_unitarity(cfg: SystemConfig) -> CheckResult:
    orders = {2, 4, 8, 16}
    if cfg.crm_enabled:
        orders.add(cfg.n_f)
    worst = 0.0
    for order in sorted(orders):
        for deg in (0.0, 15.0, 30.0, 45.0):
            a = ssd.build_crm(order, math.radians(deg)).matrix
            worst = max(worst, float(np.linalg.norm(a.conj().T @ a - np.eye(order))))
    return _check("crm-unitarity", worst < 1e-12, f"max ||A^H A - I||_F = {worst:.2e}")


def check_roundtrip(cfg: SystemConfig, rng: np.random.Generator) -> CheckResult:
    luts = modem.build_luts(cfg)
    constellation = modem.make_constellation(cfg.mod_order)
    n_bits = modem.bits_per_gsfim_symbol(cfg)
    if n_bits <= 14:
        vectors = (
            np.array([(v >> (n_bits - 1 - i)) & 1 for i in range(n_bits)], dtype=np.uint8)
            for v in range(1 << n_bits)
        )
        label = f"exhaustive over {1 << n_bits} patterns"
    else:
        vectors = (rng.integers(0, 2, n_bits, dtype=np.uint8) for _ in range(2000))
        label = "2000 random vectors"
    for bits in vectors:
        sym = modem.map_bits(bits, cfg, luts, constellation)
        back = modem.demap_symbol(sym, cfg, luts, constellation)
        if not np.array_equal(bits, back):
            return _check("map-demap-roundtrip", False, f"mismatch for bits {bits.tolist()}")
    return _check("map-demap-roundtrip", True, label)


def check_mui_nulling(cfg: SystemConfig, rng: np.random.Generator, draws: int = 10) -> CheckResult:
    if cfg.n_users == 1:
        return _check("mui-nulling", True, "single user: nothing to null")
    worst_leak = 0.0
    worst_orth = 0.0
    spec = ChannelModelSpec()
    for _ in range(draws):
        channels = draw_channels(spec, cfg, rng)
        precoders = precoder.build_precoders(channels, cfg)
        for u in range(cfg.n_users):
            for f in range(cfg.n_f):
                fm = precoders.blocks[u, f]
                worst_orth = max(
                    worst_orth,
                    float(np.linalg.norm(fm.conj().T @ fm - np.eye(cfg.n_s))),
                )
                for v in range(cfg.n_users):
                    if v == u:
                        continue
                    h = channels.blocks[v, f]
                    worst_leak = max(
                        worst_leak, float(np.linalg.norm(h @ fm) / np.linalg.norm(h))
                    )
    ok = worst_leak < 1e-9 and worst_orth < 1e-10
    return _check(
        "mui-nulling", ok, f"max leakage {worst_leak:.2e}, max ||F^H F - I|| {worst_orth:.2e}"
    )


def check_end_to_end(cfg: SystemConfig, rng: np.random.Generator) -> CheckResult:
    luts = modem.build_luts(cfg)
    constellation = modem.make_constellation(cfg.mod_order)
    crm = ssd.crm_for(cfg)
    spec = ChannelModelSpec()
    worst = 0.0
    for _ in range(5):
        channels = draw_channels(spec, cfg, rng)
        precoders = precoder.build_precoders(channels, cfg)
        eqs = precoder.assemble_precoded_system(channels, precoders, cfg)
        spread = []
        for u in range(cfg.n_users):
            bits = rng.integers(0, 2, modem.bits_per_gsfim_symbol(cfg), dtype=np.uint8)
            sym = modem.map_bits(bits, cfg, luts, constellation)
            spread.append(ssd.apply_crm(sym.vec, crm))
        x = precoder.transmit(precoders, spread, cfg)
        for u in range(cfg.n_users):
            y = precoder.apply_channel(channels, u, x)
            want = eqs[u].assembled @ spread[u]
            worst = max(worst, float(np.linalg.norm(y - want) / max(np.linalg.norm(want), 1e-30)))
    return _check("end-to-end-no-mui", worst < 1e-8, f"max relative error {worst:.2e}")


def check_noiseless_detection(run: RunSpec) -> CheckResult:
    detector = run.detector if run.detector in ("mld", "obmmse") else "obmmse"
    cfg = run.cfg
    k = cfg.n_a * cfg.n_af
    if detector == "mld":
        n_hyp = modem.n_comb(cfg) * cfg.mod_order**k
        if n_hyp > cfg.detector_params.mld_max_hypotheses:
            detector = "obmmse"
    errors = 0
    for trial in range(5):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 977, trial]))
        for rec in run_trial(cfg, math.inf, rng, detector, run.channel):
            errors += rec.bit_errors
    return _check(
        "noiseless-detection", errors == 0, f"{detector}: {errors} bit errors over 5 trials"
    )


def check_oracle_agreement(cfg: SystemConfig) -> CheckResult:
    k = cfg.n_a * cfg.n_af
    n_hyp = modem.n_comb(cfg) * cfg.mod_order**k
    if n_hyp > 1 << 16:
        cfg = SystemConfig(
            n_users=2, n_tx=4, n_rx=2, n_s=2, n_a=1, n_f=2, n_af=1, mod_order=2
        )
        label = "search space too large; checked on the 2x2 reference scenario"
    else:
        label = f"{n_hyp} hypotheses"
    luts = modem.build_luts(cfg)
    constellation = modem.make_constellation(cfg.mod_order)
    supports = build_support_set(cfg, luts)
    crm = ssd.crm_for(cfg)
    noise = NoiseModel(snr_to_sigma2(math.inf, cfg))
    spec = ChannelModelSpec()
    for trial in range(10):
        rng = np.random.default_rng(np.random.SeedSequence([123, trial]))
        channels = draw_channels(spec, cfg, rng)
        precoders = precoder.build_precoders(channels, cfg)
        eqs = precoder.assemble_precoded_system(channels, precoders, cfg)
        bits = rng.integers(0, 2, modem.bits_per_gsfim_symbol(cfg), dtype=np.uint8)
        sym = modem.map_bits(bits, cfg, luts, constellation)
        spread = [ssd.apply_crm(sym.vec, crm)] + [
            np.zeros(cfg.vec_len, dtype=np.complex128) for _ in range(cfg.n_users - 1)
        ]
        x = precoder.transmit(precoders, spread, cfg)
        y = precoder.apply_channel(channels, 0, x)
        h_t = ssd.effective_channel(eqs[0], crm)
        a = mld(y, h_t, supports, constellation, cfg)
        b = ob_mmse_detect(y, h_t, supports, noise, constellation, cfg)
        if not np.array_equal(a.bits, b.bits):
            return _check("oracle-agreement", False, f"mismatch on trial {trial}")
    return _check("oracle-agreement", True, f"10 noiseless trials agree ({label})")


def run_validation(run: RunSpec) -> list[CheckResult]:
    rng = np.random.default_rng(run.cfg.seed)
    return [
        check_constellations(),
        check_crm_unitarity(run.cfg),
        check_roundtrip(run.cfg, rng),
        check_mui_nulling(run.cfg, rng),
        check_end_to_end(run.cfg, rng),
        check_noiseless_detection(run),
        check_oracle_agreement(run.cfg),
    ]
