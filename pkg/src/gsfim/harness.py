"""Monte Carlo harness: config files, seeded trials and sweeps, CSV output.

Every trial owns an RNG stream derived from (seed, SNR index, trial index),
so results are reproducible bit for bit and independent of how trials are
distributed over workers.  Stopping decisions are taken on fixed-size trial
batches, which keeps the executed trial counts identical for any --jobs.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from . import complexity, modem, precoder, ssd
from .channel import ChannelModelSpec, NoiseModel, add_noise, draw_channels, snr_to_sigma2
from .config import DETECTOR_KINDS, DetectorParams, SystemConfig
from .detectors import (
    admm_detect,
    build_support_set,
    mld,
    ob_mmse_detect,
    separate_detect,
    smmp_detect,
)
from .errors import ConfigError

CSV_HEADER = "snr_db,detector,trials,bits,bit_errors,ber,ci95,mean_candidates,flops_model"

DEFAULT_TARGET_ERRORS = 200
DEFAULT_MAX_TRIALS = 100_000
BATCH_TRIALS = 250  # stopping-rule granularity; fixed so results never depend on --jobs


@dataclass(frozen=True)
class TrialRecord:
    """Per-user outcome of one simulated symbol period."""

    snr_db: float
    user: int
    bits_tx: int
    bit_errors: int
    symbol_error: bool
    detector: str
    candidates_examined: int
    index_bit_errors: int
    payload_bit_errors: int


@dataclass(frozen=True)
class SweepRow:
    snr_db: float
    trials: int
    bits: int
    bit_errors: int
    ber: float
    ci95_halfwidth: float
    mean_candidates: float
    flops_model: float
    index_bit_errors: int = 0
    payload_bit_errors: int = 0
    index_bits: int = 0
    payload_bits: int = 0


@dataclass(frozen=True)
class SweepResult:
    detector: str
    rows: tuple[SweepRow, ...]


@dataclass(frozen=True)
class RunSpec:
    """Everything a simulation run needs beyond the scenario config."""

    cfg: SystemConfig
    detector: str = "obmmse"
    channel: ChannelModelSpec = field(default_factory=ChannelModelSpec)
    max_trials: int = DEFAULT_MAX_TRIALS
    target_errors: int = DEFAULT_TARGET_ERRORS
    split_diagnostic: bool = False


@lru_cache(maxsize=16)
def _context(cfg: SystemConfig):
    luts = modem.build_luts(cfg)
    constellation = modem.make_constellation(cfg.mod_order)
    supports = build_support_set(cfg, luts)
    crm = ssd.crm_for(cfg)
    index_mask = _index_bit_mask(cfg, luts, constellation)
    return luts, constellation, supports, crm, index_mask


def _index_bit_mask(cfg, luts, constellation) -> np.ndarray:
    """True where a bit position carries index (not payload) information."""
    mask = np.zeros(modem.bits_per_gsfim_symbol(cfg), dtype=bool)
    mask[: luts.subcarrier.index_bits] = True
    off = luts.subcarrier.index_bits
    per_sub = luts.antenna.index_bits + cfg.n_a * constellation.bits_per_point
    for _ in range(cfg.n_af):
        mask[off : off + luts.antenna.index_bits] = True
        off += per_sub
    return mask


def run_trial(
    cfg: SystemConfig,
    snr_db: float,
    rng: np.random.Generator,
    detector: str = "obmmse",
    channel_spec: ChannelModelSpec | None = None,
    group: int = 0,
) -> list[TrialRecord]:
    """Simulate one full symbol period and detect for every user."""
    if channel_spec is None:
        channel_spec = ChannelModelSpec()
    luts, constellation, supports, crm, index_mask = _context(cfg)
    noise = NoiseModel(snr_to_sigma2(snr_db, cfg))
    channels = draw_channels(channel_spec, cfg, rng, group=group)
    precoders = precoder.build_precoders(channels, cfg)
    eqs = precoder.assemble_precoded_system(channels, precoders, cfg)
    n_bits = modem.bits_per_gsfim_symbol(cfg)
    tx_bits = rng.integers(0, 2, size=(cfg.n_users, n_bits), dtype=np.uint8)
    spread = []
    for u in range(cfg.n_users):
        sym = modem.map_bits(tx_bits[u], cfg, luts, constellation)
        spread.append(ssd.apply_crm(sym.vec, crm))
    x = precoder.transmit(precoders, spread, cfg)
    records = []
    for u in range(cfg.n_users):
        y = add_noise(precoder.apply_channel(channels, u, x), noise, rng)
        if detector == "separate":
            det = separate_detect(y, eqs[u], luts, constellation, noise, cfg, rng=rng)
        else:
            h_t = ssd.effective_channel(eqs[u], crm)
            if detector == "mld":
                det = mld(y, h_t, supports, constellation, cfg)
            elif detector == "obmmse":
                det = ob_mmse_detect(y, h_t, supports, noise, constellation, cfg)
            elif detector == "smmp":
                det = smmp_detect(y, h_t, luts, constellation, cfg)
            elif detector == "admm":
                det = admm_detect(y, h_t, luts, constellation, noise, cfg, rng=rng)
            else:
                raise ConfigError(f"unknown detector kind {detector!r}")
        wrong = tx_bits[u] != det.bits
        records.append(
            TrialRecord(
                snr_db=snr_db,
                user=u,
                bits_tx=n_bits,
                bit_errors=int(np.count_nonzero(wrong)),
                symbol_error=bool(wrong.any()),
                detector=detector,
                candidates_examined=det.candidates_examined,
                index_bit_errors=int(np.count_nonzero(wrong & index_mask)),
                payload_bit_errors=int(np.count_nonzero(wrong & ~index_mask)),
            )
        )
    return records


def _trial_rng(seed: int, snr_idx: int, trial_idx: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, snr_idx, trial_idx]))


def _run_range(run: RunSpec, snr_db: float, snr_idx: int, start: int, count: int):
    """Aggregate `count` trials starting at trial index `start` (worker entry)."""
    cfg = run.cfg
    n_groups = max(cfg.total_subcarriers // cfg.n_f, 1)
    trials = bits = errs = cand = idx_errs = pay_errs = 0
    for trial_idx in range(start, start + count):
        rng = _trial_rng(cfg.seed, snr_idx, trial_idx)
        group = trial_idx % n_groups if run.channel.kind == "tdl" else 0
        for rec in run_trial(cfg, snr_db, rng, run.detector, run.channel, group):
            trials += 1
            bits += rec.bits_tx
            errs += rec.bit_errors
            cand += rec.candidates_examined
            idx_errs += rec.index_bit_errors
            pay_errs += rec.payload_bit_errors
    return trials, bits, errs, cand, idx_errs, pay_errs


def run_sweep(run: RunSpec, jobs: int = 1) -> SweepResult:
    """Sweep the config's SNR grid until the error target or trial cap.

    Aggregation uses integer accumulators only, so the result is identical
    for any worker count.
    """
    cfg = run.cfg
    cfg.validate()
    if not cfg.snr_grid:
        raise ConfigError("sweep.snr_db is required to run a sweep")
    grid = sorted(cfg.snr_grid)
    luts, constellation, _, _, index_mask = _context(cfg)
    n_index_bits = int(index_mask.sum())
    n_payload_bits = index_mask.size - n_index_bits
    flops = complexity.flops_for(cfg, run.detector)
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 else None
    rows = []
    try:
        for snr_idx, snr_db in enumerate(grid):
            trials = bits = errs = cand = idx_errs = pay_errs = 0
            done_trials = 0
            while done_trials < run.max_trials and errs < run.target_errors:
                batch = min(BATCH_TRIALS, run.max_trials - done_trials)
                parts = []
                if pool is None:
                    parts.append(_run_range(run, snr_db, snr_idx, done_trials, batch))
                else:
                    step = math.ceil(batch / jobs)
                    futures = []
                    for chunk_start in range(done_trials, done_trials + batch, step):
                        chunk = min(step, done_trials + batch - chunk_start)
                        futures.append(
                            pool.submit(_run_range, run, snr_db, snr_idx, chunk_start, chunk)
                        )
                    parts = [f.result() for f in futures]
                for t, b, e, c, ie, pe in parts:
                    trials += t
                    bits += b
                    errs += e
                    cand += c
                    idx_errs += ie
                    pay_errs += pe
                done_trials += batch
            ber = errs / bits if bits else 0.0
            ci = 1.96 * math.sqrt(ber * (1.0 - ber) / bits) if bits else 0.0
            rows.append(
                SweepRow(
                    snr_db=snr_db,
                    trials=done_trials,
                    bits=bits,
                    bit_errors=errs,
                    ber=ber,
                    ci95_halfwidth=ci,
                    mean_candidates=cand / trials if trials else 0.0,
                    flops_model=flops,
                    index_bit_errors=idx_errs,
                    payload_bit_errors=pay_errs,
                    index_bits=done_trials * cfg.n_users * n_index_bits,
                    payload_bits=done_trials * cfg.n_users * n_payload_bits,
                )
            )
    finally:
        if pool is not None:
            pool.shutdown()
    return SweepResult(detector=run.detector, rows=tuple(rows))


# --- config file handling -------------------------------------------------

_SNR_NOTE = (
    "SNR definition: E[||H s||^2] / E[||n||^2]; "
    "2*sigma^2 = n_a*n_af / (n_f * 10^(snr_db/10)) per complex noise entry"
)


def _parse_bool(value: str, key: str) -> bool:
    v = value.strip().lower()
    if v in ("true", "1", "yes", "on"):
        return True
    if v in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {value!r}")


def _parse_int(value: str, key: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}")


def _parse_float(value: str, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key}: expected a number, got {value!r}")


def _parse_snr_grid(value: str, key: str) -> tuple[float, ...]:
    parts = value.split(":")
    if len(parts) == 1:
        return (_parse_float(parts[0], key),)
    if len(parts) != 3:
        raise ConfigError(f"{key}: expected 'start:step:stop' or a single value, got {value!r}")
    start, step, stop = (_parse_float(p, key) for p in parts)
    if step <= 0:
        raise ConfigError(f"{key}: step must be positive")
    grid = []
    v = start
    while v <= stop + 1e-9:
        grid.append(round(v, 9))
        v += step
    if not grid:
        raise ConfigError(f"{key}: empty grid from {value!r}")
    return tuple(grid)


def _parse_pdp(value: str, key: str) -> tuple[tuple[int, float], ...]:
    taps = []
    for item in value.split(","):
        try:
            delay, power = item.split(":")
            taps.append((int(delay), float(power)))
        except ValueError:
            raise ConfigError(f"{key}: expected 'delay:power_db,...', got {value!r}")
    return tuple(taps)


def parse_config_text(text: str) -> RunSpec:
    """Parse the key = value config format; unknown keys are errors."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if not key or not value:
            raise ConfigError(f"line {lineno}: empty key or value")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = value

    def take(key, parser, default=None, required=False):
        if key in raw:
            return parser(raw.pop(key), key)
        if required:
            raise ConfigError(f"missing required key {key!r}")
        return default

    dims = {}
    for name in ("n_users", "n_tx", "n_rx", "n_s", "n_a", "n_f", "n_af", "mod_order"):
        dims[name] = take(f"system.{name}", _parse_int, required=True)
    crm_enabled = take("system.crm_enabled", _parse_bool, default=True)
    angle = take("system.crm_angle", _parse_float)
    angle_deg = take("system.crm_angle_deg", _parse_float)
    if angle is not None and angle_deg is not None:
        raise ConfigError("give system.crm_angle or system.crm_angle_deg, not both")
    if angle_deg is not None:
        angle = math.radians(angle_deg)
    if angle is None:
        angle = math.pi / 6
    total = take("system.total_subcarriers", _parse_int, default=0)

    detector = take("detector.kind", lambda v, k: v, default="obmmse")
    if detector not in DETECTOR_KINDS:
        raise ConfigError(f"detector.kind must be one of {DETECTOR_KINDS}, got {detector!r}")
    params = DetectorParams(
        rho_x=take("detector.admm.rho_x", _parse_float, default=1.0),
        rho_r=take("detector.admm.rho_r", _parse_float, default=1.0),
        rho_z=take("detector.admm.rho_z", _parse_float, default=1.0),
        admm_iters=take("detector.admm.q", _parse_int, default=30),
        restarts=take("detector.admm.restarts", _parse_int, default=3),
        smmp_children=take("detector.smmp.l", _parse_int, default=1),
        obmmse_threshold_policy=take(
            "detector.obmmse.threshold_policy", lambda v, k: v, default="scaled"
        ),
        mld_max_hypotheses=take("detector.mld.max_hypotheses", _parse_int, default=2**24),
        table_iv_literal=take("detector.table_iv_literal", _parse_bool, default=False),
        separate_inner=take("detector.separate.inner", lambda v, k: v, default="obmmse"),
    )

    channel_kind = take("channel.kind", lambda v, k: v, default="iid")
    pdp = take("channel.pdp", _parse_pdp, default=())
    channel = ChannelModelSpec(kind=channel_kind, pdp=pdp)

    snr_grid = take("sweep.snr_db", _parse_snr_grid, default=())
    seed = take("sweep.seed", _parse_int, default=0)
    if seed < 0:
        raise ConfigError("sweep.seed must be >= 0")
    max_trials = take("sweep.max_trials", _parse_int, default=DEFAULT_MAX_TRIALS)
    target_errors = take("sweep.target_errors", _parse_int, default=DEFAULT_TARGET_ERRORS)
    split = take("diagnostics.split_index_payload", _parse_bool, default=False)

    if raw:
        raise ConfigError(f"unknown config key(s): {', '.join(sorted(raw))}")

    cfg = SystemConfig(
        crm_angle=angle,
        crm_enabled=crm_enabled,
        total_subcarriers=total,
        snr_grid=snr_grid,
        seed=seed,
        detector_params=params,
        **dims,
    )
    cfg.validate()
    if detector == "separate" and cfg.crm_enabled:
        raise ConfigError("detector.kind = separate requires system.crm_enabled = false")
    return RunSpec(
        cfg=cfg,
        detector=detector,
        channel=channel,
        max_trials=max_trials,
        target_errors=target_errors,
        split_diagnostic=split,
    )


def load_config(path: str) -> RunSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    return parse_config_text(text)


def serialize_run_spec(run: RunSpec) -> list[str]:
    """Canonical key = value lines echoing the full effective configuration."""
    cfg = run.cfg
    p = cfg.detector_params
    lines = [
        f"system.n_users = {cfg.n_users}",
        f"system.n_tx = {cfg.n_tx}",
        f"system.n_rx = {cfg.n_rx}",
        f"system.n_s = {cfg.n_s}",
        f"system.n_a = {cfg.n_a}",
        f"system.n_f = {cfg.n_f}",
        f"system.n_af = {cfg.n_af}",
        f"system.mod_order = {cfg.mod_order}",
        f"system.crm_enabled = {str(cfg.crm_enabled).lower()}",
        f"system.crm_angle = {cfg.crm_angle!r}",
        f"system.total_subcarriers = {cfg.total_subcarriers}",
        f"detector.kind = {run.detector}",
        f"detector.admm.q = {p.admm_iters}",
        f"detector.admm.rho_x = {p.rho_x!r}",
        f"detector.admm.rho_r = {p.rho_r!r}",
        f"detector.admm.rho_z = {p.rho_z!r}",
        f"detector.admm.restarts = {p.restarts}",
        f"detector.smmp.l = {p.smmp_children}",
        f"detector.obmmse.threshold_policy = {p.obmmse_threshold_policy}",
        f"detector.mld.max_hypotheses = {p.mld_max_hypotheses}",
        f"detector.table_iv_literal = {str(p.table_iv_literal).lower()}",
        f"detector.separate.inner = {p.separate_inner}",
        f"channel.kind = {run.channel.kind}",
    ]
    if run.channel.pdp:
        pdp = ",".join(f"{d}:{pw!r}" for d, pw in run.channel.pdp)
        lines.append(f"channel.pdp = {pdp}")
    if cfg.snr_grid:
        grid = ",".join(f"{v!r}" for v in sorted(cfg.snr_grid))
        lines.append(f"sweep.snr_db_values = {grid}")
    lines += [
        f"sweep.seed = {cfg.seed}",
        f"sweep.max_trials = {run.max_trials}",
        f"sweep.target_errors = {run.target_errors}",
        f"diagnostics.split_index_payload = {str(run.split_diagnostic).lower()}",
    ]
    return lines


def render_csv(run: RunSpec, result: SweepResult) -> str:
    """Render a sweep as CSV with a comment header echoing the config."""
    out = ["# " + _SNR_NOTE]
    out += ["# " + line for line in serialize_run_spec(run)]
    out.append(CSV_HEADER)
    for row in result.rows:
        out.append(
            f"{row.snr_db:g},{result.detector},{row.trials},{row.bits},{row.bit_errors},"
            f"{row.ber:.10e},{row.ci95_halfwidth:.10e},{row.mean_candidates:.6f},"
            f"{row.flops_model:.6e}"
        )
    if run.split_diagnostic:
        for row in result.rows:
            idx_ber = row.index_bit_errors / row.index_bits if row.index_bits else 0.0
            pay_ber = row.payload_bit_errors / row.payload_bits if row.payload_bits else 0.0
            out.append(
                f"# split snr_db={row.snr_db:g} index_ber={idx_ber:.10e} "
                f"payload_ber={pay_ber:.10e}"
            )
    return "\n".join(out) + "\n"


def write_csv(path: str, run: RunSpec, result: SweepResult) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(render_csv(run, result))
