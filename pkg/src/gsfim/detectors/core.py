"""Detector front-ends.

Every detector consumes one user's received vector and the dense effective
channel (equivalent single-user channel composed with the spreading matrix),
and returns a DetectionResult whose symbol estimate always has a LUT-valid
support with constellation-valued nonzeros.  The numeric inner loops live in
the selected kernel backend.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .. import complexity, modem
from ..channel import NoiseModel
from ..config import SystemConfig
from ..errors import DimensionMismatchError, InvalidModeError, SearchSpaceTooLargeError
from ..modem import Constellation, Luts
from . import _backend

# Regularizer floor substituted at sigma = 0 so fixed-support solves stay PD.
REG_FLOOR = 1e-12


@dataclass(frozen=True)
class SupportSet:
    """All addressable joint supports as index rows into the symbol vector.

    Row order matches the integer value of the index-bit fields: subcarrier
    LUT index is the most significant digit, then one antenna LUT digit per
    active subcarrier (last one fastest).
    """

    indices: np.ndarray  # (n_comb, n_a * n_af) int32, ascending within rows
    luts: Luts

    @property
    def count(self) -> int:
        return len(self.indices)


def build_support_set(cfg: SystemConfig, luts: Luts) -> SupportSet:
    ant = luts.antenna.patterns
    rows = []
    for sub_pattern in luts.subcarrier.patterns:
        for combo in itertools.product(range(len(ant)), repeat=cfg.n_af):
            row = []
            for f, a_idx in zip(sub_pattern, combo):
                row.extend(f * cfg.n_s + a for a in ant[a_idx])
            rows.append(row)
    indices = np.asarray(rows, dtype=np.int32).reshape(len(rows), cfg.n_a * cfg.n_af)
    return SupportSet(indices=indices, luts=luts)


def _support_fields(cfg: SystemConfig, luts: Luts, pos: int) -> tuple[int, list[int]]:
    """Decode a support-set row position into (subcarrier index, antenna indices)."""
    ab = luts.antenna.index_bits
    ant_indices = []
    for _ in range(cfg.n_af):
        ant_indices.append(pos & ((1 << ab) - 1))
        pos >>= ab
    return pos, ant_indices[::-1]


@dataclass
class DetectionResult:
    """Outcome of one detection: estimate, decoded bits, and bookkeeping.

    ``candidates_examined`` counts detector-specific work units (hypotheses
    for mld, supports for obmmse, admitted tree nodes for smmp, iterations
    across restarts for admm).  ``flops_model`` is the closed-form complexity
    model value, not an instrumented count.
    """

    s_hat: np.ndarray
    bits: np.ndarray
    residual: float
    candidates_examined: int
    iterations: int
    flops_model: float


def _as_kernel_args(y: np.ndarray, h: np.ndarray, n: int) -> tuple[np.ndarray, np.ndarray]:
    y = np.ascontiguousarray(np.asarray(y, dtype=np.complex128).ravel())
    h = np.ascontiguousarray(np.asarray(h, dtype=np.complex128))
    if h.ndim != 2 or h.shape[1] != n or h.shape[0] != y.size:
        raise DimensionMismatchError(
            f"channel {h.shape} inconsistent with y of length {y.size} and symbol length {n}"
        )
    return y, h


def _result(y, h, s_hat, bits, candidates, iterations, flops) -> DetectionResult:
    r = y - h @ s_hat
    return DetectionResult(
        s_hat=s_hat,
        bits=bits,
        residual=float(np.real(np.vdot(r, r))),
        candidates_examined=int(candidates),
        iterations=int(iterations),
        flops_model=float(flops),
    )


def mld(
    y: np.ndarray,
    H_tilde: np.ndarray,
    supports: SupportSet,
    constellation: Constellation,
    cfg: SystemConfig,
) -> DetectionResult:
    """Exhaustive maximum-likelihood detection over all valid symbols."""
    y, h = _as_kernel_args(y, H_tilde, cfg.vec_len)
    k = cfg.n_a * cfg.n_af
    n_hyp = supports.count * len(constellation) ** k
    if n_hyp > cfg.detector_params.mld_max_hypotheses:
        raise SearchSpaceTooLargeError(
            f"{n_hyp} hypotheses exceed detector.mld.max_hypotheses "
            f"({cfg.detector_params.mld_max_hypotheses})"
        )
    pos, digits, _, examined = _backend.kernels().mld_scan(
        h, y, supports.indices, constellation.points
    )
    sub_idx, ant_indices = _support_fields(cfg, supports.luts, int(pos))
    bits = modem.pack_index_bits(cfg, supports.luts, constellation, sub_idx, ant_indices, digits)
    s_hat = np.zeros(cfg.vec_len, dtype=np.complex128)
    s_hat[supports.indices[pos]] = constellation.points[np.asarray(digits, dtype=np.int64)]
    return _result(y, h, s_hat, bits, examined, 1, complexity.flops_mld(cfg))


def _obmmse_vth(noise: NoiseModel, cfg: SystemConfig) -> float:
    if cfg.detector_params.obmmse_threshold_policy == "paper-literal":
        return 2.0 * cfg.n_rx * noise.sigma2
    return 2.0 * cfg.n_rx * cfg.n_f * noise.sigma2


def ob_mmse_detect(
    y: np.ndarray,
    H_tilde: np.ndarray,
    supports: SupportSet,
    noise: NoiseModel,
    constellation: Constellation,
    cfg: SystemConfig,
    vth: float | None = None,
) -> DetectionResult:
    """Reliability-ordered block-MMSE detection.

    Per-column matched-filter estimates rank every valid support; supports
    are processed in descending reliability, each solved by a regularized
    MMSE restricted to it, stopping early once the residual drops below the
    threshold.
    """
    y, h = _as_kernel_args(y, H_tilde, cfg.vec_len)
    if vth is None:
        vth = _obmmse_vth(noise, cfg)
    reg = max(2.0 * noise.sigma2, REG_FLOOR)
    gram = np.ascontiguousarray(h.conj().T @ h)
    hy = np.ascontiguousarray(h.conj().T @ y)
    col_energy = np.maximum(gram.diagonal().real, 1e-300)
    z = hy / col_energy
    zmag = z.real**2 + z.imag**2
    w = zmag[supports.indices].sum(axis=1)
    order = np.argsort(-w, kind="stable")
    ordered = np.ascontiguousarray(supports.indices[order])
    pos, svals, _, examined = _backend.kernels().obmmse_scan(
        h, y, ordered, constellation.points, reg, float(vth), gram, hy
    )
    sup_pos = int(order[pos])
    sub_idx, ant_indices = _support_fields(cfg, supports.luts, sup_pos)
    payload = constellation.nearest(svals)
    bits = modem.pack_index_bits(cfg, supports.luts, constellation, sub_idx, ant_indices, payload)
    s_hat = np.zeros(cfg.vec_len, dtype=np.complex128)
    s_hat[supports.indices[sup_pos]] = constellation.points[payload]
    return _result(y, h, s_hat, bits, examined, examined, complexity.flops_ob_mmse(cfg))


def smmp_detect(
    y: np.ndarray,
    H_tilde: np.ndarray,
    luts: Luts,
    constellation: Constellation,
    cfg: SystemConfig,
) -> DetectionResult:
    """Multipath matching pursuit with slicing over the structured support.

    The search tree enforces per-subcarrier and active-subcarrier-count
    feasibility but not LUT membership, so the winning candidate is legalized
    by snapping to the nearest valid symbol before demapping.
    """
    y, h = _as_kernel_args(y, H_tilde, cfg.vec_len)
    n_children = cfg.detector_params.smmp_children
    indices, svals, _, admitted = _backend.kernels().smmp_run(
        h, y, cfg.n_s, cfg.n_f, cfg.n_a, cfg.n_af, n_children, constellation.points
    )
    raw = np.zeros(cfg.vec_len, dtype=np.complex128)
    if len(indices):
        raw[np.asarray(indices, dtype=np.int64)] = svals
    bits = modem.hard_demap_noisy(raw, cfg, luts, constellation)
    s_hat = modem.map_bits(bits, cfg, luts, constellation).vec
    return _result(
        y, h, s_hat, bits, admitted, cfg.n_a * cfg.n_af,
        complexity.flops_smmp(cfg, n_children),
    )


def admm_detect(
    y: np.ndarray,
    H_tilde: np.ndarray,
    luts: Luts,
    constellation: Constellation,
    noise: NoiseModel,
    cfg: SystemConfig,
    rng: np.random.Generator | None = None,
) -> DetectionResult:
    """Operator-splitting detection with warm and random restarts.

    One restart is initialized from the MMSE solution, the remainder from
    random draws; the iterate with the smallest objective across restarts
    wins and is legalized before demapping.
    """
    y, h = _as_kernel_args(y, H_tilde, cfg.vec_len)
    p = cfg.detector_params
    n = cfg.vec_len
    rho_sum = p.rho_x + p.rho_r + p.rho_z
    gram = h.conj().T @ h
    phi = np.ascontiguousarray(np.linalg.inv(gram + rho_sum * np.eye(n)))
    hhy = np.ascontiguousarray(h.conj().T @ y)
    reg = max(2.0 * noise.sigma2, REG_FLOOR)
    warm = np.linalg.solve(gram + reg * np.eye(n), hhy)
    ant = luts.antenna.as_array()
    sub = luts.subcarrier.as_array()
    if rng is None:
        rng = np.random.default_rng(0)
    best_f = np.inf
    best_raw = np.zeros(n, dtype=np.complex128)
    for restart in range(p.restarts):
        if restart == 0:
            start = warm
        else:
            start = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2.0)
        start = np.ascontiguousarray(start.astype(np.complex128))
        s_raw, f = _backend.kernels().admm_run(
            h, y, phi, hhy, ant, sub, constellation.points,
            p.rho_x, p.rho_r, p.rho_z, p.admm_iters,
            start, start, start, cfg.n_s, cfg.n_f, reg,
        )
        if f < best_f:
            best_f = f
            best_raw = s_raw
    bits = modem.hard_demap_noisy(best_raw, cfg, luts, constellation)
    s_hat = modem.map_bits(bits, cfg, luts, constellation).vec
    iters = p.admm_iters * p.restarts
    return _result(y, h, s_hat, bits, iters, iters, complexity.flops_admm(cfg, p.admm_iters))


def _per_subcarrier_setup(cfg: SystemConfig, luts: Luts):
    sub_cfg = replace(cfg, n_f=1, n_af=1, crm_enabled=False, total_subcarriers=1)
    sub_luts = Luts(antenna=luts.antenna, subcarrier=modem.build_pattern_lut(1, 1))
    return sub_cfg, sub_luts


def separate_detect(
    y: np.ndarray,
    eq,
    luts: Luts,
    constellation: Constellation,
    noise: NoiseModel,
    cfg: SystemConfig,
    inner: str | None = None,
    rng: np.random.Generator | None = None,
) -> DetectionResult:
    """Two-stage baseline: pick active subcarriers by energy, then detect per
    subcarrier with a single-block detector.

    Only valid without spreading, where the equivalent channel stays block
    diagonal and subcarriers separate.
    """
    if cfg.crm_enabled:
        raise InvalidModeError("separate detection requires crm_enabled = false")
    inner = inner or cfg.detector_params.separate_inner
    y = np.asarray(y, dtype=np.complex128).ravel()
    if y.size != cfg.obs_len:
        raise DimensionMismatchError(f"y has length {y.size}, expected {cfg.obs_len}")
    cols = y.reshape(cfg.n_f, cfg.n_rx)
    col_energy = (cols.real**2 + cols.imag**2).sum(axis=1)
    sub_patterns = luts.subcarrier.as_array()
    chosen = luts.subcarrier.patterns[int(np.argmax(col_energy[sub_patterns].sum(axis=1)))]
    sub_cfg, sub_luts = _per_subcarrier_setup(cfg, luts)
    sub_supports = build_support_set(sub_cfg, sub_luts)
    s_hat = np.zeros(cfg.vec_len, dtype=np.complex128)
    candidates = 0
    iterations = 0
    for f in chosen:
        y_f = y[f * cfg.n_rx : (f + 1) * cfg.n_rx]
        h_f = eq.blocks[f]
        if inner == "mld":
            det = mld(y_f, h_f, sub_supports, constellation, sub_cfg)
        elif inner == "obmmse":
            det = ob_mmse_detect(y_f, h_f, sub_supports, noise, constellation, sub_cfg)
        elif inner == "smmp":
            det = smmp_detect(y_f, h_f, sub_luts, constellation, sub_cfg)
        elif inner == "admm":
            det = admm_detect(y_f, h_f, sub_luts, constellation, noise, sub_cfg, rng=rng)
        else:
            raise InvalidModeError(f"unknown inner detector {inner!r}")
        s_hat[f * cfg.n_s : (f + 1) * cfg.n_s] = det.s_hat
        candidates += det.candidates_examined
        iterations += det.iterations
    bits = modem.hard_demap_noisy(s_hat, cfg, luts, constellation)
    s_hat = modem.map_bits(bits, cfg, luts, constellation).vec
    flops = cfg.n_af * complexity.flops_for(sub_cfg, inner)
    return _result(y, eq.assembled, s_hat, bits, candidates, iterations, flops)
