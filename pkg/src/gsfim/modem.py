"""Bit mapping for space-frequency index-modulated symbols.

Information bits split three ways: a subcarrier-index field choosing which
``n_af`` of the ``n_f`` subcarriers in a subblock are active, one
antenna-index field per active subcarrier choosing which ``n_a`` of the
``n_s`` virtual antennas carry symbols, and QAM payload bits for the active
positions.  Index fields address small look-up tables of combination
patterns; only the first power-of-two prefix of each table is addressable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .errors import (
    InvalidDimensionsError,
    InvalidSupportError,
    WrongBitCountError,
)

# Pattern tables beyond this size should use combinatorial ranking instead;
# out of scope here, so larger tables are rejected outright.
MAX_LUT_COMBINATIONS = 2**20


def floor_log2(x: int) -> int:
    if x < 1:
        raise InvalidDimensionsError(f"floor_log2 requires a positive integer, got {x}")
    return x.bit_length() - 1


@dataclass(frozen=True)
class PatternLut:
    """Addressable table of size-k index subsets of {0..n-1}.

    ``patterns`` holds the first 2**index_bits subsets in lexicographic order
    of their sorted index tuples.
    """

    n: int
    k: int
    patterns: tuple[tuple[int, ...], ...]
    index_bits: int

    def __len__(self) -> int:
        return len(self.patterns)

    def as_array(self) -> np.ndarray:
        """Patterns as an (entries, k) int32 array."""
        return np.asarray(self.patterns, dtype=np.int32).reshape(len(self.patterns), self.k)


def build_pattern_lut(n: int, k: int) -> PatternLut:
    """Enumerate the addressable combination patterns for k-of-n selection."""
    if k < 1 or k > n:
        raise InvalidDimensionsError(f"pattern LUT requires 1 <= k <= n, got n={n}, k={k}")
    total = math.comb(n, k)
    if total > MAX_LUT_COMBINATIONS:
        raise InvalidDimensionsError(
            f"C({n},{k}) = {total} combinations exceed the LUT guard ({MAX_LUT_COMBINATIONS})"
        )
    index_bits = floor_log2(total)
    keep = 1 << index_bits
    patterns = []
    from itertools import combinations

    for combo in combinations(range(n), k):
        patterns.append(combo)
        if len(patterns) == keep:
            break
    return PatternLut(n=n, k=k, patterns=tuple(patterns), index_bits=index_bits)


@dataclass(frozen=True)
class Luts:
    """The antenna (k=n_a of n_s) and subcarrier (k=n_af of n_f) tables."""

    antenna: PatternLut
    subcarrier: PatternLut


def build_luts(cfg: SystemConfig) -> Luts:
    return Luts(
        antenna=build_pattern_lut(cfg.n_s, cfg.n_a),
        subcarrier=build_pattern_lut(cfg.n_f, cfg.n_af),
    )


@dataclass(frozen=True)
class Constellation:
    """Gray-labelled M-QAM constellation normalized to unit mean energy."""

    points: np.ndarray  # complex128, length M
    bits_per_point: int

    def __len__(self) -> int:
        return len(self.points)

    def nearest(self, values: np.ndarray) -> np.ndarray:
        """Indices of the nearest constellation points to ``values``."""
        v = np.asarray(values, dtype=np.complex128).reshape(-1, 1)
        return np.argmin(np.abs(v - self.points[None, :]) ** 2, axis=1)


def _gray_decode(g: int) -> int:
    b = 0
    while g:
        b ^= g
        g >>= 1
    return b


def make_constellation(mod_order: int) -> Constellation:
    """Build the unit-energy Gray-labelled constellation for mod_order points.

    BPSK maps bit 0 to +1.  Square QAM splits the label into an in-phase field
    (high bits) and quadrature field (low bits), each Gray-decoded to an
    amplitude level, so neighbouring grid points differ in exactly one bit.
    """
    if mod_order == 2:
        points = np.array([1.0 + 0.0j, -1.0 + 0.0j])
        return Constellation(points=points, bits_per_point=1)
    bits = floor_log2(mod_order)
    if mod_order != 1 << bits or bits % 2 != 0:
        raise InvalidDimensionsError(f"unsupported QAM order {mod_order}")
    half = bits // 2
    side = 1 << half
    scale = math.sqrt(2.0 * (side * side - 1) / 3.0)
    points = np.empty(mod_order, dtype=np.complex128)
    for label in range(mod_order):
        i_level = _gray_decode(label >> half)
        q_level = _gray_decode(label & (side - 1))
        points[label] = complex(2 * i_level - side + 1, 2 * q_level - side + 1) / scale
    return Constellation(points=points, bits_per_point=bits)


def bits_per_gsfim_symbol(cfg: SystemConfig) -> int:
    """Information bits carried by one space-frequency symbol per user."""
    ant_bits = floor_log2(math.comb(cfg.n_s, cfg.n_a))
    sub_bits = floor_log2(math.comb(cfg.n_f, cfg.n_af))
    m_bits = floor_log2(cfg.mod_order)
    return cfg.n_af * (ant_bits + cfg.n_a * m_bits) + sub_bits


def n_comb(cfg: SystemConfig) -> int:
    """Number of addressable joint antenna/subcarrier supports."""
    ant_bits = floor_log2(math.comb(cfg.n_s, cfg.n_a))
    sub_bits = floor_log2(math.comb(cfg.n_f, cfg.n_af))
    return 1 << (cfg.n_af * ant_bits + sub_bits)


@dataclass(frozen=True)
class GsfimSymbol:
    """One sparse frequency-domain symbol vector with its structured support."""

    vec: np.ndarray  # complex128, length n_s * n_f
    active_subcarriers: tuple[int, ...]
    antenna_patterns: tuple[tuple[int, ...], ...]  # one per active subcarrier
    payload_symbols: np.ndarray  # complex128, length n_a * n_af


def _bits_to_int(bits: np.ndarray) -> int:
    value = 0
    for b in bits:
        value = (value << 1) | int(b)
    return value


def _int_to_bits(value: int, width: int) -> list[int]:
    return [(value >> (width - 1 - i)) & 1 for i in range(width)]


def _assemble_symbol(
    cfg: SystemConfig,
    luts: Luts,
    sub_idx: int,
    ant_indices: list[int],
    payload: np.ndarray,
) -> GsfimSymbol:
    vec = np.zeros(cfg.vec_len, dtype=np.complex128)
    active = luts.subcarrier.patterns[sub_idx]
    patterns = []
    pos = 0
    for j, f in enumerate(active):
        pattern = luts.antenna.patterns[ant_indices[j]]
        patterns.append(pattern)
        for a in pattern:
            vec[f * cfg.n_s + a] = payload[pos]
            pos += 1
    return GsfimSymbol(
        vec=vec,
        active_subcarriers=active,
        antenna_patterns=tuple(patterns),
        payload_symbols=np.asarray(payload, dtype=np.complex128),
    )


def map_bits(
    bits: np.ndarray, cfg: SystemConfig, luts: Luts, constellation: Constellation
) -> GsfimSymbol:
    """Map one symbol's worth of information bits onto a sparse symbol vector.

    Layout, most significant first: subcarrier-index bits, then per active
    subcarrier (ascending frequency) the antenna-index bits followed by the
    payload bits of its n_a symbols (placed on active antennas in ascending
    order).
    """
    bits = np.asarray(bits).ravel()
    expected = bits_per_gsfim_symbol(cfg)
    if bits.size != expected:
        raise WrongBitCountError(f"expected {expected} bits, got {bits.size}")
    ab = luts.antenna.index_bits
    sb = luts.subcarrier.index_bits
    mb = constellation.bits_per_point
    sub_idx = _bits_to_int(bits[:sb])
    off = sb
    ant_indices = []
    payload = np.empty(cfg.n_a * cfg.n_af, dtype=np.complex128)
    pos = 0
    for _ in range(cfg.n_af):
        ant_indices.append(_bits_to_int(bits[off : off + ab]))
        off += ab
        for _ in range(cfg.n_a):
            q = _bits_to_int(bits[off : off + mb])
            off += mb
            payload[pos] = constellation.points[q]
            pos += 1
    return _assemble_symbol(cfg, luts, sub_idx, ant_indices, payload)


def pack_index_bits(
    cfg: SystemConfig,
    luts: Luts,
    constellation: Constellation,
    sub_idx: int,
    ant_indices: list[int],
    payload_indices: np.ndarray,
) -> np.ndarray:
    """Assemble the bit vector for explicit LUT/constellation indices.

    Payload indices run per active subcarrier, per active antenna, matching
    the map_bits layout.
    """
    bits = _int_to_bits(sub_idx, luts.subcarrier.index_bits)
    mb = constellation.bits_per_point
    pos = 0
    for j in range(cfg.n_af):
        bits += _int_to_bits(ant_indices[j], luts.antenna.index_bits)
        for _ in range(cfg.n_a):
            bits += _int_to_bits(int(payload_indices[pos]), mb)
            pos += 1
    return np.asarray(bits, dtype=np.uint8)


def _support_of(vec: np.ndarray, cfg: SystemConfig) -> tuple[tuple[int, ...], dict[int, tuple[int, ...]]]:
    nz = np.flatnonzero(vec)
    blocks: dict[int, list[int]] = {}
    for idx in nz:
        blocks.setdefault(int(idx) // cfg.n_s, []).append(int(idx) % cfg.n_s)
    active = tuple(sorted(blocks))
    return active, {f: tuple(sorted(v)) for f, v in blocks.items()}


def demap_symbol(
    sym: GsfimSymbol, cfg: SystemConfig, luts: Luts, constellation: Constellation
) -> np.ndarray:
    """Recover the bit vector of a structurally valid symbol (inverse of map_bits)."""
    active, per_block = _support_of(sym.vec, cfg)
    try:
        sub_idx = luts.subcarrier.patterns.index(active)
    except ValueError:
        raise InvalidSupportError(f"active subcarriers {active} not in the subcarrier LUT")
    bits: list[int] = _int_to_bits(sub_idx, luts.subcarrier.index_bits)
    mb = constellation.bits_per_point
    for f in active:
        pattern = per_block[f]
        try:
            ant_idx = luts.antenna.patterns.index(pattern)
        except ValueError:
            raise InvalidSupportError(
                f"antenna pattern {pattern} on subcarrier {f} not in the antenna LUT"
            )
        bits += _int_to_bits(ant_idx, luts.antenna.index_bits)
        for a in pattern:
            q = int(constellation.nearest(sym.vec[f * cfg.n_s + a])[0])
            bits += _int_to_bits(q, mb)
    return np.asarray(bits, dtype=np.uint8)


def hard_demap_noisy(
    s_hat: np.ndarray, cfg: SystemConfig, luts: Luts, constellation: Constellation
) -> np.ndarray:
    """Demap an arbitrary vector by snapping it to the nearest valid symbol.

    The valid support maximizing captured energy is selected (ties resolved
    toward the lowest LUT indices), payload entries are sliced to the nearest
    constellation point, and the result is demapped.  Total on any input of
    the right length.
    """
    s_hat = np.asarray(s_hat, dtype=np.complex128).ravel()
    if s_hat.size != cfg.vec_len:
        raise WrongBitCountError(f"expected vector of length {cfg.vec_len}, got {s_hat.size}")
    energy = np.abs(s_hat.reshape(cfg.n_f, cfg.n_s)) ** 2
    ant = luts.antenna.as_array()
    # Best antenna pattern per block; argmax keeps the lowest index on ties.
    per_block = energy[:, ant].sum(axis=2)  # (n_f, n_ant_patterns)
    best_ant = np.argmax(per_block, axis=1)
    best_ant_energy = per_block[np.arange(cfg.n_f), best_ant]
    sub = luts.subcarrier.as_array()
    totals = best_ant_energy[sub].sum(axis=1)
    sub_idx = int(np.argmax(totals))
    active = luts.subcarrier.patterns[sub_idx]
    payload = np.empty(cfg.n_a * cfg.n_af, dtype=np.complex128)
    ant_indices = []
    pos = 0
    for f in active:
        ant_idx = int(best_ant[f])
        ant_indices.append(ant_idx)
        for a in luts.antenna.patterns[ant_idx]:
            q = int(constellation.nearest(s_hat[f * cfg.n_s + a])[0])
            payload[pos] = constellation.points[q]
            pos += 1
    sym = _assemble_symbol(cfg, luts, sub_idx, ant_indices, payload)
    return demap_symbol(sym, cfg, luts, constellation)


def snap_to_symbol(
    s_hat: np.ndarray, cfg: SystemConfig, luts: Luts, constellation: Constellation
) -> GsfimSymbol:
    """Nearest valid symbol used by hard_demap_noisy, returned as a symbol."""
    bits = hard_demap_noisy(s_hat, cfg, luts, constellation)
    return map_bits(bits, cfg, luts, constellation)
