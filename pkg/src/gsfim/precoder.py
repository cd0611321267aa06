"""Block-diagonalization precoding.

Per subcarrier, each user's precoder is an orthonormal basis of the null
space of the stacked channels of all other users, so their receivers see no
multiuser interference and each link collapses to an equivalent single-user
channel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ChannelSet
from .config import SystemConfig
from .errors import DimensionMismatchError, InsufficientNullSpaceError

# Relative singular-value threshold below which directions count as null space.
RANK_TOL = 1e-10


@dataclass(frozen=True)
class PrecoderSet:
    """Per-user, per-subcarrier precoders, shape (n_users, n_f, n_tx, n_s)."""

    blocks: np.ndarray


@dataclass(frozen=True)
class EquivalentChannel:
    """One user's post-precoding channel: n_f diagonal blocks of size n_rx x n_s."""

    blocks: np.ndarray  # (n_f, n_rx, n_s)

    @property
    def assembled(self) -> np.ndarray:
        """Dense block-diagonal matrix with exact zeros off the blocks."""
        n_f, n_rx, n_s = self.blocks.shape
        out = np.zeros((n_rx * n_f, n_s * n_f), dtype=np.complex128)
        for f in range(n_f):
            out[f * n_rx : (f + 1) * n_rx, f * n_s : (f + 1) * n_s] = self.blocks[f]
        return out


def interference_matrix(channels: ChannelSet, user: int, subcarrier: int) -> np.ndarray:
    """Stack every other user's channel block on one subcarrier (ascending user)."""
    n_users, _, n_rx, n_tx = channels.blocks.shape
    others = [v for v in range(n_users) if v != user]
    if not others:
        return np.zeros((0, n_tx), dtype=np.complex128)
    return np.concatenate([channels.blocks[v, subcarrier] for v in others], axis=0)


def compute_precoder_block(
    channels: ChannelSet, user: int, subcarrier: int, cfg: SystemConfig
) -> np.ndarray:
    """First n_s columns of an orthonormal null-space basis of the interference."""
    interf = interference_matrix(channels, user, subcarrier)
    n_tx = cfg.n_tx
    if interf.shape[0] == 0:
        return np.eye(n_tx, cfg.n_s, dtype=np.complex128)
    _, sv, vh = np.linalg.svd(interf, full_matrices=True)
    rank = int(np.sum(sv > RANK_TOL * sv[0])) if sv.size else 0
    null_dim = n_tx - rank
    if null_dim < cfg.n_s:
        raise InsufficientNullSpaceError(
            f"null space of user {user} interference on subcarrier {subcarrier} has "
            f"dimension {null_dim} < n_s = {cfg.n_s}"
        )
    return vh[rank : rank + cfg.n_s].conj().T


def build_precoders(channels: ChannelSet, cfg: SystemConfig) -> PrecoderSet:
    """Precoder blocks for every (user, subcarrier) pair."""
    out = np.empty((cfg.n_users, cfg.n_f, cfg.n_tx, cfg.n_s), dtype=np.complex128)
    for u in range(cfg.n_users):
        for f in range(cfg.n_f):
            out[u, f] = compute_precoder_block(channels, u, f, cfg)
    return PrecoderSet(blocks=out)


def assemble_precoded_system(
    channels: ChannelSet, precoders: PrecoderSet, cfg: SystemConfig
) -> list[EquivalentChannel]:
    """Each user's equivalent single-user channel blocks H[u,f] @ F[u,f]."""
    if channels.blocks.shape[:2] != precoders.blocks.shape[:2]:
        raise DimensionMismatchError("channel and precoder sets disagree on (users, subcarriers)")
    out = []
    for u in range(cfg.n_users):
        blocks = np.einsum("fij,fjk->fik", channels.blocks[u], precoders.blocks[u])
        out.append(EquivalentChannel(blocks=np.ascontiguousarray(blocks)))
    return out


def transmit(
    precoders: PrecoderSet, symbols: list[np.ndarray], cfg: SystemConfig
) -> np.ndarray:
    """Superimpose all users' precoded symbol vectors, subcarrier block-wise."""
    if len(symbols) != cfg.n_users:
        raise DimensionMismatchError(f"expected {cfg.n_users} symbol vectors, got {len(symbols)}")
    x = np.zeros(cfg.n_tx * cfg.n_f, dtype=np.complex128)
    for u, sym in enumerate(symbols):
        sym = np.asarray(sym, dtype=np.complex128).ravel()
        if sym.size != cfg.vec_len:
            raise DimensionMismatchError(
                f"user {u} symbol has length {sym.size}, expected {cfg.vec_len}"
            )
        for f in range(cfg.n_f):
            x[f * cfg.n_tx : (f + 1) * cfg.n_tx] += (
                precoders.blocks[u, f] @ sym[f * cfg.n_s : (f + 1) * cfg.n_s]
            )
    return x


def apply_channel(channels: ChannelSet, user: int, x: np.ndarray) -> np.ndarray:
    """Propagate a transmit vector to one user (noise not included)."""
    _, n_f, n_rx, n_tx = channels.blocks.shape
    x = np.asarray(x, dtype=np.complex128).ravel()
    if x.size != n_tx * n_f:
        raise DimensionMismatchError(f"transmit vector has length {x.size}, expected {n_tx * n_f}")
    y = np.empty(n_rx * n_f, dtype=np.complex128)
    for f in range(n_f):
        y[f * n_rx : (f + 1) * n_rx] = channels.blocks[user, f] @ x[f * n_tx : (f + 1) * n_tx]
    return y
