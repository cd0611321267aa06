"""Frequency-direction spreading: complex rotation matrices and interleaving.

Spreading each user's symbol across all subcarriers of its subblock with an
orthonormal complex rotation matrix (CRM) gives every entry a stake in every
subcarrier, so a deep fade on one subcarrier no longer erases a symbol.  A
block interleaver then pushes the subblock's carriers far apart in the full
OFDM grid so their fades decorrelate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvalidDimensionsError


@dataclass(frozen=True)
class CrmMatrix:
    order: int
    angle: float
    matrix: np.ndarray  # complex128, (order, order)

    @property
    def is_identity(self) -> bool:
        return bool(np.array_equal(self.matrix, np.eye(self.order)))


def build_crm(order: int, angle: float) -> CrmMatrix:
    """Build the orthonormal complex rotation matrix of the given order.

    Base case (order 2):

        [[ e^{j*phi},  j*e^{-j*phi}],
         [ j*e^{j*phi},   e^{-j*phi}]] / sqrt(2)

    Doubling step: A_2M = [[A_M, A_M], [A_M, -A_M]] / sqrt(2).  The sqrt(2)
    per doubling is the unique positive scale that keeps columns unit norm.
    """
    if order < 2 or (order & (order - 1)) != 0:
        raise InvalidDimensionsError(f"CRM order must be a power of two >= 2, got {order}")
    e_p = np.exp(1j * angle)
    e_m = np.exp(-1j * angle)
    a = np.array([[e_p, 1j * e_m], [1j * e_p, e_m]]) / np.sqrt(2.0)
    while a.shape[0] < order:
        a = np.block([[a, a], [a, -a]]) / np.sqrt(2.0)
    return CrmMatrix(order=order, angle=angle, matrix=a)


def identity_crm(order: int) -> CrmMatrix:
    """Degenerate no-spreading matrix so the detector path stays uniform."""
    if order < 1:
        raise InvalidDimensionsError(f"CRM order must be >= 1, got {order}")
    return CrmMatrix(order=order, angle=0.0, matrix=np.eye(order, dtype=np.complex128))


def crm_for(cfg) -> CrmMatrix:
    """The spreading matrix a config calls for (identity when disabled)."""
    if cfg.crm_enabled:
        return build_crm(cfg.n_f, cfg.crm_angle)
    return identity_crm(cfg.n_f)


def _split_blocks(sym: np.ndarray, order: int) -> np.ndarray:
    sym = np.asarray(sym, dtype=np.complex128).ravel()
    if sym.size % order != 0:
        raise DimensionMismatchError(
            f"vector length {sym.size} is not a multiple of the CRM order {order}"
        )
    return sym.reshape(order, -1)


def apply_crm(sym: np.ndarray, crm: CrmMatrix) -> np.ndarray:
    """Spread a symbol vector: block i of the output is sum_j A[i,j] * block j."""
    blocks = _split_blocks(sym, crm.order)
    return (crm.matrix @ blocks).ravel()


def remove_crm(sym: np.ndarray, crm: CrmMatrix) -> np.ndarray:
    """Undo apply_crm (multiply by the conjugate transpose)."""
    blocks = _split_blocks(sym, crm.order)
    return (crm.matrix.conj().T @ blocks).ravel()


def effective_channel(eq, crm: CrmMatrix) -> np.ndarray:
    """Compose the equivalent single-user channel with the spreading matrix.

    With the equivalent channel block diagonal, block (i, j) of the result is
    A[i, j] times the i-th diagonal block.
    """
    blocks = eq.blocks
    n_f = len(blocks)
    if crm.order != n_f:
        raise DimensionMismatchError(f"CRM order {crm.order} != {n_f} channel blocks")
    n_rx, n_s = blocks[0].shape
    out = np.zeros((n_rx * n_f, n_s * n_f), dtype=np.complex128)
    for i in range(n_f):
        for j in range(n_f):
            a = crm.matrix[i, j]
            if a != 0:
                out[i * n_rx : (i + 1) * n_rx, j * n_s : (j + 1) * n_s] = a * blocks[i]
    return out


@dataclass(frozen=True)
class InterleaverMap:
    """Block interleaver over the full grid: (group, position) -> subcarrier."""

    n_total: int
    group_size: int
    forward: np.ndarray  # int64 permutation of 0..n_total-1, group-major order

    @property
    def n_groups(self) -> int:
        return self.n_total // self.group_size

    def positions(self, group: int) -> np.ndarray:
        """Physical subcarriers carrying the given group, in position order."""
        return self.forward[group * self.group_size : (group + 1) * self.group_size]


def build_interleaver(n_total: int, group_size: int) -> InterleaverMap:
    """Spread each group's positions n_total/group_size subcarriers apart."""
    if n_total < 1 or group_size < 1 or n_total % group_size != 0:
        raise InvalidDimensionsError(
            f"interleaver requires group_size | n_total, got {n_total}, {group_size}"
        )
    stride = n_total // group_size
    groups = np.arange(stride).repeat(group_size)
    positions = np.tile(np.arange(group_size), stride)
    forward = positions * stride + groups
    return InterleaverMap(n_total=n_total, group_size=group_size, forward=forward)
