"""Scenario configuration: dimensions, constellation size, spreading, detector knobs."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError

SUPPORTED_QAM_ORDERS = (2, 4, 16, 64, 256)

DETECTOR_KINDS = ("mld", "obmmse", "smmp", "admm", "separate")


@dataclass(frozen=True)
class DetectorParams:
    """Tuning knobs for the detection algorithms.

    ``obmmse_threshold_policy`` selects how the early-termination threshold is
    derived from the noise level: ``scaled`` uses the expected noise energy of
    the full received vector (2*n_rx*n_f*sigma2), ``paper-literal`` uses
    2*n_rx*sigma2.
    """

    rho_x: float = 1.0
    rho_r: float = 1.0
    rho_z: float = 1.0
    admm_iters: int = 30
    restarts: int = 3
    smmp_children: int = 1
    obmmse_threshold_policy: str = "scaled"
    mld_max_hypotheses: int = 2**24
    table_iv_literal: bool = False
    separate_inner: str = "obmmse"

    def validate(self) -> None:
        if self.rho_x <= 0 or self.rho_r <= 0 or self.rho_z <= 0:
            raise ConfigError("detector.admm penalty parameters must be positive")
        if self.admm_iters < 1:
            raise ConfigError("detector.admm.q must be >= 1")
        if self.restarts < 1:
            raise ConfigError("detector.admm.restarts must be >= 1")
        if self.smmp_children < 1:
            raise ConfigError("detector.smmp.l must be >= 1")
        if self.obmmse_threshold_policy not in ("scaled", "paper-literal"):
            raise ConfigError(
                "detector.obmmse.threshold_policy must be 'scaled' or 'paper-literal'"
            )
        if self.mld_max_hypotheses < 1:
            raise ConfigError("detector.mld.max_hypotheses must be >= 1")
        if self.separate_inner not in ("mld", "obmmse", "smmp", "admm"):
            raise ConfigError("detector.separate.inner must be one of mld|obmmse|smmp|admm")


@dataclass(frozen=True)
class SystemConfig:
    """All scenario dimensions and parameters for one simulated downlink.

    Dimensions follow the usual multiuser MIMO-OFDM conventions: ``n_tx``
    base-station antennas serve ``n_users`` receivers with ``n_rx`` antennas
    each; every user gets ``n_s`` virtual antennas of which ``n_a`` are active,
    over subcarrier subblocks of size ``n_f`` with ``n_af`` active subcarriers.
    """

    n_users: int
    n_tx: int
    n_rx: int
    n_s: int
    n_a: int
    n_f: int
    n_af: int
    mod_order: int
    crm_angle: float = math.pi / 6
    crm_enabled: bool = True
    total_subcarriers: int = 0  # 0 means "one subblock" (= n_f)
    snr_grid: tuple[float, ...] = ()
    seed: int = 0
    detector_params: DetectorParams = field(default_factory=DetectorParams)

    def __post_init__(self):
        if self.total_subcarriers == 0:
            object.__setattr__(self, "total_subcarriers", self.n_f)

    @property
    def vec_len(self) -> int:
        """Length of one space-frequency symbol vector (n_s * n_f)."""
        return self.n_s * self.n_f

    @property
    def obs_len(self) -> int:
        """Length of one user's received vector (n_rx * n_f)."""
        return self.n_rx * self.n_f

    def validate(self) -> None:
        """Raise ConfigError on any violated scenario invariant."""
        for name in ("n_users", "n_tx", "n_rx", "n_s", "n_a", "n_f", "n_af"):
            if getattr(self, name) < 1:
                raise ConfigError(f"system.{name} must be >= 1")
        if not (1 <= self.n_a <= self.n_s):
            raise ConfigError("system.n_a must satisfy 1 <= n_a <= n_s")
        if not (1 <= self.n_af <= self.n_f):
            raise ConfigError("system.n_af must satisfy 1 <= n_af <= n_f")
        if self.crm_enabled and (self.n_f & (self.n_f - 1)) != 0:
            raise ConfigError("system.n_f must be a power of two when crm_enabled")
        if self.n_tx < (self.n_users - 1) * self.n_rx + self.n_s:
            raise ConfigError(
                "system.n_tx must be >= (n_users - 1) * n_rx + n_s "
                f"(got {self.n_tx} < {(self.n_users - 1) * self.n_rx + self.n_s})"
            )
        if self.mod_order not in SUPPORTED_QAM_ORDERS:
            raise ConfigError(
                f"system.mod_order must be one of {SUPPORTED_QAM_ORDERS}, got {self.mod_order}"
            )
        if self.total_subcarriers % self.n_f != 0:
            raise ConfigError("system.total_subcarriers must be a multiple of n_f")
        self.detector_params.validate()
