"""Detection algorithms for space-frequency index-modulated symbols."""

from ._backend import active_backend, available_backends, use_backend
from .core import (
    DetectionResult,
    SupportSet,
    admm_detect,
    build_support_set,
    mld,
    ob_mmse_detect,
    separate_detect,
    smmp_detect,
)

__all__ = [
    "DetectionResult",
    "SupportSet",
    "build_support_set",
    "mld",
    "ob_mmse_detect",
    "smmp_detect",
    "admm_detect",
    "separate_detect",
    "use_backend",
    "active_backend",
    "available_backends",
]
