"""Simulated floating point that carries an estimate of its own error."""

from .fpe import (
    C_MODE,
    DEFAULT_CONFIG,
    K_MODE,
    ConfigError,
    EEConfig,
    Fpe,
    Interval,
    ThresholdSignal,
    confidence_interval,
    contains_zero,
    fpe_add,
    fpe_div,
    fpe_equal,
    fpe_literal,
    fpe_mul,
    fpe_sqrt,
    fpe_sub,
    interval_c,
    interval_k,
    rel_err,
)
from .softfp import PFloat, from_decimal, round_split, to_report

__version__ = "0.1.0"

__all__ = [
    "C_MODE", "DEFAULT_CONFIG", "K_MODE", "ConfigError", "EEConfig", "Fpe", "Interval", "PFloat",
    "ThresholdSignal", "confidence_interval", "contains_zero", "fpe_add", "fpe_div", "fpe_equal",
    "fpe_literal", "fpe_mul", "fpe_sqrt", "fpe_sub", "from_decimal", "interval_c", "interval_k",
    "rel_err", "round_split", "to_report",
]
