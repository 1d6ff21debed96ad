"""Numbers carrying an estimated absolute error and a monitored relative error.

Every ``Fpe`` holds a T-bit value ``x``, a T_e-bit error estimate ``ee`` (so
the true value is approximately ``x + ee``) and ``re_m``, the largest
generalized relative error seen anywhere in the value's history.

Each operation computes the exact result in a 2T-bit accumulator, splits off
the rounding error ``le = w - z``, adds the first-order propagated error ``pe``
of the operands, and rounds ``pe + le`` once to T_e bits.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Mapping, NamedTuple

from .softfp import (
    ADD,
    DIV,
    MUL,
    SUB,
    DomainError,
    PFloat,
    exact_op,
    from_decimal,
    round_dyadic,
    round_split,
    sqrt_exact,
    to_report,
)

K_MODE = "k"
C_MODE = "c"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EEConfig:
    """Constants of the error-estimation method.

    ``eps`` is always derived as ``rthd * eez``. With ``track_re_m`` off the
    record keeps only the relative error of the latest operation (the couple
    form); threshold signals are still raised.
    """

    t_bits: int = 31
    te_bits: int = 21
    rthd: float = 1e-3
    eez: float = 1e-6
    qeps: float = 3e-10
    k_min: float = 0.0
    k_max: float = 2.0
    c_min: float = 0.0
    c_max: float = 2.0
    track_re_m: bool = True

    def __post_init__(self):
        if not 2 <= self.te_bits <= self.t_bits:
            raise ConfigError(f"need 2 <= te_bits <= t_bits, got te_bits={self.te_bits}, t_bits={self.t_bits}")
        if not 0 < self.rthd < 1:
            raise ConfigError(f"rthd must lie in (0, 1), got {self.rthd}")
        if not self.eez > 0:
            raise ConfigError(f"eez must be positive, got {self.eez}")
        if not self.qeps > 0:
            raise ConfigError(f"qeps must be positive, got {self.qeps}")
        if not (self.k_min <= 0 and self.k_max >= 1):
            raise ConfigError(f"k interval must satisfy k_min <= 0 and k_max >= 1, got [{self.k_min}, {self.k_max}]")
        if not self.c_min <= self.c_max:
            raise ConfigError(f"c interval is empty: [{self.c_min}, {self.c_max}]")

    @property
    def eps(self) -> float:
        return self.rthd * self.eez

    @property
    def q(self) -> float:
        return self.qeps / self.eps

    def replace(self, **changes) -> EEConfig:
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_mapping(cls, values: Mapping[str, object], base: EEConfig | None = None) -> EEConfig:
        """Build a config from string or typed values, overriding ``base``."""
        fields = {f.name: f.type for f in dataclasses.fields(cls)}
        changes = {}
        for key, raw in values.items():
            name = key.strip().replace("-", "_")
            if name not in fields:
                raise ConfigError(f"unknown configuration key {key!r}")
            try:
                if name in ("t_bits", "te_bits"):
                    changes[name] = int(raw)
                elif name == "track_re_m":
                    changes[name] = raw if isinstance(raw, bool) else str(raw).strip().lower() in ("1", "true", "yes", "on")
                else:
                    changes[name] = float(raw)
            except ValueError:
                raise ConfigError(f"bad value for {name}: {raw!r}") from None
        return dataclasses.replace(base or cls(), **changes)

    @classmethod
    def from_file(cls, path: str | Path, base: EEConfig | None = None) -> EEConfig:
        """Read ``key = value`` lines; ``#`` starts a comment."""
        values = {}
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            for sep in ("=", ":"):
                key, found, value = line.partition(sep)
                if found:
                    break
            else:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            values[key.strip()] = value.strip()
        return cls.from_mapping(values, base)


DEFAULT_CONFIG = EEConfig()


class ThresholdSignal(NamedTuple):
    """Raised-flag record: an operation left ``re_m >= rthd``."""

    op: str
    re: float
    rthd: float


class Interval(NamedTuple):
    lo: Fraction
    hi: Fraction

    def __contains__(self, value) -> bool:
        return self.lo <= value <= self.hi

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    def overlaps(self, other: Interval) -> bool:
        """Positive-length intersection; a degenerate interval lying inside
        the other also counts. Intervals that only touch do not overlap."""
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo < hi:
            return True
        return lo == hi and (self.lo == self.hi or other.lo == other.hi)


class Fpe:
    """Value, estimated error and max relative error under one config.

    ``signal`` is set on results whose ``re_m`` reached the threshold; the
    value is still returned and the caller decides what to do with it.
    """

    __slots__ = ("x", "ee", "re_m", "cfg", "signal")

    def __init__(self, x: PFloat, ee: PFloat, re_m: float, cfg: EEConfig = DEFAULT_CONFIG, signal: ThresholdSignal | None = None):
        self.x = x
        self.ee = ee
        self.re_m = re_m
        self.cfg = cfg
        self.signal = signal

    @classmethod
    def exact(cls, x: PFloat, cfg: EEConfig = DEFAULT_CONFIG) -> Fpe:
        """A value known to be error free."""
        if x.precision != cfg.t_bits:
            x = x.with_precision(cfg.t_bits)
        return cls(x, PFloat.zero(cfg.te_bits), 0.0, cfg)

    def __repr__(self) -> str:
        return f"Fpe(x={to_report(self.x)}, ee={to_report(self.ee)}, re_m={self.re_m!r})"

    def __neg__(self) -> Fpe:
        return Fpe(-self.x, -self.ee, self.re_m, self.cfg, self.signal)

    def __add__(self, other: Fpe) -> Fpe:
        return fpe_add(self, other, self.cfg)

    def __sub__(self, other: Fpe) -> Fpe:
        return fpe_sub(self, other, self.cfg)

    def __mul__(self, other: Fpe) -> Fpe:
        return fpe_mul(self, other, self.cfg)

    def __truediv__(self, other: Fpe) -> Fpe:
        return fpe_div(self, other, self.cfg)

    def sqrt(self) -> Fpe:
        return fpe_sqrt(self, self.cfg)

    def is_singular(self, mode: str = K_MODE) -> bool:
        return contains_zero(self, self.cfg, mode)

    def true_value_estimate(self) -> Fraction:
        return self.x.to_fraction() + self.ee.to_fraction()


def rel_err(x: PFloat, ee: PFloat, cfg: EEConfig = DEFAULT_CONFIG) -> float:
    """Generalized relative error ``min(|ee/x|, |x + ee| / EEZ)``."""
    if ee.significand == 0:
        # |ee/x| is 0 for x != 0; both branches are 0 for x == 0.
        return 0.0
    n_e, q_e = ee.sign * ee.significand, ee.exponent - ee.precision
    n_x, q_x = x.sign * x.significand, x.exponent - x.precision
    if q_x >= q_e:
        total = abs((n_x << (q_x - q_e)) + n_e)
        near_zero = math.ldexp(total, q_e) / cfg.eez
    else:
        total = abs(n_x + (n_e << (q_e - q_x)))
        near_zero = math.ldexp(total, q_x) / cfg.eez
    if n_x == 0:
        return near_zero
    relative = math.ldexp(ee.significand / x.significand, q_e - q_x)
    return relative if relative < near_zero else near_zero


def _wide_quotient(n: int, q: int, d: int, qd: int, bits: int) -> tuple[int, int]:
    """``n*2**q / (d*2**qd)`` truncated to at least ``bits`` bits, the dropped
    remainder jammed into the last bit so later rounding stays faithful."""
    if n == 0:
        return 0, 0
    sign = -1 if (n < 0) != (d < 0) else 1
    n, d = abs(n), abs(d)
    shift = max(0, bits + 1 + d.bit_length() - n.bit_length())
    quotient, remainder = divmod(n << shift, d)
    if remainder:
        quotient |= 1
    return sign * quotient, q - qd - shift


def _add_dyadic(n1: int, q1: int, n2: int, q2: int) -> tuple[int, int]:
    if n1 == 0:
        return n2, q2
    if n2 == 0:
        return n1, q1
    if q1 >= q2:
        return (n1 << (q1 - q2)) + n2, q2
    return n1 + (n2 << (q2 - q1)), q1


def _finish(op: str, z: PFloat, le: PFloat, pe_n: int, pe_q: int, parent_re_m: float, cfg: EEConfig) -> Fpe:
    n, q = _add_dyadic(pe_n, pe_q, le.sign * le.significand, le.exponent - le.precision)
    ee = round_dyadic(n, q, cfg.te_bits)
    re = rel_err(z, ee, cfg)
    re_m = (parent_re_m if parent_re_m > re else re) if cfg.track_re_m else re
    signal = ThresholdSignal(op, re_m, cfg.rthd) if re_m >= cfg.rthd else None
    return Fpe(z, ee, re_m, cfg, signal)


def _check(a: Fpe, cfg: EEConfig) -> None:
    if a.x.precision != cfg.t_bits or a.ee.precision != cfg.te_bits:
        raise ValueError(
            f"operand precision ({a.x.precision}, {a.ee.precision}) does not match config "
            f"({cfg.t_bits}, {cfg.te_bits})"
        )


def _add_sub(a: Fpe, b: Fpe, cfg: EEConfig, op: str) -> Fpe:
    _check(a, cfg)
    _check(b, cfg)
    z, le = round_split(exact_op(a.x, b.x, op))
    ea, eb = a.ee, b.ee
    nb = eb.sign * eb.significand
    pe_n, pe_q = _add_dyadic(
        ea.sign * ea.significand, ea.exponent - ea.precision,
        nb if op == ADD else -nb, eb.exponent - eb.precision,
    )
    return _finish(op, z, le, pe_n, pe_q, max(a.re_m, b.re_m), cfg)


def fpe_add(a: Fpe, b: Fpe, cfg: EEConfig = DEFAULT_CONFIG) -> Fpe:
    """Sum; the propagated error ``ea + eb`` is exact."""
    return _add_sub(a, b, cfg, ADD)


def fpe_sub(a: Fpe, b: Fpe, cfg: EEConfig = DEFAULT_CONFIG) -> Fpe:
    return _add_sub(a, b, cfg, SUB)


def fpe_mul(a: Fpe, b: Fpe, cfg: EEConfig = DEFAULT_CONFIG) -> Fpe:
    """Product; ``pe = y*ex + x*ey`` evaluated exactly."""
    _check(a, cfg)
    _check(b, cfg)
    z, le = round_split(exact_op(a.x, b.x, MUL))
    xa, xb, ea, eb = a.x, b.x, a.ee, b.ee
    pe_n, pe_q = _add_dyadic(
        xb.sign * xb.significand * ea.sign * ea.significand,
        xb.exponent - xb.precision + ea.exponent - ea.precision,
        xa.sign * xa.significand * eb.sign * eb.significand,
        xa.exponent - xa.precision + eb.exponent - eb.precision,
    )
    return _finish(MUL, z, le, pe_n, pe_q, max(a.re_m, b.re_m), cfg)


def fpe_div(a: Fpe, b: Fpe, cfg: EEConfig = DEFAULT_CONFIG) -> Fpe:
    """Quotient; ``pe = (ex - z*ey) / y`` with z the rounded quotient."""
    _check(a, cfg)
    _check(b, cfg)
    if b.x.is_zero:
        raise ZeroDivisionError("fpe division by a zero value")
    z, le = round_split(exact_op(a.x, b.x, DIV))
    ea, eb = a.ee, b.ee
    num_n, num_q = _add_dyadic(
        ea.sign * ea.significand, ea.exponent - ea.precision,
        -(z.sign * z.significand * eb.sign * eb.significand),
        z.exponent - z.precision + eb.exponent - eb.precision,
    )
    pe_n, pe_q = _wide_quotient(num_n, num_q, *b.x.dyadic(), _pe_bits(cfg))
    return _finish(DIV, z, le, pe_n, pe_q, max(a.re_m, b.re_m), cfg)


def fpe_sqrt(a: Fpe, cfg: EEConfig = DEFAULT_CONFIG) -> Fpe:
    """Square root; ``pe = ex / (2 z)`` with z the rounded root."""
    _check(a, cfg)
    if a.x.sign < 0 and not a.x.is_zero:
        raise DomainError("square root of a negative fpe value")
    z, le = round_split(sqrt_exact(a.x))
    if z.is_zero:
        if not a.ee.is_zero:
            raise DomainError("error propagation through sqrt at zero is unbounded")
        return _finish("sqrt", z, le, 0, 0, a.re_m, cfg)
    zn, zq = z.dyadic()
    pe_n, pe_q = _wide_quotient(*a.ee.dyadic(), 2 * zn, zq, _pe_bits(cfg))
    return _finish("sqrt", z, le, pe_n, pe_q, a.re_m, cfg)


def _pe_bits(cfg: EEConfig) -> int:
    # at least twice the error precision, and enough to sit below le
    return 2 * max(cfg.t_bits, cfg.te_bits) + 2


def fpe_literal(text: str, cfg: EEConfig = DEFAULT_CONFIG) -> Fpe:
    """Initialize from decimal text; ``ee`` is the conversion error."""
    x, conv_err = from_decimal(text, cfg.t_bits, cfg.te_bits)
    re = rel_err(x, conv_err, cfg)
    signal = ThresholdSignal("literal", re, cfg.rthd) if re >= cfg.rthd else None
    return Fpe(x, conv_err, re, cfg, signal)


def _k_bounds(cfg: EEConfig, mode: str) -> tuple[Fraction, Fraction]:
    if mode == K_MODE:
        return Fraction(cfg.k_min), Fraction(cfg.k_max)
    if mode == C_MODE:
        return Fraction(cfg.c_min), Fraction(cfg.c_max)
    raise ValueError(f"mode must be 'k' or 'c', got {mode!r}")


def interval_k(a: Fpe, cfg: EEConfig | None = None) -> Interval:
    """``[x + k_min*ee, x + k_max*ee]``, reversed when ee < 0."""
    cfg = cfg or a.cfg
    lo_k, hi_k = _k_bounds(cfg, K_MODE)
    x, ee = a.x.to_fraction(), a.ee.to_fraction()
    p, q = x + lo_k * ee, x + hi_k * ee
    return Interval(p, q) if p <= q else Interval(q, p)


def interval_c(a: Fpe, cfg: EEConfig | None = None) -> Interval:
    """``[x + c_min*ce, x + c_max*ce]`` with ``ce = sign(ee) * (|ee| + QEPS)``
    and sign(0) = +1, so the width never drops below ``QEPS*(c_max-c_min)``."""
    cfg = cfg or a.cfg
    lo_c, hi_c = _k_bounds(cfg, C_MODE)
    x, ee = a.x.to_fraction(), a.ee.to_fraction()
    ce = abs(ee) + Fraction(cfg.qeps)
    if ee < 0:
        ce = -ce
    p, q = x + lo_c * ce, x + hi_c * ce
    return Interval(p, q) if p <= q else Interval(q, p)


def confidence_interval(a: Fpe, cfg: EEConfig | None = None, mode: str = K_MODE) -> Interval:
    if mode == K_MODE:
        return interval_k(a, cfg)
    if mode == C_MODE:
        return interval_c(a, cfg)
    raise ValueError(f"mode must be 'k' or 'c', got {mode!r}")


def fpe_equal(a: Fpe, b: Fpe, cfg: EEConfig | None = None, mode: str = K_MODE) -> bool:
    """Whether the confidence intervals of ``a`` and ``b`` overlap."""
    return confidence_interval(a, cfg, mode).overlaps(confidence_interval(b, cfg, mode))


def contains_zero(a: Fpe, cfg: EEConfig | None = None, mode: str = K_MODE) -> bool:
    return 0 in confidence_interval(a, cfg, mode)
