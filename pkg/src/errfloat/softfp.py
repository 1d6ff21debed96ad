"""Parametric-precision binary floating point on Python integers.

A nonzero ``PFloat`` of precision P is ``sign * 0.b1...bP * 2**exponent`` with
``b1 == 1``; the significand is stored as the P-bit integer ``b1...bP``.
Operations first produce an exact (or 2P-bit truncated) ``Accumulator`` and
then split it into the rounded value and the local rounding error.

No subnormals, infinities or NaNs are modeled: leaving the exponent range or
dividing by zero raises.
"""

from __future__ import annotations

import math
from fractions import Fraction

# Fraction-form exponent bounds, equivalent to the binary64 normal range.
EXP_MIN = -1021
EXP_MAX = 1024

ADD, SUB, MUL, DIV = "add", "sub", "mul", "div"
_OPS = (ADD, SUB, MUL, DIV)


class SoftFloatError(ArithmeticError):
    pass


class ExponentRangeError(SoftFloatError):
    pass


class DomainError(SoftFloatError, ValueError):
    pass


def _check_exponent(exponent: int) -> int:
    if exponent < EXP_MIN or exponent > EXP_MAX:
        raise ExponentRangeError(f"exponent {exponent} outside [{EXP_MIN}, {EXP_MAX}]")
    return exponent


class PFloat:
    """Immutable simulated floating-point number of fixed precision.

    Arithmetic operators round to nearest (ties away from zero) at the
    precision of the left operand; they are used for reference computations
    where no error tracking is wanted.
    """

    __slots__ = ("sign", "exponent", "significand", "precision")

    def __init__(self, sign: int, exponent: int, significand: int, precision: int):
        if significand and significand >> (precision - 1) != 1:
            raise ValueError(f"significand {significand:#b} is not a normalized {precision}-bit fraction")
        self.sign = sign
        self.exponent = exponent
        self.significand = significand
        self.precision = precision

    @classmethod
    def zero(cls, precision: int) -> PFloat:
        return cls(1, 0, 0, precision)

    @classmethod
    def from_int(cls, value: int, precision: int) -> PFloat:
        return round_dyadic(value, 0, precision)

    @property
    def is_zero(self) -> bool:
        return self.significand == 0

    @property
    def ulp_exponent(self) -> int:
        """Exponent of the last significand bit: value == n * 2**ulp_exponent."""
        return self.exponent - self.precision

    def dyadic(self) -> tuple[int, int]:
        """Return ``(n, q)`` with ``self == n * 2**q`` exactly."""
        return self.sign * self.significand, self.exponent - self.precision

    def to_fraction(self) -> Fraction:
        n, q = self.dyadic()
        return Fraction(n << q) if q >= 0 else Fraction(n, 1 << -q)

    def __float__(self) -> float:
        n, q = self.dyadic()
        return math.ldexp(n, q)

    def __repr__(self) -> str:
        return f"PFloat({to_report(self)}, P={self.precision})"

    def __str__(self) -> str:
        return to_report(self)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PFloat):
            return NotImplemented
        return (
            self.significand == other.significand
            and self.precision == other.precision
            and (self.significand == 0 or (self.sign == other.sign and self.exponent == other.exponent))
        )

    def __hash__(self) -> int:
        if self.significand == 0:
            return hash((0, self.precision))
        return hash((self.sign, self.exponent, self.significand, self.precision))

    def __neg__(self) -> PFloat:
        if self.significand == 0:
            return self
        return PFloat(-self.sign, self.exponent, self.significand, self.precision)

    def __abs__(self) -> PFloat:
        return self if self.sign > 0 else -self

    def with_precision(self, precision: int) -> PFloat:
        """Re-round to ``precision`` bits (exact when widening)."""
        n, q = self.dyadic()
        return round_dyadic(n, q, precision)

    def _rounded(self, other: PFloat, op: str) -> PFloat:
        if other.precision != self.precision:
            other = other.with_precision(self.precision)
        return round_split(exact_op(self, other, op))[0]

    def __add__(self, other: PFloat) -> PFloat:
        return self._rounded(other, ADD)

    def __sub__(self, other: PFloat) -> PFloat:
        return self._rounded(other, SUB)

    def __mul__(self, other: PFloat) -> PFloat:
        return self._rounded(other, MUL)

    def __truediv__(self, other: PFloat) -> PFloat:
        return self._rounded(other, DIV)


class Accumulator:
    """Wide result ``0.[u|v] * 2**exponent`` with 2T significand bits.

    ``sticky`` is set iff nonzero bits of the exact result were truncated
    below the last of the 2T bits.
    """

    __slots__ = ("sign", "exponent", "significand", "sticky", "precision")

    def __init__(self, sign: int, exponent: int, significand: int, sticky: bool, precision: int):
        self.sign = sign
        self.exponent = exponent
        self.significand = significand
        self.sticky = sticky
        self.precision = precision

    @property
    def is_zero(self) -> bool:
        return self.significand == 0

    @property
    def width(self) -> int:
        return 2 * self.precision

    @property
    def u(self) -> int:
        return self.significand >> self.precision

    @property
    def v(self) -> int:
        return self.significand & ((1 << self.precision) - 1)

    def to_fraction(self) -> Fraction:
        q = self.exponent - self.width
        n = self.sign * self.significand
        return Fraction(n << q) if q >= 0 else Fraction(n, 1 << -q)

    def __repr__(self) -> str:
        bits = format(self.significand, f"0{self.width}b") if self.significand else "0"
        return (
            f"Accumulator({'-' if self.sign < 0 else ''}0.{bits}*2^{self.exponent}, "
            f"sticky={self.sticky}, T={self.precision})"
        )


def _accumulate(n: int, q: int, precision: int, sticky: bool = False) -> Accumulator:
    """Truncate the dyadic ``n * 2**q`` toward zero to a 2T-bit accumulator."""
    if n == 0:
        return Accumulator(1, 0, 0, sticky, precision)
    sign = 1 if n > 0 else -1
    m = n if n > 0 else -n
    length = m.bit_length()
    width = 2 * precision
    if length > width:
        drop = length - width
        if m & ((1 << drop) - 1):
            sticky = True
        m >>= drop
    else:
        m <<= width - length
    return Accumulator(sign, _check_exponent(q + length), m, sticky, precision)


def _pack(n: int, q: int, precision: int) -> PFloat:
    """Pack ``n * 2**q`` whose magnitude already fits in ``precision`` bits."""
    if n == 0:
        return PFloat(1, 0, 0, precision)
    sign = 1 if n > 0 else -1
    m = n if n > 0 else -n
    length = m.bit_length()
    return PFloat(sign, _check_exponent(q + length), m << (precision - length), precision)


def round_dyadic(n: int, q: int, precision: int) -> PFloat:
    """Round ``n * 2**q`` to ``precision`` bits, ties away from zero.

    Identical to round_split on the truncated accumulator: the decision only
    looks at the first bit below the kept ones.
    """
    if n == 0:
        return PFloat(1, 0, 0, precision)
    sign = 1 if n > 0 else -1
    m = n if n > 0 else -n
    length = m.bit_length()
    if length <= precision:
        return PFloat(sign, _check_exponent(q + length), m << (precision - length), precision)
    r = m >> (length - precision - 1)
    mz = (r >> 1) + (r & 1)
    exponent = q + length
    if mz >> precision:
        mz >>= 1
        exponent += 1
    return PFloat(sign, _check_exponent(exponent), mz, precision)


def round_fraction(value: Fraction, precision: int) -> PFloat:
    """Round an exact rational to ``precision`` bits, ties away from zero."""
    if value == 0:
        return PFloat(1, 0, 0, precision)
    sign = 1 if value > 0 else -1
    num, den = abs(value.numerator), value.denominator
    e = _fraction_exponent(num, den)
    shift = precision + 1 - e
    scaled = (num << shift) // den if shift >= 0 else num // (den << -shift)
    mz = (scaled >> 1) + (scaled & 1)
    if mz >> precision:
        mz >>= 1
        e += 1
    return PFloat(sign, _check_exponent(e), mz, precision)


def _fraction_exponent(num: int, den: int) -> int:
    """E with 2**(E-1) <= num/den < 2**E for positive num, den."""
    e = num.bit_length() - den.bit_length()
    # num/den lies in (2**(e-1), 2**(e+1))
    if (num << max(0, -e)) >= (den << max(0, e)):
        e += 1
    return e


def _fraction_accumulator(value: Fraction, precision: int) -> Accumulator:
    if value == 0:
        return Accumulator(1, 0, 0, False, precision)
    width = 2 * precision
    num, den = value.numerator, value.denominator
    m = abs(num)
    e = _fraction_exponent(m, den)
    shift = width - e
    top = m << shift if shift >= 0 else m
    bottom = den if shift >= 0 else den << -shift
    sig, rem = divmod(top, bottom)
    sign = 1 if num > 0 else -1
    return Accumulator(sign, _check_exponent(e), sig, rem != 0, precision)


def _require_same_precision(a: PFloat, b: PFloat) -> int:
    if a.precision != b.precision:
        raise ValueError(f"precision mismatch: {a.precision} vs {b.precision}")
    return a.precision


def exact_op(a: PFloat, b: PFloat, op: str) -> Accumulator:
    """Apply ``op`` to two T-bit operands into a 2T-bit accumulator.

    add/sub/mul are exact whenever the result fits in 2T bits; otherwise, and
    always for div, the result is truncated toward zero and ``sticky`` records
    whether anything nonzero was dropped.
    """
    precision = _require_same_precision(a, b)
    if op == MUL:
        return _accumulate(
            a.sign * b.sign * a.significand * b.significand,
            a.exponent + b.exponent - 2 * precision,
            precision,
        )
    if op == ADD or op == SUB:
        if b.significand == 0:
            return _accumulate(a.sign * a.significand, a.exponent - precision, precision)
        nb = b.sign * b.significand if op == ADD else -b.sign * b.significand
        if a.significand == 0:
            return _accumulate(nb, b.exponent - precision, precision)
        na = a.sign * a.significand
        qa, qb = a.exponent, b.exponent
        # An operand lying entirely below the 2T-bit window only matters as a
        # sticky/borrow; any nonzero stand-in that small truncates identically.
        limit = 2 * precision + 3
        if qa - qb > limit:
            nb, qb = (1 if nb > 0 else -1), qa - limit - precision
        elif qb - qa > limit:
            na, qa = (1 if na > 0 else -1), qb - limit - precision
        if qa >= qb:
            return _accumulate((na << (qa - qb)) + nb, qb - precision, precision)
        return _accumulate(na + (nb << (qb - qa)), qa - precision, precision)
    if op == DIV:
        if b.significand == 0:
            raise ZeroDivisionError("division by a zero PFloat")
        if a.significand == 0:
            return Accumulator(1, 0, 0, False, precision)
        width = 2 * precision
        quotient, remainder = divmod(a.significand << width, b.significand)
        return _accumulate(
            a.sign * b.sign * quotient,
            a.exponent - b.exponent - width,
            precision,
            sticky=remainder != 0,
        )
    raise ValueError(f"unknown operation {op!r}; expected one of {_OPS}")


def sqrt_exact(a: PFloat) -> Accumulator:
    """Square root truncated to 2T bits; ``sticky`` iff the root is inexact."""
    precision = a.precision
    if a.significand == 0:
        return Accumulator(1, 0, 0, False, precision)
    if a.sign < 0:
        raise DomainError("square root of a negative PFloat")
    width = 2 * precision
    q = a.exponent - precision
    shift = 2 * width - precision
    if (q - shift) & 1:
        shift += 1
    radicand = a.significand << shift
    root = math.isqrt(radicand)
    return _accumulate(root, (q - shift) // 2, precision, sticky=root * root != radicand)


def round_split(w: Accumulator) -> tuple[PFloat, PFloat]:
    """Split ``w = [u|v]`` into the T-bit value ``z`` and local error ``le = w - z``.

    If the first bit of v is 0, z takes u and le takes v; otherwise z takes
    u + 2**-T and le takes v - 2**-T (opposite sign to w). Magnitudes are
    rounded and the sign of w is reattached to both.
    """
    precision = w.precision
    if w.significand == 0:
        zero = PFloat(1, 0, 0, precision)
        return zero, zero
    mask = (1 << precision) - 1
    u = w.significand >> precision
    v = w.significand & mask
    exponent = w.exponent
    if v >> (precision - 1):
        mz = u + 1
        mle = v - (1 << precision)
        if mz >> precision:
            mz >>= 1
            exponent += 1
    else:
        mz = u
        mle = v
    z = PFloat(w.sign, _check_exponent(exponent), mz, precision)
    if mle == 0:
        return z, PFloat(1, 0, 0, precision)
    return z, _pack(w.sign * mle, w.exponent - 2 * precision, precision)


def parse_decimal(literal: str) -> Fraction:
    """Parse finite decimal text exactly; raises ValueError on anything else."""
    text = literal.strip()
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise ValueError(f"malformed decimal literal: {literal!r}") from None
    if "/" in text:
        raise ValueError(f"malformed decimal literal: {literal!r}")
    return value


def from_decimal(literal: str, precision: int, error_precision: int) -> tuple[PFloat, PFloat]:
    """Convert decimal text to a T-bit value and its T_e-bit conversion error.

    The literal is held exactly, rounded through a 2T-bit accumulator, and the
    exact residual ``literal - x`` is rounded to ``error_precision`` bits.
    """
    value = parse_decimal(literal)
    x, _ = round_split(_fraction_accumulator(value, precision))
    residual = value - x.to_fraction()
    return x, round_fraction(residual, error_precision)


def to_report(a: PFloat) -> str:
    """Exact decimal rendering of a PFloat (every binary fraction terminates)."""
    return dyadic_to_report(*a.dyadic())


def dyadic_to_report(n: int, q: int) -> str:
    """Exact decimal text for ``n * 2**q``."""
    if n == 0:
        return "0"
    if q >= 0:
        return str(n << q)
    sign = "-" if n < 0 else ""
    m = abs(n)
    tz = (m & -m).bit_length() - 1
    drop = min(tz, -q)
    m >>= drop
    k = -q - drop
    if k == 0:
        return sign + str(m)
    digits = str(m * 5**k).rjust(k + 1, "0")
    return f"{sign}{digits[:-k]}.{digits[-k:]}"
