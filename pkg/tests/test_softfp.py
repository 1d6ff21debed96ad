import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from errfloat.softfp import (
    Accumulator,
    DomainError,
    ExponentRangeError,
    PFloat,
    exact_op,
    from_decimal,
    parse_decimal,
    round_fraction,
    round_split,
    sqrt_exact,
    to_report,
)
from oracle import expected, expected_sqrt, round_away, split_int


def pf(bits: str, exponent: int = 0, sign: int = 1) -> PFloat:
    """PFloat from the fraction bits after the binary point, e.g. '1011'."""
    return PFloat(sign, exponent, int(bits, 2), len(bits))


def acc_bits(w: Accumulator) -> str:
    return format(w.significand, f"0{w.width}b")


# ----------------------------------------------------------- documented cases


def test_add_exact_sum():
    w = exact_op(pf("1000"), pf("1000", -1), "add")
    assert acc_bits(w) == "11000000" and w.exponent == 0 and not w.sticky


def test_mul_small_integers():
    # 11 * 13 = 143
    w = exact_op(pf("1011"), pf("1101"), "mul")
    assert acc_bits(w) == "10001111" and w.exponent == 0 and not w.sticky


def test_div_one_third():
    w = exact_op(pf("1000", 1), pf("1100", 2), "div")
    assert acc_bits(w) == "10101010" and w.exponent == -1 and w.sticky


def test_sqrt_cases():
    w = sqrt_exact(pf("1000", -1))
    assert w.to_fraction() == Fraction(1, 2) and not w.sticky
    w = sqrt_exact(pf("1000", 2))
    assert acc_bits(w) == "10110101" and w.exponent == 1 and w.sticky
    assert sqrt_exact(PFloat.zero(4)).is_zero


def test_round_split_exact_result():
    w = exact_op(pf("1000"), pf("1000", -1), "add")
    z, le = round_split(w)
    assert z.to_fraction() == Fraction(3, 4) and le.is_zero


def test_round_split_tie_goes_away_from_zero():
    for sign in (1, -1):
        w = Accumulator(sign, 0, 0b10111000, False, 4)
        z, le = round_split(w)
        assert z == pf("1100", 0, sign)
        assert le.to_fraction() == sign * Fraction(-1, 32)
        assert z.to_fraction() + le.to_fraction() == w.to_fraction()


def test_round_split_carry_renormalizes():
    z, le = round_split(Accumulator(1, 0, 0b11111000, False, 4))
    assert z == pf("1000", 1) and le.to_fraction() == Fraction(-1, 32)


def test_from_decimal_point_six():
    x, err = from_decimal("0.6", 4, 4)
    assert x.to_fraction() == Fraction(5, 8)
    # the residual -0.025 itself needs rounding to 4 bits
    assert err.to_fraction() == round_away(Fraction(-1, 40), 4) == Fraction(-13, 512)


def test_from_decimal_exact_literals():
    for text in ("0.5", "-3", "0.078125", "1024", "0"):
        x, err = from_decimal(text, 31, 21)
        assert x.to_fraction() == Fraction(text) and err.is_zero


def test_from_decimal_pi():
    text = "3.14159265358979323846"
    x, err = from_decimal(text, 31, 21)
    residual = Fraction(text) - x.to_fraction()
    assert not err.is_zero
    assert abs(err.to_fraction()) < Fraction(4, 2**31)
    assert err.to_fraction() == round_away(residual, 21)


@pytest.mark.parametrize("bad", ["", "abc", "1/3", "1e", "--1", "nan", "inf"])
def test_malformed_literals(bad):
    with pytest.raises(ValueError):
        parse_decimal(bad)


def test_to_report():
    assert to_report(pf("1010")) == "0.625"
    assert to_report(PFloat.zero(8)) == "0"
    assert to_report(pf("1010", -3)) == "0.078125"
    assert to_report(pf("1100", 4, -1)) == "-12"


def test_errors():
    with pytest.raises(ZeroDivisionError):
        exact_op(pf("1000"), PFloat.zero(4), "div")
    with pytest.raises(DomainError):
        sqrt_exact(pf("1000", 0, -1))
    with pytest.raises(ExponentRangeError):
        exact_op(pf("1000", 1000), pf("1000", 1000), "mul")
    with pytest.raises(ValueError):
        exact_op(pf("1000"), pf("10000"), "add")
    with pytest.raises(ValueError):
        PFloat(1, 0, 0b0100, 4)  # not normalized


def test_zero_is_canonical():
    z = PFloat.zero(6)
    assert z == -z and hash(z) == hash(-z)
    assert (pf("110000") - pf("110000")).is_zero


# ------------------------------------------------------- oracle agreement


def _check(w, z, le, ref):
    ez, ele, sticky = ref
    assert z.to_fraction() == ez
    assert le.to_fraction() == ele
    assert w.sticky == sticky


def test_random_div_sqrt_t8_against_oracle():
    rng = random.Random(8)
    t = 8
    for _ in range(3000):
        a = PFloat(rng.choice((1, -1)), rng.randint(-6, 6), rng.randrange(128, 256), t)
        b = PFloat(rng.choice((1, -1)), rng.randint(-6, 6), rng.randrange(128, 256), t)
        w = exact_op(a, b, "div")
        _check(w, *round_split(w), expected(a.to_fraction() / b.to_fraction(), t))
        pa = abs(a)
        w = sqrt_exact(pa)
        _check(w, *round_split(w), expected_sqrt(pa.to_fraction(), t))


def test_far_apart_addends_t6():
    # alignment beyond the 2T window must only leave a sticky/borrow trace
    t = 6
    for gap in range(10, 30):
        for sb in (1, -1):
            a = PFloat(1, 0, 0b100000, t)
            b = PFloat(sb, -gap, 0b101101, t)
            w = exact_op(a, b, "add")
            _check(w, *round_split(w), expected(a.to_fraction() + b.to_fraction(), t))


# ------------------------------------------------------------- properties

sig8 = st.integers(128, 255)
exp8 = st.integers(-20, 20)
sign = st.sampled_from((1, -1))
pf8 = st.builds(lambda s, e, m: PFloat(s, e, m, 8), sign, exp8, sig8)


@settings(max_examples=400, deadline=None)
@given(pf8, pf8, st.sampled_from(("add", "sub", "mul", "div")))
def test_split_properties(a, b, op):
    w = exact_op(a, b, op)
    z, le = round_split(w)
    wf = w.to_fraction()
    # le = w - z exactly: it keeps at most T bits
    assert z.to_fraction() + le.to_fraction() == wf
    if not w.is_zero:
        u = abs(wf) * 2**8 // 2 ** w.exponent
        mz = abs(z.to_fraction()) * 2**8 / 2 ** w.exponent
        assert u <= mz <= u + 1
        assert abs(le.to_fraction()) <= Fraction(2) ** (w.exponent - 8 - 1)


@settings(max_examples=300, deadline=None)
@given(pf8)
def test_representable_literals_convert_exactly(a):
    x, err = from_decimal(to_report(a), 8, 6)
    assert x == a and err.is_zero


@settings(max_examples=300, deadline=None)
@given(st.fractions(min_value=-1000, max_value=1000), st.integers(2, 40))
def test_round_fraction_matches_oracle(r, bits):
    assert round_fraction(r, bits).to_fraction() == round_away(r, bits)


@settings(max_examples=200, deadline=None)
@given(pf8, pf8)
def test_operators_round_to_nearest(a, b):
    assert (a + b).to_fraction() == round_away(expected(a.to_fraction() + b.to_fraction(), 8)[0], 8)
    assert (a * b).to_fraction() == expected(a.to_fraction() * b.to_fraction(), 8)[0]


def test_integer_oracle_agrees_with_fraction_oracle():
    rng = random.Random(3)
    for _ in range(2000):
        n = rng.randrange(-(1 << 30), 1 << 30)
        q = rng.randint(-40, 10)
        z, le, sticky = expected(Fraction(n) * Fraction(2) ** q, 8)
        iz, ile, isticky = split_int(1 if n >= 0 else -1, abs(n), q, False, 8)
        assert Fraction(iz[0]) * Fraction(2) ** iz[1] == z
        assert Fraction(ile[0]) * Fraction(2) ** ile[1] == le
        assert isticky == sticky
