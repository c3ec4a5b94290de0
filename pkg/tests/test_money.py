from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sspeq.money import format_money, money_gcd, parse_money


def test_parse_accepts_fraction_int_string():
    assert parse_money(Fraction(3, 7)) == Fraction(3, 7)
    assert parse_money(5) == Fraction(5)
    assert parse_money("9/4") == Fraction(9, 4)
    assert parse_money("12") == Fraction(12)


def test_parse_rejects_float():
    with pytest.raises(TypeError):
        parse_money(0.5)


def test_format_always_has_denominator():
    assert format_money(3) == "3/1"
    assert format_money(Fraction(1, 2)) == "1/2"
    assert format_money(Fraction(-7, 3)) == "-7/3"
    assert format_money(0) == "0/1"


def test_money_gcd_basics():
    assert money_gcd(Fraction(1, 2), Fraction(1, 3)) == Fraction(1, 6)
    assert money_gcd(Fraction(4), Fraction(6)) == Fraction(2)
    assert money_gcd(Fraction(5, 8), 0) == Fraction(5, 8)
    assert money_gcd(0, 0) == 0


@given(st.fractions())
def test_round_trip(x):
    assert parse_money(format_money(x)) == x


@given(st.fractions(), st.fractions())
def test_gcd_divides_both(a, b):
    g = money_gcd(a, b)
    if g != 0:
        assert (abs(a) / g).denominator == 1
        assert (abs(b) / g).denominator == 1
