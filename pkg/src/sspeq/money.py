"""Exact rational money helpers. Everything monetary is a Fraction."""

import math
from fractions import Fraction

Money = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def parse_money(x):
    """Accept Fraction, int, or a 'num/den' / 'num' string."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"cannot parse money from {type(x).__name__}")


def format_money(x) -> str:
    """Canonical 'num/den' form, integers included (3 -> '3/1')."""
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def money_gcd(a: Fraction, b: Fraction) -> Fraction:
    """gcd extended to rationals; gcd(x, 0) = x."""
    a, b = abs(Fraction(a)), abs(Fraction(b))
    if a == 0:
        return b
    if b == 0:
        return a
    num = math.gcd(a.numerator * b.denominator, b.numerator * a.denominator)
    return Fraction(num, a.denominator * b.denominator)
