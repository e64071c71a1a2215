"""Exact money amounts.

Every amount handled by the pricing code is a plain ``int`` counting
micro-units (10^-6 of a currency unit). Conversions to and from human
readable amounts live here and refuse anything that is not exactly
representable.
"""
from __future__ import annotations

from decimal import Decimal
from fractions import Fraction
from typing import Union

MICRO = 10**6

Money = int

Amount = Union[int, str, Decimal, Fraction]


def to_micro(amount: Amount) -> Money:
    """Convert a currency amount to micro-units, exactly.

    >>> to_micro("49.5")
    49500000
    >>> to_micro(3)
    3000000
    """
    if isinstance(amount, bool) or isinstance(amount, float):
        raise TypeError("floats are not accepted as money; pass a str or Decimal")
    if isinstance(amount, str):
        amount = Decimal(amount)
    micro = Fraction(amount) * MICRO
    if micro.denominator != 1:
        raise ValueError(f"{amount!r} is not a whole number of micro-units")
    return int(micro)


def format_micro(value: Money) -> str:
    """Render micro-units as a decimal currency string."""
    sign = "-" if value < 0 else ""
    whole, frac = divmod(abs(value), MICRO)
    if frac == 0:
        return f"{sign}{whole}"
    return f"{sign}{whole}.{frac:06d}".rstrip("0")
