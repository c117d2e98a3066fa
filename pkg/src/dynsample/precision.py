"""Small helpers for moving numbers between Fraction, mpf and interval form."""

import math
from contextlib import contextmanager
from fractions import Fraction

from mpmath import iv, mp, mpf

DEFAULT_PLAN_BITS = 256
DEFAULT_GUARD_BITS = 64
DEFAULT_CEILING_BITS = 8_000_000


def to_fraction(value):
    """Exact rational value of an int, float, str, Fraction or mpf."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(value, (int, str)):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        return Fraction(value)
    if isinstance(value, mpf):
        if not mp.isfinite(value):
            raise ValueError(f"non-finite value {value!r}")
        man, exp = value.man_exp
        return Fraction(man) * Fraction(2) ** exp
    raise TypeError(f"cannot convert {type(value).__name__} to an exact rational")


def to_mpf(value):
    """Round ``value`` to an mpf at the current working precision."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return mpf(value.numerator)
        return mpf(value.numerator) / value.denominator
    return mpf(value)


def to_iv(value):
    """Tight interval enclosure of an exact number at the current ``iv.prec``."""
    if isinstance(value, Fraction):
        if value.denominator == 1:
            return iv.mpf(value.numerator)
        return iv.mpf(value.numerator) / value.denominator
    return iv.mpf(value)


@contextmanager
def iv_precision(bits):
    saved = iv.prec
    iv.prec = int(bits)
    try:
        yield
    finally:
        iv.prec = saved


def exact_digits(bits):
    # decimal digits that round-trip a binary mantissa of this size
    return int(math.ceil(bits * math.log10(2))) + 3


def mpf_to_str(x):
    """Decimal string that converts back to exactly the same mpf.

    The digit count encodes the mantissa size, so :func:`mpf_from_str` can
    recover the value without being told the precision.
    """
    if not isinstance(x, mpf):
        x = mpf(x)
    if x == 0:
        return "0"
    bc = max(53, x._mpf_[3])
    with mp.workprec(bc + 16):
        return mp.nstr(x, exact_digits(bc), strip_zeros=False)


def _significant_digits(s):
    mant = s.lower().split("e")[0].lstrip("+-").replace(".", "")
    return len(mant.lstrip("0"))


def mpf_from_str(s):
    """Inverse of :func:`mpf_to_str`; also reads any other decimal at ample precision."""
    s = s.strip()
    digits = _significant_digits(s)
    if digits == 0:
        return mpf(0)
    lo = max(53, int((digits - 4) / math.log10(2)) - 2)
    for bits in range(lo, lo + 12):
        if exact_digits(bits) != digits:
            continue
        with mp.workprec(bits):
            value = mpf(s)
        if mpf_to_str(value) == s:
            return value
    with mp.workprec(max(128, 4 * digits + 64)):
        return mpf(s)


def log2_upper(x):
    """ceil(log2(x)) for a positive mpf, computed in low precision."""
    with mp.workprec(64):
        return int(mp.ceil(mp.log(mpf(x), 2)))
