"""Shared checks against an independent mpmath reference."""

import mpmath

from theta_powers.certreal import CertReal



def mpf(v):
    """Exact mpmath value of an mpfr or Fraction."""
    if hasattr(v, "as_integer_ratio"):
        a, b = v.as_integer_ratio()
        return mpmath.mpf(int(a)) / int(b)
    return mpmath.mpf(v.numerator) / v.denominator


def encloses(x: CertReal, ref) -> bool:
    """ref lies inside x, with ref computed at 600 bits (tolerance 2^-380 relative)."""
    slack = abs(ref) * mpmath.mpf(2) ** -380 + mpmath.mpf(2) ** -390
    return mpf(x.lo) - slack <= ref <= mpf(x.hi) + slack
