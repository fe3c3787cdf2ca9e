"""Calibration grids for the constants that the constructions leave symbolic.

A calibrated constant is the maximum of ``dist * n**exponent`` (or
``slack * x**-psi``) over a fixed grid, rounded up to six significant digits.
The tests freeze the resulting values.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .certreal import CertReal, to_fraction

# pi - 3 to 40 digits, the irrational member of the alpha grid
PI_MINUS_3 = "0.1415926535897932384626433832795028841971"
ALPHAS = ("0", "1/2", "1/3", PI_MINUS_3)
N = 2**8


def gap_xs(count: int = 200, lo: float = 1e2, hi: float = 1e4) -> tuple[str, ...]:
    """Log-spaced x values as six-decimal strings."""
    step = (math.log(hi) - math.log(lo)) / (count - 1)
    return tuple(f"{math.exp(math.log(lo) + i * step):.6f}" for i in range(count))


def round_up_sig(x: CertReal, digits: int = 6) -> Fraction:
    """A decimal with ``digits`` significant figures that is at least x.hi."""
    hi = to_fraction(x.hi)
    if hi <= 0:
        return Fraction(0)
    e = math.floor(math.log10(hi)) - digits + 1
    scale = Fraction(10) ** e
    return math.ceil(hi / scale) * scale
