"""Named closed-form schedules, parsed from short strings.

``rho`` schedules scale the per-height threshold in solution counting:

* ``const c``: rho(m) = c
* ``inv_log_sq``: rho(m) = 1 / log(m + 1)**2
* ``power p``: rho(m) = m**-p

``phi`` schedules bound the distance at n = 2**N in the exceptional-exponent
construction; they are evaluated through ``log2 phi(2**N)`` because n itself
is usually far too large to write down:

* ``exp_decay``: phi(n) = 2**-n
* ``power p``: phi(n) = n**-p
* ``table K1:V1,K2:V2,...``: piecewise constant, phi(n) = V_i for the largest
  key K_i <= n.  Keys are integers or ``2^E``; values are positive rationals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .caps import NotRepresentable
from .exact import rpow_rational
from .certreal import DEFAULT_PREC, CertReal, cr_log, cr_log2, cr_pow, parse_rational

# log2 phi(2**N) = -2**N is held exactly only up to this N
EXP_DECAY_MAX_N = 1 << 24


@dataclass(frozen=True)
class Rho:
    kind: str
    param: Fraction | None = None

    def value(self, m: int, prec: int = DEFAULT_PREC) -> CertReal:
        if self.kind == "const":
            return CertReal.exact(self.param, prec)
        if self.kind == "power":
            return cr_pow(CertReal.exact(m, prec), CertReal.exact(-self.param, prec))
        lg = cr_log(CertReal.exact(m + 1, prec))
        return 1 / (lg * lg)

    def exact_value(self, m: int) -> Fraction | None:
        """The value when it is rational and cheap to write down."""
        if self.kind == "const":
            return self.param
        if self.kind == "power":
            return rpow_rational(m, -self.param)
        return None

    def value_float(self, m: int) -> float:
        if self.kind == "const":
            return float(self.param)
        if self.kind == "power":
            return float(m) ** -float(self.param)
        return 1.0 / math.log(m + 1) ** 2

    def __str__(self) -> str:
        return self.kind if self.param is None else f"{self.kind} {self.param}"


@dataclass(frozen=True)
class Phi:
    kind: str
    param: Fraction | None = None
    table: tuple[tuple[int, bool, Fraction], ...] = ()

    def log2_at(self, N: int, prec: int = DEFAULT_PREC) -> CertReal:
        """Certified ``log2 phi(2**N)``."""
        if self.kind == "exp_decay":
            if N > EXP_DECAY_MAX_N:
                raise NotRepresentable(f"log2 phi(2**{N}) = -2**{N} is too large to hold exactly")
            return CertReal.exact(-(1 << N), prec)
        if self.kind == "power":
            return CertReal.exact(-self.param * N, prec)
        v = self._table_value(N)
        return cr_log2(CertReal.exact(v, prec))

    def _table_value(self, N: int) -> Fraction:
        best = None
        for key, is_pow2, v in self.table:  # keys ascend, checked at parse time
            if _key_le((key, is_pow2), (N, True)):
                best = v
        if best is None:
            raise ValueError(f"table has no key at or below 2**{N}")
        return best

    def __str__(self) -> str:
        if self.kind == "table":
            keys = ",".join(f"{'2^' if p else ''}{k}:{v}" for k, p, v in self.table)
            return f"table {keys}"
        return self.kind if self.param is None else f"{self.kind} {self.param}"


def _param(parts: list[str], name: str) -> Fraction:
    if len(parts) != 2:
        raise ValueError(f"schedule '{name}' takes one parameter")
    return parse_rational(parts[1])


def _key_le(a: tuple[int, bool], b: tuple[int, bool]) -> bool:
    """Compare table keys, each an integer or ``2**E`` (is_pow2 set)."""
    (x, xp), (y, yp) = a, b
    if xp and yp:
        return x <= y
    if not xp and not yp:
        return x <= y
    if xp:  # 2**x <= y
        return y.bit_length() - 1 >= x
    return (x - 1).bit_length() <= y  # x <= 2**y


def parse_rho(text: str) -> Rho:
    parts = text.replace("=", " ").split()
    if not parts:
        raise ValueError("empty rho schedule")
    kind = parts[0]
    if kind == "inv_log_sq":
        if len(parts) != 1:
            raise ValueError("schedule 'inv_log_sq' takes no parameter")
        return Rho("inv_log_sq")
    if kind == "const":
        c = _param(parts, kind)
        if c <= 0:
            raise ValueError("const rho must be positive")
        return Rho("const", c)
    if kind == "power":
        p = _param(parts, kind)
        if p < 0:
            raise ValueError("power rho needs p >= 0")
        return Rho("power", p)
    raise ValueError(f"unknown rho schedule '{kind}'")


def _table_key(text: str) -> tuple[int, bool]:
    text = text.strip()
    if text.startswith("2^"):
        e = int(text[2:])
        if e < 0:
            raise ValueError("table exponent must be nonnegative")
        return e, True
    k = int(text)
    if k < 1:
        raise ValueError("table keys must be positive")
    return k, False


def parse_phi(text: str) -> Phi:
    parts = text.split(None, 1)
    if not parts:
        raise ValueError("empty phi schedule")
    kind = parts[0]
    if kind == "exp_decay":
        if len(parts) != 1:
            raise ValueError("schedule 'exp_decay' takes no parameter")
        return Phi("exp_decay")
    if kind == "power":
        p = _param(text.split(), kind)
        if p < 0:
            raise ValueError("power phi needs p >= 0")
        return Phi("power", p)
    if kind == "table":
        if len(parts) != 2:
            raise ValueError("table needs entries K:V,...")
        rows = []
        for item in parts[1].split(","):
            k, _, v = item.partition(":")
            key, is_pow2 = _table_key(k)
            val = parse_rational(v)
            if val <= 0:
                raise ValueError("table values must be positive")
            if rows and _key_le((key, is_pow2), rows[-1][:2]):
                raise ValueError("table keys must be strictly increasing")
            rows.append((key, is_pow2, val))
        return Phi("table", table=tuple(rows))
    raise ValueError(f"unknown phi schedule '{kind}'")
