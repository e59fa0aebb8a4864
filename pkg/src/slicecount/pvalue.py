"""Acceptable values: exact symbolic numbers of the form c * exp(kappa * j).

Every quantity the counter manipulates for p(q), rho(q) and the estimates
stays in this form with ``c`` rational and ``j`` an integer, so two values
with the same exponent compare exactly.  Values with different exponents
are compared in floating point first and, when the gap is too small to
trust, again with 50 significant digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

_DPS = 50


class GridExhausted(ArithmeticError):
    """No acceptable value lies at or below the requested one."""


@dataclass(frozen=True)
class PValue:
    """The number ``coef * exp(kappa * j)``.

    ``grid`` is ``(sign, level, ell)`` for values produced by rounding, which
    then equal ``16n * exp(sign * kappa * 2**level) / ell``.
    """

    coef: Fraction
    j: int = 0
    grid: tuple[int, int, int] | None = None

    @property
    def is_one(self) -> bool:
        return self.j == 0 and self.coef == 1

    def describe(self) -> dict:
        d: dict = {"coef": str(self.coef), "j": self.j}
        if self.grid is not None:
            d["sign"], d["level"], d["ell"] = self.grid
        return d


ONE = PValue(Fraction(1))


class Arith:
    """Arithmetic and rounding for one run (fixed n, kappa and ell range)."""

    def __init__(self, n: int, kappa: float, kappa_mp: mpmath.mpf, ell_max_log2: int) -> None:
        self.n = n
        self.kappa = kappa
        with mpmath.workdps(_DPS):
            self.kappa_mp = mpmath.mpf(kappa_mp)
        self.ell_max = 1 << ell_max_log2
        self.sixteen_n = 16 * n

    @classmethod
    def from_params(cls, params) -> "Arith":
        with mpmath.workdps(_DPS):
            return cls(params.n, params.kappa, params.kappa_mp(), params.ell_max_log2)

    # -- evaluation -----------------------------------------------------

    def mp(self, v: PValue) -> mpmath.mpf:
        with mpmath.workdps(_DPS):
            c = mpmath.mpf(v.coef.numerator) / v.coef.denominator
            return c * mpmath.exp(self.kappa_mp * v.j) if v.j else c

    def value(self, v: PValue) -> float:
        if v.j == 0:
            return float(v.coef)
        return float(self.mp(v))

    def ratio(self, a: PValue, b: PValue) -> float:
        """a / b as a float."""
        if a.j == b.j:
            return float(a.coef / b.coef)
        with mpmath.workdps(_DPS):
            q = a.coef / b.coef
            r = mpmath.mpf(q.numerator) / q.denominator * mpmath.exp(self.kappa_mp * (a.j - b.j))
            return float(r)

    def cmp(self, a: PValue, b: PValue) -> int:
        if a.j == b.j:
            return (a.coef > b.coef) - (a.coef < b.coef)
        fa = float(a.coef) * math.exp(self.kappa * a.j)
        fb = float(b.coef) * math.exp(self.kappa * b.j)
        if abs(fa - fb) > 1e-9 * max(abs(fa), abs(fb)):
            return (fa > fb) - (fa < fb)
        with mpmath.workdps(_DPS):
            d = self.mp(a) - self.mp(b)
        return (d > 0) - (d < 0)

    def min(self, *vals: PValue) -> PValue:
        best = vals[0]
        for v in vals[1:]:
            if self.cmp(v, best) < 0:
                best = v
        return best

    # -- constructors ---------------------------------------------------

    def height_zero(self, support_size: int) -> PValue:
        """min(1, 16n / |supp|), kept as an exact rational."""
        return PValue(min(Fraction(1), Fraction(self.sixteen_n, support_size)))

    def grid_value(self, sign: int, level: int, ell: int) -> PValue:
        return PValue(Fraction(self.sixteen_n, ell), sign * (1 << level), (sign, level, ell))

    @staticmethod
    def scale(v: PValue, factor: Fraction) -> PValue:
        return PValue(v.coef * factor, v.j)

    @staticmethod
    def mul(a: PValue, b: PValue) -> PValue:
        return PValue(a.coef * b.coef, a.j + b.j)

    def estimate(self, p: PValue) -> float:
        """16n / p."""
        return self.ratio(PValue(Fraction(self.sixteen_n)), p)

    # -- rounding -------------------------------------------------------

    def _least_ell(self, j_grid: int, v: PValue) -> int:
        """Smallest integer ell with 16n e^(kappa j_grid) / ell <= v."""
        if j_grid == v.j:
            x = Fraction(self.sixteen_n) / v.coef
            return math.ceil(x)
        xf = self.sixteen_n * math.exp(self.kappa * (j_grid - v.j)) / float(v.coef)
        if xf < 2**50 and abs(xf - round(xf)) > 1e-6 * max(1.0, xf):
            return math.ceil(xf)
        with mpmath.workdps(_DPS):
            c = mpmath.mpf(v.coef.numerator) / v.coef.denominator
            x = self.sixteen_n * mpmath.exp(self.kappa_mp * (j_grid - v.j)) / c
            return int(mpmath.ceil(x))

    def round_down(self, level: int, v: PValue) -> PValue:
        """Largest acceptable value for effective height ``level`` that is <= v."""
        if v.coef <= 0:
            raise GridExhausted("value must be positive")
        if self.cmp(v, ONE) >= 0:
            return ONE
        best: PValue | None = None
        for sign in (-1, 1):
            ell = self._least_ell(sign * (1 << level), v)
            if 1 <= ell <= self.ell_max:
                cand = self.grid_value(sign, level, ell)
                if best is None or self.cmp(cand, best) > 0:
                    best = cand
        if best is None:
            raise GridExhausted(
                f"no acceptable value at level {level} below {self.value(v):.6g} "
                f"(ell would exceed {self.ell_max})"
            )
        return best

    def is_acceptable(self, level: int, v: PValue) -> bool:
        """1, or 16n e^(+-kappa 2^level)/ell < 1 with 1 <= ell <= ell_max."""
        if v.is_one:
            return True
        if abs(v.j) != 1 << level:
            return False
        ell = Fraction(self.sixteen_n) / v.coef
        return ell.denominator == 1 and 1 <= ell <= self.ell_max and self.cmp(v, ONE) < 0
