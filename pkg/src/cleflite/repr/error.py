"""Worst-case relative rounding error of a format over a magnitude interval.

A real t in the gap [a, b] between neighbouring values rounds to a below the
tie point m and to b above it, so its relative error |t - fl(t)| / t peaks at
m. The supremum over a gap clipped to [lo, hi] is therefore attained at one of
min(m, hi) (rounding down) or max(m, lo) (rounding up).
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

from .formats import (
    Fixed,
    Ieee,
    NumericFormat,
    _PositBase,
    exact,
    floor_log2,
    positive_ties,
    positive_values,
    pow2,
)

ENUMERATION_LIMIT = 16


class RangeNotRepresentable(ValueError):
    pass


@dataclass(frozen=True)
class ValueRange:
    lo: float
    hi: float
    sign_symmetric: bool = True

    def __post_init__(self):
        if not (0 < self.lo <= self.hi):
            raise ValueError(f"need 0 < lo <= hi, got [{self.lo}, {self.hi}]")

    @property
    def exact_lo(self) -> Fraction:
        return exact(self.lo)

    @property
    def exact_hi(self) -> Fraction:
        return exact(self.hi)

    def decades(self) -> list[int]:
        """Decade exponents k whose [10^k, 10^(k+1)] meets the range."""
        k0 = floor_log10(self.exact_lo)
        k1 = floor_log10(self.exact_hi)
        if Fraction(10) ** k1 == self.exact_hi and k1 > k0:
            k1 -= 1
        return list(range(k0, k1 + 1))

    def __str__(self) -> str:
        return f"[{self.lo:g}, {self.hi:g}]"


def floor_log10(x: Fraction) -> int:
    k = math.floor(math.log10(x.numerator) - math.log10(x.denominator))
    while Fraction(10) ** k > x:
        k -= 1
    while Fraction(10) ** (k + 1) <= x:
        k += 1
    return k


@dataclass(frozen=True)
class ErrorProfile:
    """Decade-by-decade worst-case relative error; `summary` is the range maximum."""

    format: NumericFormat
    range: ValueRange
    summary: float
    table: tuple = field(default=())
    method: str = "exact"
    exact_summary: Fraction | None = None

    @property
    def approximate(self) -> bool:
        return self.method == "analytic"

    def at_decade(self, k: int) -> float:
        return dict(self.table)[k]

    def at(self, x: float) -> float:
        return self.at_decade(floor_log10(exact(x)))

    def __str__(self) -> str:
        mark = "~" if self.approximate else ""
        return f"{self.format.short_name} over {self.range}: {mark}{self.summary:.3g}"


def gap_error(a: Fraction, m: Fraction, b: Fraction, lo: Fraction, hi: Fraction) -> Fraction:
    """Sup of relative rounding error for reals in [a, b] ∩ [lo, hi]."""
    best = Fraction(0)
    if hi >= a and lo <= m:
        t = min(m, hi)
        best = (t - a) / t
    if hi > m and lo <= b:
        t = max(m, lo)
        best = max(best, (b - t) / t)
    return best


def _clamp(f: NumericFormat, lo: Fraction, hi: Fraction) -> tuple[Fraction, Fraction]:
    lo2, hi2 = max(lo, f.range_lo), min(hi, f.range_hi)
    if lo2 > hi2:
        raise RangeNotRepresentable(f"{f.short_name} does not represent any of [{float(lo):g}, {float(hi):g}]")
    return lo2, hi2


# -- enumeration (small posits) ------------------------------------------------------


class _GapTable:
    """Per-gap errors with a sparse table for O(1) range maxima."""

    def __init__(self, f: NumericFormat):
        self.values = positive_values(f)
        self.ties = positive_ties(f)
        v, m = self.values, self.ties
        errs = [max(m[i] - v[i], v[i + 1] - m[i]) / m[i] for i in range(len(m))]
        self.levels = [errs]
        span = 1
        while 2 * span <= len(errs):
            prev = self.levels[-1]
            self.levels.append([max(prev[i], prev[i + span]) for i in range(len(prev) - span)])
            span *= 2

    def range_max(self, i: int, j: int) -> Fraction:
        """Max full-gap error over gaps i..j-1 (empty -> 0)."""
        if i >= j:
            return Fraction(0)
        lvl = (j - i).bit_length() - 1
        row = self.levels[lvl]
        return max(row[i], row[j - (1 << lvl)])

    def query(self, lo: Fraction, hi: Fraction) -> Fraction:
        v, m = self.values, self.ties
        # gaps fully inside [lo, hi] are those i with v[i] >= lo and v[i+1] <= hi
        first = bisect_left(v, lo)
        last = bisect_right(v, hi) - 1
        best = self.range_max(first, last)
        for g in {first - 1, last, first, last - 1}:
            if 0 <= g < len(m):
                best = max(best, gap_error(v[g], m[g], v[g + 1], lo, hi))
        return best


@lru_cache(maxsize=None)
def _gap_table(f: NumericFormat) -> _GapTable:
    return _GapTable(f)


def _enumerated(f: NumericFormat, lo: Fraction, hi: Fraction) -> Fraction:
    return _gap_table(f).query(lo, hi)


# -- exact binade scan ---------------------------------------------------------------


def _scan(f: NumericFormat, lo: Fraction, hi: Fraction) -> Fraction:
    """Exact maximum using the fact that spacing is uniform inside each binade.

    Within a binade the relative error falls as magnitude grows, so only the
    gaps around `lo` and the first gap of each later binade can be maximal.
    """
    best = Fraction(0)
    p = f.pattern_below(lo)
    for q in (p, p + 1):
        if q < f.last_positive:
            best = max(best, gap_error(f.decode(q), f.tie(q), f.decode(q + 1), lo, hi))
    for s in range(floor_log2(lo) + 1, floor_log2(hi) + 1):
        a = pow2(s)
        if f.frac_bits_at(s) is None:
            continue
        q = f.encode(a)
        if f.decode(q) != a or q >= f.last_positive:
            continue
        best = max(best, gap_error(a, f.tie(q), f.decode(q + 1), lo, hi))
    return best


# -- analytic regime model (wide posits) ---------------------------------------------


def binade_error(f: _PositBase, scale: int) -> Fraction:
    """Worst relative error of the first gap in binade 2^scale, from the regime length.

    With F fraction bits the first gap is 2^-F wide relative to 2^scale and the
    tie sits at its midpoint: 2^-(F+1) / (1 + 2^-(F+1)). When F = -m < 0 the
    regime has pushed m exponent bits off the end, the next value is
    2^(2^m) times larger and the tie is at the geometric midpoint, giving
    2^(2^(m-1)) - 1.
    """
    fb = f.raw_frac_bits(scale)
    while fb is not None and fb < 0 and f.frac_bits_at(scale) is None:
        scale -= 1
        fb = f.raw_frac_bits(scale)
    if fb is None:
        raise RangeNotRepresentable(f"scale 2^{scale} outside {f.short_name}")
    if fb >= 0:
        h = pow2(-(fb + 1))
        return h / (1 + h)
    return Fraction(2) ** (1 << (-fb - 1)) - 1


def _analytic(f: _PositBase, lo: Fraction, hi: Fraction) -> Fraction:
    return max(binade_error(f, s) for s in range(floor_log2(lo), floor_log2(hi) + 1))


# -- public entry point ----------------------------------------------------------------


def method_for(f: NumericFormat) -> str:
    if isinstance(f, _PositBase):
        return "enumerated" if f.nbits <= ENUMERATION_LIMIT else "analytic"
    if isinstance(f, Ieee):
        return "closed-form"
    if isinstance(f, Fixed):
        return "exact"
    raise TypeError(f"no error model for {f}")


def _max_error(f: NumericFormat, lo: Fraction, hi: Fraction, method: str) -> Fraction:
    if method == "enumerated":
        return _enumerated(f, lo, hi)
    if method == "analytic":
        return _analytic(f, lo, hi)
    return _scan(f, lo, hi)


def worst_case_rel_error(f: NumericFormat, r: ValueRange) -> ErrorProfile:
    lo, hi = _clamp(f, r.exact_lo, r.exact_hi)
    method = method_for(f)
    summary = _max_error(f, lo, hi, method)
    table = []
    for k in r.decades():
        dlo = max(lo, Fraction(10) ** k)
        dhi = min(hi, Fraction(10) ** (k + 1))
        if dlo <= dhi:
            table.append((k, float(_max_error(f, dlo, dhi, method))))
    return ErrorProfile(f, r, float(summary), tuple(table), method, summary)


def exact_error(f: NumericFormat, r: ValueRange) -> Fraction:
    """Exact range maximum regardless of the reporting method."""
    lo, hi = _clamp(f, r.exact_lo, r.exact_hi)
    if isinstance(f, _PositBase) and f.nbits <= ENUMERATION_LIMIT:
        return _enumerated(f, lo, hi)
    return _scan(f, lo, hi)
