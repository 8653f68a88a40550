"""Choosing a numeric format for a value range, with range-coverage diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from ..diagnostics import Diagnostic
from ..dims import DEFAULT_UNITS, Dimension, UnitTable
from .error import ErrorProfile, ValueRange, floor_log10, worst_case_rel_error
from .formats import Ieee, NumericFormat, _PositBase, bposit_candidates, exact, floor_log2


class NoViableCandidate(ValueError):
    def __init__(self, message: str, diagnostics: list[Diagnostic]):
        super().__init__(message)
        self.diagnostics = diagnostics


@dataclass(frozen=True)
class Selection:
    format: NumericFormat
    profile: ErrorProfile
    diagnostics: tuple[Diagnostic, ...] = ()
    profiles: tuple[ErrorProfile, ...] = field(default=())

    def __iter__(self):
        return iter((self.format, self.profile, list(self.diagnostics)))


def fmt_magnitude(x) -> str:
    """Decade-style rendering: 1e-11, 1e72, 6.7e60."""
    x = float(x)
    e = math.floor(math.log10(x))
    m = x / 10**e
    if abs(m - round(m)) < 1e-9 and round(m) == 10:
        m, e = 1.0, e + 1
    ms = f"{m:.2g}"
    return f"{ms}e{e}" if ms != "1" else f"1e{e}"


def fmt_range(lo, hi) -> str:
    return f"[{fmt_magnitude(lo)}, {fmt_magnitude(hi)}]"


def nominal_range(f: NumericFormat) -> str:
    """Representable range rounded to whole decades, e.g. [1e-36, 1e36]."""
    lo = round(math.log10(f.range_lo))
    hi = round(math.log10(f.range_hi))
    return f"[1e{lo}, 1e{hi}]"


def covers(f: NumericFormat, r: ValueRange) -> bool:
    return f.range_lo <= r.exact_lo and r.exact_hi <= f.range_hi


def uncovered_decades(f: NumericFormat, lo: Fraction, hi: Fraction) -> float:
    """Log10 length of [lo, hi] lying outside the format's representable range."""
    flo, fhi = float(f.range_lo), float(f.range_hi)
    l, h = math.log10(lo), math.log10(hi)
    out = 0.0
    if l < math.log10(flo):
        out += min(h, math.log10(flo)) - l
    if h > math.log10(fhi):
        out += h - max(l, math.log10(fhi))
    return out


@dataclass(frozen=True)
class Rescaling:
    unit: str
    scale: float
    scaled: ValueRange
    fits: bool

    @property
    def label(self) -> str:
        return "fits posit range" if self.fits else "closer to posit range"


def suggest_rescaling(f: NumericFormat, r: ValueRange, dimension: Dimension | None, units: UnitTable) -> Rescaling | None:
    """The scaled unit alias that leaves the fewest decades uncovered, if it helps."""
    if dimension is None:
        return None
    base = uncovered_decades(f, r.exact_lo, r.exact_hi)
    best = None
    for alias in units.rescalings(dimension):
        s = exact(alias.scale)
        lo, hi = r.exact_lo / s, r.exact_hi / s
        left = uncovered_decades(f, lo, hi)
        if left < base - 1e-12 and (best is None or left < best[0]):
            scaled = ValueRange(float(lo), float(hi), r.sign_symmetric)
            best = (left, Rescaling(alias.name, alias.scale, scaled, covers(f, scaled)))
    return best[1] if best else None


def range_warning(
    f: NumericFormat,
    r: ValueRange,
    candidates: list[NumericFormat],
    subject: str | None = None,
    dimension: Dimension | None = None,
    units: UnitTable = DEFAULT_UNITS,
) -> Diagnostic:
    what = f"full dimensional range {fmt_range(r.lo, r.hi)}"
    if subject:
        what += f" of {subject}"
    options = []
    alt = next((c for c in candidates if c is not f and covers(c, r)), None)
    if alt is None and covers(Ieee(64), r):
        alt = Ieee(64)
    if alt is not None:
        options.append(f"{alt.short_name} (covers full range)")
    if isinstance(f, _PositBase):
        resc = suggest_rescaling(f, r, dimension, units)
        if resc is not None:
            options.append(f"scaling to {resc.unit} ({resc.label})")
    notes = [what]
    if options:
        notes.append("Consider: " + " or ".join(options))
    return Diagnostic(
        "warning",
        "range-not-covered",
        f"{f.long_name} dynamic range {nominal_range(f)} does not cover",
        notes=tuple(notes),
    )


def select_representation(
    r: ValueRange,
    candidates: list[NumericFormat],
    subject: str | None = None,
    dimension: Dimension | None = None,
    units: UnitTable = DEFAULT_UNITS,
) -> Selection:
    """argmin over covering candidates of the range-max relative error; list order breaks ties."""
    if not candidates:
        raise ValueError("no candidate formats")
    diags: list[Diagnostic] = []
    best: ErrorProfile | None = None
    profiles = []
    for f in candidates:
        if not covers(f, r):
            diags.append(range_warning(f, r, candidates, subject, dimension, units))
            continue
        p = worst_case_rel_error(f, r)
        profiles.append(p)
        if best is None or p.exact_summary < best.exact_summary:
            best = p
    if best is None:
        raise NoViableCandidate(f"no candidate covers {fmt_range(r.lo, r.hi)}", diags)
    return Selection(best.format, best, tuple(diags), tuple(profiles))


# -- precision sweet spot ---------------------------------------------------------------


@dataclass(frozen=True)
class SweetSpot:
    lo_decade: int
    hi_decade: int

    @property
    def range(self) -> ValueRange:
        return ValueRange(10.0**self.lo_decade, 10.0**self.hi_decade)

    def share_of(self, r: ValueRange) -> float:
        """Fraction of the range's log-magnitude measure inside the sweet spot."""
        l, h = math.log10(r.lo), math.log10(r.hi)
        if h == l:
            return 1.0 if self.lo_decade <= l <= self.hi_decade else 0.0
        inside = max(0.0, min(h, self.hi_decade) - max(l, self.lo_decade))
        return inside / (h - l)

    def __str__(self) -> str:
        return fmt_range(10.0**self.lo_decade, 10.0**self.hi_decade)


def sweet_spot(f: NumericFormat) -> SweetSpot:
    """Widest decade-aligned interval whose binades all keep at least max-1 fraction bits."""
    lo_s = floor_log2(f.range_lo)
    hi_s = floor_log2(f.range_hi)
    bits = {s: f.frac_bits_at(s) for s in range(lo_s, hi_s + 1)}
    top = max(b for b in bits.values() if b is not None)
    good = [s for s, b in bits.items() if b is not None and b >= top - 1]
    # contiguous run of good binades around the peak
    peak = max(good, key=lambda s: (bits[s], -abs(s)))
    a = b = peak
    while a - 1 in bits and bits[a - 1] is not None and bits[a - 1] >= top - 1:
        a -= 1
    while b + 1 in bits and bits[b + 1] is not None and bits[b + 1] >= top - 1:
        b += 1
    lo = floor_log10(Fraction(2) ** a if a >= 0 else Fraction(1, 2**-a))
    if Fraction(10) ** lo < (Fraction(2) ** a if a >= 0 else Fraction(1, 2**-a)):
        lo += 1
    hi = floor_log10(Fraction(2) ** (b + 1) if b + 1 >= 0 else Fraction(1, 2 ** -(b + 1)))
    return SweetSpot(lo, hi)


def precision_ratio(f: NumericFormat, other: NumericFormat, spot: SweetSpot) -> float:
    """How many times smaller f's worst error is than other's over the sweet spot."""
    r = spot.range
    return worst_case_rel_error(other, r).summary / worst_case_rel_error(f, r).summary


def best_bposit(r: ValueRange, n: int, biases=(0, -2, -3)) -> Selection:
    """Search the small b-posit parameter space for the best fit to `r`."""
    return select_representation(r, bposit_candidates(n, biases))
