"""Bit-accurate models of IEEE 754, posit, bounded posit and fixed-point formats.

Every format maps n-bit patterns to exact rationals. Positive finite
patterns form a contiguous, monotonically increasing integer range, so
"next representable value" is pattern + 1 throughout.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache


class UnsupportedWidth(ValueError):
    pass


class FormatSyntaxError(ValueError):
    pass


Number = Fraction | int | float


def exact(x: Number) -> Fraction:
    """Exact rational for `x`; floats are read as their shortest decimal spelling."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if not math.isfinite(x):
        raise ValueError(f"not finite: {x}")
    return Fraction(repr(float(x)))


def floor_log2(x: Fraction) -> int:
    """floor(log2(x)) for x > 0, exactly."""
    n, d = x.numerator, x.denominator
    e = n.bit_length() - d.bit_length()
    if (n << max(0, -e)) < (d << max(0, e)):
        e -= 1
    return e


def pow2(e: int) -> Fraction:
    return Fraction(1 << e) if e >= 0 else Fraction(1, 1 << -e)


def round_half_even(q: Fraction) -> int:
    f = q.numerator // q.denominator
    r = q - f
    if r > Fraction(1, 2) or (r == Fraction(1, 2) and f & 1):
        return f + 1
    return f


class NumericFormat:
    """Common interface; see the concrete dataclasses below."""

    nbits: int
    kind: str

    # subclasses provide
    def decode(self, bits: int):  # -> Fraction | float (inf) | None (NaR/NaN)
        raise NotImplementedError

    def encode(self, x: Number) -> int:
        raise NotImplementedError

    @property
    def first_positive(self) -> int:
        return 1

    @property
    def last_positive(self) -> int:
        raise NotImplementedError

    @property
    def minpos(self) -> Fraction:
        return self.decode(self.first_positive)

    @property
    def maxpos(self) -> Fraction:
        return self.decode(self.last_positive)

    @property
    def range_lo(self) -> Fraction:
        """Smallest magnitude counted as covered by a range check."""
        return self.minpos

    @property
    def range_hi(self) -> Fraction:
        return self.maxpos

    def tie(self, bits: int) -> Fraction:
        """Rounding boundary between positive pattern `bits` and `bits + 1`."""
        return (self.decode(bits) + self.decode(bits + 1)) / 2

    def round(self, x: Number):
        return self.decode(self.encode(x))

    def pattern_below(self, x: Fraction) -> int:
        """Largest positive pattern whose value is <= x (x within the positive range)."""
        p = self.encode(x)
        if p > self.last_positive:
            p = self.last_positive
        while p > self.first_positive and self.decode(p) > x:
            p -= 1
        return p

    def frac_bits_at(self, scale: int) -> int | None:
        """Fraction bits carried by values in [2^scale, 2^(scale+1)); None if unrepresentable."""
        raise NotImplementedError

    def mask(self, bits: int) -> int:
        return bits & ((1 << self.nbits) - 1)

    def __str__(self) -> str:
        return self.spec

    # naming
    spec: str
    short_name: str
    long_name: str


# -- IEEE 754 ------------------------------------------------------------------------

_IEEE_LAYOUT = {16: (5, 10), 32: (8, 23), 64: (11, 52)}


@dataclass(frozen=True)
class Ieee(NumericFormat):
    width: int

    kind = "ieee"

    def __post_init__(self):
        if self.width not in _IEEE_LAYOUT:
            raise UnsupportedWidth(f"IEEE width {self.width} not supported")

    @property
    def nbits(self) -> int:
        return self.width

    @property
    def ebits(self) -> int:
        return _IEEE_LAYOUT[self.width][0]

    @property
    def fbits(self) -> int:
        return _IEEE_LAYOUT[self.width][1]

    @property
    def precision(self) -> int:
        """Significand bits including the hidden bit."""
        return self.fbits + 1

    @property
    def bias(self) -> int:
        return (1 << (self.ebits - 1)) - 1

    @property
    def emin(self) -> int:
        return 1 - self.bias

    @property
    def emax(self) -> int:
        return self.bias

    @property
    def last_positive(self) -> int:
        return (((1 << self.ebits) - 1) << self.fbits) - 1

    @property
    def range_lo(self) -> Fraction:
        return pow2(self.emin)

    def decode(self, bits: int):
        bits = self.mask(bits)
        sign = -1 if bits >> (self.width - 1) else 1
        e = (bits >> self.fbits) & ((1 << self.ebits) - 1)
        f = bits & ((1 << self.fbits) - 1)
        if e == (1 << self.ebits) - 1:
            return None if f else sign * math.inf
        if e == 0:
            return sign * Fraction(f) * pow2(self.emin - self.fbits)
        return sign * Fraction((1 << self.fbits) | f) * pow2(e - self.bias - self.fbits)

    def encode(self, x: Number) -> int:
        if isinstance(x, float) and math.isnan(x):
            return self.mask(-1) >> 1
        if isinstance(x, float) and math.isinf(x):
            return self._inf(x < 0)
        if isinstance(x, float) and x == 0:
            return (1 << (self.width - 1)) if math.copysign(1.0, x) < 0 else 0
        x = exact(x) if not isinstance(x, Fraction) else x
        neg = x < 0
        x = -x if neg else x
        sign = (1 << (self.width - 1)) if neg else 0
        if x == 0:
            return sign
        s = max(floor_log2(x), self.emin)
        m = round_half_even(x / pow2(s - self.fbits))
        if m >> (self.fbits + 1):
            m >>= 1
            s += 1
        if m >> self.fbits == 0:  # subnormal
            return sign | m
        e = s + self.bias
        if e >= (1 << self.ebits) - 1:
            return self._inf(neg)
        return sign | (e << self.fbits) | (m & ((1 << self.fbits) - 1))

    def _inf(self, neg: bool) -> int:
        return ((1 << (self.width - 1)) if neg else 0) | (((1 << self.ebits) - 1) << self.fbits)

    def frac_bits_at(self, scale: int) -> int | None:
        if scale > self.emax:
            return None
        if scale >= self.emin:
            return self.fbits
        fb = self.fbits - (self.emin - scale)
        return fb if fb >= 0 else None

    @property
    def spec(self) -> str:
        return f"float{self.width}"

    short_name = spec
    long_name = spec


# -- posits and bounded posits -----------------------------------------------------


@dataclass(frozen=True)
class _PositBase(NumericFormat):
    """Shared regime/exponent/fraction machinery.

    `rs` caps the regime run length (None = unbounded, standard posits).
    `bias` offsets the scale of every value.
    """

    n: int
    es: int
    rs: int | None = None
    bias: int = 0

    @property
    def nbits(self) -> int:
        return self.n

    @property
    def last_positive(self) -> int:
        return (1 << (self.n - 1)) - 1

    @property
    def nar(self) -> int:
        return 1 << (self.n - 1)

    def _max_run(self) -> int:
        return self.n - 1 if self.rs is None else min(self.rs, self.n - 1)

    def decode(self, bits: int):
        bits = self.mask(bits)
        if bits == 0:
            return Fraction(0)
        if bits == self.nar:
            return None
        if bits >> (self.n - 1):
            return -self.decode(self.mask(-bits))
        width = self.n - 1
        first = (bits >> (width - 1)) & 1
        run = 0
        cap = self._max_run()
        while run < cap and ((bits >> (width - 1 - run)) & 1) == first:
            run += 1
        k = run - 1 if first else -run
        used = run + (1 if run < cap or (self.rs is None and run < width) else 0)
        if self.rs is not None and run == cap:
            used = run
        used = min(used, width)
        rest_len = width - used
        rest = bits & ((1 << rest_len) - 1)
        if rest_len >= self.es:
            e = rest >> (rest_len - self.es)
            flen = rest_len - self.es
            f = rest & ((1 << flen) - 1)
        else:
            e = rest << (self.es - rest_len)
            flen = 0
            f = 0
        scale = k * (1 << self.es) + e + self.bias
        return pow2(scale) * (1 + Fraction(f, 1 << flen))

    def _regime(self, k: int) -> tuple[int, int] | None:
        """(bits, length) of the regime field for k, or None when out of range.

        A run that reaches the cap (rs, or the whole n-1 bit body) has no
        terminating bit. An all-zero body is the zero pattern, not a regime.
        """
        cap = self._max_run()
        run = k + 1 if k >= 0 else -k
        if run > cap or (k < 0 and self.rs is None and run == cap):
            return None
        if k >= 0:
            ones = (1 << run) - 1
            return (ones, run) if run == cap else (ones << 1, run + 1)
        return (0, run) if run == cap else (1, run + 1)

    def encode(self, x: Number) -> int:
        if isinstance(x, float) and not math.isfinite(x):
            return self.nar
        x = exact(x) if not isinstance(x, Fraction) else x
        if x == 0:
            return 0
        if x < 0:
            return self.mask(-self.encode(-x))
        s = floor_log2(x) - self.bias
        k = s >> self.es
        e = s - (k << self.es)
        reg = self._regime(k)
        if reg is None:
            return self.last_positive if k > 0 else self.first_positive
        rbits, rlen = reg
        frac = x / pow2(s + self.bias) - 1  # in [0, 1)
        prefix = (rbits << self.es) | e
        plen = rlen + self.es
        stream = (prefix + frac) * pow2(self.n - 1 - plen)
        t = round_half_even(stream)
        if t <= 0:
            return self.first_positive
        if t > self.last_positive:
            return self.last_positive
        return t

    def tie(self, bits: int) -> Fraction:
        ext = type(self)._extended(self)
        return ext.decode((bits << 1) | 1)

    def raw_frac_bits(self, scale: int) -> int | None:
        """n - 1 - regime length - es at this scale; negative when exponent bits are cut off."""
        k = (scale - self.bias) >> self.es
        reg = self._regime(k)
        if reg is None:
            return None
        return self.n - 1 - reg[1] - self.es

    def frac_bits_at(self, scale: int) -> int | None:
        s = scale - self.bias
        k = s >> self.es
        fb = self.raw_frac_bits(scale)
        if fb is None:
            return None
        if fb < 0:
            # truncated exponent: only some binades are representable
            e = s - (k << self.es)
            missing = -fb
            if missing > self.es or e & ((1 << missing) - 1):
                return None
            return 0
        return fb

    def _extended(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Posit(_PositBase):
    es: int = 2

    kind = "posit"

    def __post_init__(self):
        if not 3 <= self.n <= 64:
            raise UnsupportedWidth(f"posit width {self.n} not supported")
        if self.es != 2:
            raise ValueError("posits use es = 2")
        if self.rs is not None or self.bias:
            raise ValueError("standard posits have no regime cap or bias")

    def _extended(self):
        return Posit(self.n + 1)

    @property
    def spec(self) -> str:
        return f"posit{self.n}es{self.es}"

    @property
    def short_name(self) -> str:
        return f"posit{self.n}"

    @property
    def long_name(self) -> str:
        return f"posit<{self.n}, es={self.es}>"


@dataclass(frozen=True)
class BPosit(_PositBase):
    es: int = 2
    rs: int = 6
    bias: int = 0

    kind = "bposit"

    def __post_init__(self):
        if not 8 <= self.n <= 64:
            raise UnsupportedWidth(f"b-posit width {self.n} not supported")
        if not 1 <= self.es <= 5:
            raise ValueError("b-posit es must lie in [1, 5]")
        if not 2 <= self.rs <= 6:
            raise ValueError("b-posit rs must lie in [2, 6]")

    def _extended(self):
        return BPosit(self.n + 1, self.es, self.rs, self.bias)

    @property
    def spec(self) -> str:
        return f"bposit{self.n}es{self.es}rs{self.rs}b{self.bias}"

    @property
    def short_name(self) -> str:
        return self.spec

    @property
    def long_name(self) -> str:
        return f"b-posit<{self.n}, es={self.es}, rs={self.rs}, bias={self.bias}>"


# -- fixed point --------------------------------------------------------------------


@dataclass(frozen=True)
class Fixed(NumericFormat):
    n: int
    frac: int
    signed: bool = True

    kind = "fixed"

    def __post_init__(self):
        if not 2 <= self.n <= 128:
            raise UnsupportedWidth(f"fixed width {self.n} not supported")
        if not 0 <= self.frac <= self.n:
            raise ValueError("fraction bits must lie in [0, n]")

    @property
    def nbits(self) -> int:
        return self.n

    @property
    def last_positive(self) -> int:
        return (1 << (self.n - 1)) - 1 if self.signed else (1 << self.n) - 1

    def decode(self, bits: int):
        bits = self.mask(bits)
        if self.signed and bits >> (self.n - 1):
            bits -= 1 << self.n
        return Fraction(bits, 1 << self.frac)

    def encode(self, x: Number) -> int:
        x = exact(x) if not isinstance(x, Fraction) else x
        q = round_half_even(x * (1 << self.frac))
        lo = -(1 << (self.n - 1)) if self.signed else 0
        q = max(lo, min(self.last_positive, q))
        return self.mask(q)

    def frac_bits_at(self, scale: int) -> int | None:
        if pow2(scale) > self.maxpos or scale < -self.frac:
            return None
        return scale + self.frac

    @property
    def spec(self) -> str:
        return f"fixed{self.n}{'s' if self.signed else 'u'}{self.frac}"

    short_name = spec

    @property
    def long_name(self) -> str:
        return f"fixed<{self.n}, {self.frac}, {'signed' if self.signed else 'unsigned'}>"


# -- quire (format descriptor only; arithmetic lives in quire.py) ------------------


@dataclass(frozen=True)
class QuireFor:
    n: int

    kind = "quire"

    def __post_init__(self):
        if self.n not in (8, 16, 32, 64):
            raise UnsupportedWidth(f"quire for posit{self.n} not supported")

    @property
    def bits(self) -> int:
        return self.n * self.n // 2

    @property
    def spec(self) -> str:
        return f"quire{self.n}"

    short_name = spec

    def __str__(self) -> str:
        return self.spec


# -- spec strings -----------------------------------------------------------------

_SPEC = re.compile(
    r"^(?:float(?P<ieee>\d+)"
    r"|posit(?P<pn>\d+)es(?P<pes>\d+)"
    r"|bposit(?P<bn>\d+)es(?P<bes>\d+)rs(?P<brs>\d+)b(?P<bb>-?\d+)"
    r"|fixed(?P<fn>\d+)(?P<fs>[su])(?P<ff>\d+)"
    r"|quire(?P<qn>\d+))$"
)


def parse_format(text: str):
    m = _SPEC.match(text.strip())
    if not m:
        raise FormatSyntaxError(f"unrecognised format {text!r}")
    g = m.groupdict()
    if g["ieee"]:
        return Ieee(int(g["ieee"]))
    if g["pn"]:
        return Posit(int(g["pn"]), int(g["pes"]))
    if g["bn"]:
        return BPosit(int(g["bn"]), int(g["bes"]), int(g["brs"]), int(g["bb"]))
    if g["fn"]:
        return Fixed(int(g["fn"]), int(g["ff"]), g["fs"] == "s")
    return QuireFor(int(g["qn"]))


@lru_cache(maxsize=None)
def positive_values(f: NumericFormat) -> tuple:
    """All positive finite values in increasing order (small formats only)."""
    if f.nbits > 20:
        raise UnsupportedWidth("enumeration is limited to 20-bit formats")
    return tuple(f.decode(p) for p in range(f.first_positive, f.last_positive + 1))


@lru_cache(maxsize=None)
def positive_ties(f: NumericFormat) -> tuple:
    """Rounding boundaries between consecutive positive values."""
    if f.nbits > 20:
        raise UnsupportedWidth("enumeration is limited to 20-bit formats")
    return tuple(f.tie(p) for p in range(f.first_positive, f.last_positive))


def bposit_candidates(n: int, biases=(0, -2, -3)) -> list[BPosit]:
    """The enumerable b-posit design space: es in [1,5], rs in [2,6], a few biases."""
    return [BPosit(n, es, rs, b) for es in range(1, 6) for rs in range(2, 7) for b in biases]
