"""Exact dot-product accumulation for posits.

The nominal quire size used for layout and cost reporting is n²/2 bits. The
software accumulator below uses the standard's fixed-point layout of 16n bits
(one sign bit, 31 carry-guard bits, 8n-16 integer bits and 8n-16 fraction
bits), which holds every product of two n-bit posits exactly and absorbs at
least 2^31 maximal products before it can overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .formats import Posit, UnsupportedWidth

QUIRE_WIDTHS = (8, 16, 32, 64)
CARRY_BITS = 31


class QuireOverflow(ArithmeticError):
    pass


@dataclass(frozen=True)
class QuireSpec:
    n: int
    bits: int
    bytes: int

    def cache_lines(self, line_bytes: int = 64) -> int:
        return math.ceil(self.bytes / line_bytes)


def quire_spec(n: int) -> QuireSpec:
    if n not in QUIRE_WIDTHS:
        raise UnsupportedWidth(f"no quire for {n}-bit posits")
    bits = n * n // 2
    return QuireSpec(n, bits, bits // 8)


def fraction_bits(n: int) -> int:
    return 8 * n - 16


def headroom(n: int) -> int:
    """Largest magnitude (exclusive) the accumulator can hold."""
    return 1 << (fraction_bits(n) + CARRY_BITS)


@dataclass
class Quire:
    """A running exact sum of posit products, rounded once by `to_posit`."""

    fmt: Posit
    acc: int = 0
    nar: bool = False
    count: int = field(default=0)

    @classmethod
    def zero(cls, n: int = 32) -> Quire:
        if n not in QUIRE_WIDTHS:
            raise UnsupportedWidth(f"no quire for {n}-bit posits")
        return cls(Posit(n))

    @property
    def scale(self) -> int:
        return 1 << fraction_bits(self.fmt.n)

    @property
    def value(self) -> Fraction | None:
        return None if self.nar else Fraction(self.acc, self.scale)

    def fma(self, a: int, b: int) -> Quire:
        """Add the exact product of posit patterns a and b."""
        x, y = self.fmt.decode(a), self.fmt.decode(b)
        self.count += 1
        if x is None or y is None:
            self.nar = True
            return self
        prod = x * y * self.scale
        assert prod.denominator == 1, "posit products are exact at quire resolution"
        acc = self.acc + prod.numerator
        if abs(acc) >= headroom(self.fmt.n) * self.scale:
            raise QuireOverflow(f"quire{self.fmt.n} overflowed after {self.count} products")
        self.acc = acc
        return self

    def to_posit(self) -> int:
        if self.nar:
            return self.fmt.nar
        return self.fmt.encode(Fraction(self.acc, self.scale))


def quire_accumulate(q: Quire, products) -> int:
    for a, b in products:
        q.fma(a, b)
    return q.to_posit()


def naive_accumulate(fmt: Posit, products) -> int:
    """Round after every multiply and every add."""
    s = 0
    for a, b in products:
        x, y = fmt.decode(a), fmt.decode(b)
        if x is None or y is None:
            return fmt.nar
        p = fmt.round(x * y)
        s = fmt.encode(fmt.decode(s) + p)
    return s
