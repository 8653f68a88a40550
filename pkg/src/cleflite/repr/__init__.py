"""Numeric formats, rounding-error analysis and representation selection."""

from .error import (
    ErrorProfile,
    RangeNotRepresentable,
    ValueRange,
    exact_error,
    gap_error,
    worst_case_rel_error,
)
from .formats import (
    BPosit,
    Fixed,
    FormatSyntaxError,
    Ieee,
    NumericFormat,
    Posit,
    QuireFor,
    UnsupportedWidth,
    bposit_candidates,
    parse_format,
)
from .quire import Quire, QuireOverflow, QuireSpec, naive_accumulate, quire_accumulate, quire_spec
from .select import (
    NoViableCandidate,
    Selection,
    covers,
    nominal_range,
    select_representation,
    suggest_rescaling,
    sweet_spot,
)


def decode(f: NumericFormat, bits: int):
    return f.decode(bits)


def encode(f: NumericFormat, x) -> int:
    return f.encode(x)


__all__ = [
    "BPosit", "ErrorProfile", "Fixed", "FormatSyntaxError", "Ieee", "NoViableCandidate",
    "NumericFormat", "Posit", "Quire", "QuireFor", "QuireOverflow", "QuireSpec",
    "RangeNotRepresentable", "Selection", "UnsupportedWidth", "ValueRange",
    "bposit_candidates", "covers", "decode", "encode", "exact_error", "gap_error",
    "naive_accumulate", "nominal_range", "parse_format", "quire_accumulate", "quire_spec",
    "select_representation", "suggest_rescaling", "sweet_spot", "worst_case_rel_error",
]
