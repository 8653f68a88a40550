"""Type terms for Clef-lite: structural types carrying dimensions and memory sorts."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

from .dims import (
    DEFAULT_UNITS,
    Dimension,
    DimVar,
    MemorySpace,
    MemVar,
    UnitTable,
    format_dimension,
)

Mem = Union[MemVar, MemorySpace]


@dataclass(frozen=True)
class FloatT:
    dim: Dimension


@dataclass(frozen=True)
class IntT:
    pass


@dataclass(frozen=True)
class UnitT:
    pass


@dataclass(frozen=True)
class SpanT:
    elem: "TypeTerm"
    mem: Mem


@dataclass(frozen=True)
class TupleT:
    items: tuple


@dataclass(frozen=True)
class ArrowT:
    arg: "TypeTerm"
    result: "TypeTerm"


@dataclass(frozen=True)
class QuireT:
    """Dimension is that of the accumulated products."""

    dim: Dimension
    mem: Mem


@dataclass(frozen=True)
class NamedT:
    name: str


@dataclass(frozen=True)
class RefT:
    """A mutable cell; reads go through an explicit load."""

    inner: "TypeTerm"


@dataclass(frozen=True)
class TVar:
    id: int
    hint: str = field(default="", compare=False)


TypeTerm = Union[FloatT, IntT, UnitT, SpanT, TupleT, ArrowT, QuireT, NamedT, RefT, TVar]

INT = IntT()
UNIT = UnitT()


def arrow(*ts: TypeTerm) -> TypeTerm:
    out = ts[-1]
    for t in reversed(ts[:-1]):
        out = ArrowT(t, out)
    return out


def uncurry(t: TypeTerm) -> tuple[list[TypeTerm], TypeTerm]:
    args = []
    while isinstance(t, ArrowT):
        args.append(t.arg)
        t = t.result
    return args, t


def type_vars(t: TypeTerm) -> set[TVar]:
    if isinstance(t, TVar):
        return {t}
    return set().union(*(type_vars(c) for c in _kids(t))) if _kids(t) else set()


def dim_vars(t: TypeTerm) -> set[DimVar]:
    out: set[DimVar] = set()
    if isinstance(t, (FloatT, QuireT)):
        out |= t.dim.free_vars()
    for c in _kids(t):
        out |= dim_vars(c)
    return out


def mem_vars(t: TypeTerm) -> set[MemVar]:
    out: set[MemVar] = set()
    if isinstance(t, (SpanT, QuireT)) and isinstance(t.mem, MemVar):
        out.add(t.mem)
    for c in _kids(t):
        out |= mem_vars(c)
    return out


def _kids(t: TypeTerm) -> tuple:
    if isinstance(t, SpanT):
        return (t.elem,)
    if isinstance(t, TupleT):
        return t.items
    if isinstance(t, ArrowT):
        return (t.arg, t.result)
    if isinstance(t, RefT):
        return (t.inner,)
    return ()


def map_type(t: TypeTerm, tv=None, dim=None, mem=None) -> TypeTerm:
    """Rebuild `t` applying optional leaf transforms for type vars, dimensions and memory."""
    if isinstance(t, TVar):
        return tv(t) if tv else t
    if isinstance(t, FloatT):
        return FloatT(dim(t.dim)) if dim else t
    if isinstance(t, QuireT):
        return QuireT(dim(t.dim) if dim else t.dim, mem(t.mem) if mem else t.mem)
    if isinstance(t, SpanT):
        return SpanT(map_type(t.elem, tv, dim, mem), mem(t.mem) if mem else t.mem)
    if isinstance(t, TupleT):
        return TupleT(tuple(map_type(x, tv, dim, mem) for x in t.items))
    if isinstance(t, ArrowT):
        return ArrowT(map_type(t.arg, tv, dim, mem), map_type(t.result, tv, dim, mem))
    if isinstance(t, RefT):
        return RefT(map_type(t.inner, tv, dim, mem))
    return t


def strip_ref(t: TypeTerm) -> TypeTerm:
    return t.inner if isinstance(t, RefT) else t


def type_dimension(t: TypeTerm) -> Dimension | None:
    """The dimension a value of this type carries, if any."""
    t = strip_ref(t)
    if isinstance(t, (FloatT, QuireT)):
        return t.dim
    if isinstance(t, SpanT):
        return type_dimension(t.elem)
    return None


@dataclass(frozen=True)
class TypeScheme:
    type_vars: frozenset
    dim_vars: frozenset
    mem_vars: frozenset
    body: TypeTerm

    @classmethod
    def mono(cls, t: TypeTerm) -> TypeScheme:
        return cls(frozenset(), frozenset(), frozenset(), t)

    def __str__(self) -> str:
        return format_scheme(self)


# -- rendering ---------------------------------------------------------------------


class _Namer:
    def __init__(self):
        self.tv: dict[TVar, str] = {}
        self.dv: dict[DimVar, str] = {}
        self.used: set[str] = set()

    def type_name(self, v: TVar) -> str:
        if v not in self.tv:
            i = len(self.tv)
            self.tv[v] = "'" + (chr(ord("a") + i) if i < 26 else f"t{i}")
        return self.tv[v]

    def dim_name(self, v: DimVar) -> str:
        if v not in self.dv:
            base = v.name or "d"
            if base != "d" and not base.startswith("d_"):
                base = "d_" + base
            name, k = base, 2
            while name in self.used:
                name, k = f"{base}{k}", k + 1
            self.used.add(name)
            self.dv[v] = name
        return self.dv[v]


def format_dim(d: Dimension, units: UnitTable | None = DEFAULT_UNITS, namer: _Namer | None = None, unicode: bool = False) -> str:
    if d.is_ground():
        return format_dimension(d, units, unicode)
    namer = namer or _Namer()
    renamed = Dimension(d.vector, {DimVar(v.id, namer.dim_name(v)): k for v, k in d.variables.items()})
    return format_dimension(renamed, None, unicode)


def format_type(t: TypeTerm, units: UnitTable | None = DEFAULT_UNITS, namer: _Namer | None = None, prec: int = 0) -> str:
    namer = namer or _Namer()
    if isinstance(t, FloatT):
        if t.dim.is_dimensionless():
            return "float"
        return f"float<{format_dim(t.dim, units, namer)}>"
    if isinstance(t, QuireT):
        return f"Quire<{format_dim(t.dim, units, namer)}>"
    if isinstance(t, IntT):
        return "int"
    if isinstance(t, UnitT):
        return "unit"
    if isinstance(t, NamedT):
        return t.name
    if isinstance(t, TVar):
        return namer.type_name(t)
    if isinstance(t, SpanT):
        return f"Span<{format_type(t.elem, units, namer)}>"
    if isinstance(t, RefT):
        return f"ref {format_type(t.inner, units, namer, 2)}"
    if isinstance(t, TupleT):
        s = " * ".join(format_type(x, units, namer, 2) for x in t.items)
        return f"({s})" if prec >= 2 else s
    if isinstance(t, ArrowT):
        s = f"{format_type(t.arg, units, namer, 1)} -> {format_type(t.result, units, namer, 0)}"
        return f"({s})" if prec >= 1 else s
    raise TypeError(t)


def format_scheme(s: TypeScheme, units: UnitTable | None = DEFAULT_UNITS) -> str:
    return format_type(s.body, units, _Namer())
