"""Dimensional algebra over the free abelian group Z^7.

A `Dimension` is a product of SI base dimensions and dimension variables
raised to integer powers. Unification of dimension equations uses
Kennedy-style elimination: pick the variable with the smallest absolute
exponent, divide through when possible, otherwise perform a unimodular
change of variables that shrinks the remaining exponents.

Memory spaces form a separate enumeration sort with equality unification
only (`mem_unify`).
"""

from __future__ import annotations

import itertools
import re
import threading
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping

BASE_NAMES = (
    "length",
    "time",
    "mass",
    "temperature",
    "current",
    "luminous_intensity",
    "amount",
)
BASE_SYMBOLS = ("m", "s", "kg", "K", "A", "cd", "mol")
N_BASE = len(BASE_NAMES)

# m, kg, s first: matches the usual "m^3 * kg^-1 * s^-2" spelling.
DISPLAY_ORDER = (0, 2, 1, 3, 4, 6, 5)

_SUPERSCRIPTS = str.maketrans("-0123456789", "⁻⁰¹²³⁴⁵⁶⁷⁸⁹")


@dataclass(frozen=True)
class DimVar:
    id: int
    name: str = field(default="", compare=False)
    origin: object = field(default=None, compare=False, repr=False)

    def __str__(self) -> str:
        return f"'{self.name}" if self.name else f"'d{self.id}"


class DimVarSupply:
    """Fresh dimension variables for one inference session."""

    def __init__(self, start: int = 0):
        self._counter = itertools.count(start)
        self._lock = threading.Lock()

    def fresh(self, name: str = "", origin: object = None) -> DimVar:
        with self._lock:
            return DimVar(next(self._counter), name, origin)


class Dimension:
    """Canonical exponent vector plus variable exponents. Immutable."""

    __slots__ = ("_base", "_vars", "_hash")

    def __init__(self, base: Iterable[int] = (), variables: Mapping[DimVar, int] | None = None):
        b = list(base)
        if len(b) > N_BASE:
            raise ValueError(f"at most {N_BASE} base exponents")
        b.extend([0] * (N_BASE - len(b)))
        self._base = tuple(int(x) for x in b)
        vs = {v: int(k) for v, k in (variables or {}).items() if k}
        self._vars = tuple(sorted(vs.items(), key=lambda item: item[0].id))
        self._hash = hash((self._base, self._vars))

    # constructors

    @classmethod
    def dimensionless(cls) -> Dimension:
        return _ONE

    @classmethod
    def of(cls, **exponents: int) -> Dimension:
        base = [0] * N_BASE
        for name, k in exponents.items():
            base[BASE_NAMES.index(name)] = k
        return cls(base)

    @classmethod
    def var(cls, v: DimVar, k: int = 1) -> Dimension:
        return cls((), {v: k})

    # accessors

    @property
    def vector(self) -> tuple[int, ...]:
        return self._base

    @property
    def exponents(self) -> dict[int, int]:
        return {i: k for i, k in enumerate(self._base) if k}

    @property
    def variables(self) -> dict[DimVar, int]:
        return dict(self._vars)

    def exponent_of(self, v: DimVar) -> int:
        for w, k in self._vars:
            if w == v:
                return k
        return 0

    def free_vars(self) -> set[DimVar]:
        return {v for v, _ in self._vars}

    def is_dimensionless(self) -> bool:
        return not self._vars and not any(self._base)

    def is_ground(self) -> bool:
        return not self._vars

    # group operations

    def __mul__(self, other: Dimension) -> Dimension:
        vs = dict(self._vars)
        for v, k in other._vars:
            vs[v] = vs.get(v, 0) + k
        return Dimension((a + b for a, b in zip(self._base, other._base)), vs)

    def __truediv__(self, other: Dimension) -> Dimension:
        return self * other ** -1

    def __pow__(self, k: int) -> Dimension:
        if not isinstance(k, int):
            raise TypeError("dimension exponents must be integers")
        return Dimension((a * k for a in self._base), {v: e * k for v, e in self._vars})

    def inverse(self) -> Dimension:
        return self ** -1

    def substitute(self, bindings: Mapping[DimVar, Dimension]) -> Dimension:
        if not bindings or not self._vars:
            return self
        out = Dimension(self._base)
        kept: dict[DimVar, int] = {}
        for v, k in self._vars:
            if v in bindings:
                out = out * bindings[v] ** k
            else:
                kept[v] = k
        return out * Dimension((), kept)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dimension):
            return NotImplemented
        return self._base == other._base and self._vars == other._vars

    def __hash__(self) -> int:
        return self._hash

    def __repr__(self) -> str:
        return f"Dimension({format_dimension(self)})"

    def __str__(self) -> str:
        return format_dimension(self)


_ONE = Dimension()


def dim_mul(a: Dimension, b: Dimension) -> Dimension:
    return a * b


def dim_div(a: Dimension, b: Dimension) -> Dimension:
    return a * b ** -1


def dim_pow(a: Dimension, k: int) -> Dimension:
    return a ** k


def gradient_dimension(d_out: Dimension, d_in: Dimension) -> Dimension:
    """Dimension of the derivative of an output with respect to an input."""
    return dim_div(d_out, d_in)


def format_dimension(d: Dimension, units: UnitTable | None = None, unicode: bool = False) -> str:
    if units is not None:
        name = units.display_name(d)
        if name is not None:
            return name
    factors: list[tuple[str, int]] = []
    for i in DISPLAY_ORDER:
        if d.vector[i]:
            factors.append((BASE_SYMBOLS[i], d.vector[i]))
    factors.extend((str(v), k) for v, k in d.variables.items())
    if not factors:
        return "1"
    if unicode:
        return "·".join(s if k == 1 else s + str(k).translate(_SUPERSCRIPTS) for s, k in factors)
    return " * ".join(s if k == 1 else f"{s}^{k}" for s, k in factors)


# ---------------------------------------------------------------------------
# unit aliases


@dataclass(frozen=True)
class UnitAlias:
    name: str
    dimension: Dimension
    scale: float = 1.0
    display: bool = False


_BUILTIN_UNITS = [
    # name, spec, scale, display
    ("m", "length:1", 1.0, True),
    ("meter", "length:1", 1.0, False),
    ("meters", "length:1", 1.0, False),
    ("metre", "length:1", 1.0, False),
    ("km", "length:1", 1e3, False),
    # SI-accepted astronomical unit; the only built-in rescaling alias for length.
    ("AU", "length:1", 1.495978707e11, False),
    ("s", "time:1", 1.0, True),
    ("second", "time:1", 1.0, False),
    ("seconds", "time:1", 1.0, False),
    ("kg", "mass:1", 1.0, True),
    ("kilograms", "mass:1", 1.0, False),
    ("g", "mass:1", 1e-3, False),
    ("K", "temperature:1", 1.0, True),
    ("kelvin", "temperature:1", 1.0, False),
    # no affine offset: celsius is temperature^1
    ("celsius", "temperature:1", 1.0, False),
    ("A", "current:1", 1.0, True),
    ("amperes", "current:1", 1.0, False),
    ("cd", "luminous_intensity:1", 1.0, True),
    ("mol", "amount:1", 1.0, True),
    ("N", "length:1 time:-2 mass:1", 1.0, False),
    ("newtons", "length:1 time:-2 mass:1", 1.0, True),
    ("J", "length:2 time:-2 mass:1", 1.0, False),
    ("joules", "length:2 time:-2 mass:1", 1.0, True),
    ("W", "length:2 time:-3 mass:1", 1.0, False),
    ("watts", "length:2 time:-3 mass:1", 1.0, True),
    ("Pa", "length:-1 time:-2 mass:1", 1.0, False),
    ("pascals", "length:-1 time:-2 mass:1", 1.0, True),
]

_SPEC_TOKEN = re.compile(r"^(?P<base>[a-z_]+):(?P<exp>[+-]?\d+)$")


def parse_unit_spec(spec: str) -> tuple[Dimension, float, bool]:
    """Parse ``"length:1 time:-2 mass:1 [scale=1.5e11] [display]"``."""
    base = [0] * N_BASE
    scale = 1.0
    display = False
    for tok in spec.split():
        if tok.startswith("scale="):
            scale = float(tok[len("scale="):])
            continue
        if tok == "display":
            display = True
            continue
        m = _SPEC_TOKEN.match(tok)
        if not m or m["base"] not in BASE_NAMES:
            raise ValueError(f"bad unit component {tok!r}")
        base[BASE_NAMES.index(m["base"])] += int(m["exp"])
    return Dimension(base), scale, display


def format_unit_spec(alias: UnitAlias) -> str:
    parts = [f"{BASE_NAMES[i]}:{k}" for i, k in alias.dimension.exponents.items()]
    if alias.scale != 1.0:
        parts.append(f"scale={alias.scale!r}")
    if alias.display:
        parts.append("display")
    return " ".join(parts)


class UnitTable:
    """Named aliases expanding to exponent vectors, extensible from config."""

    def __init__(self, builtin: bool = True):
        self._aliases: dict[str, UnitAlias] = {}
        if builtin:
            for name, spec, scale, display in _BUILTIN_UNITS:
                dim, _, _ = parse_unit_spec(spec)
                self._aliases[name] = UnitAlias(name, dim, scale, display)

    def define(self, name: str, spec: str | Dimension, scale: float = 1.0, display: bool = False) -> None:
        if isinstance(spec, str):
            dim, scale, display = parse_unit_spec(spec)
        else:
            dim = spec
        self._aliases[name] = UnitAlias(name, dim, scale, display)

    def lookup(self, name: str) -> UnitAlias | None:
        return self._aliases.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self._aliases

    def __iter__(self) -> Iterator[UnitAlias]:
        return iter(self._aliases.values())

    def display_name(self, d: Dimension) -> str | None:
        for a in self._aliases.values():
            if a.display and a.scale == 1.0 and a.dimension == d:
                return a.name
        return None

    def rescalings(self, d: Dimension) -> list[UnitAlias]:
        """Aliases for `d` with a non-unit scale factor."""
        return [a for a in self._aliases.values() if a.dimension == d and a.scale != 1.0]

    def prefer(self, names: Iterable[str]) -> UnitTable:
        """Copy in which the given unscaled aliases win when rendering."""
        t = UnitTable(builtin=False)
        first = {}
        for n in names:
            a = self._aliases.get(n)
            if a is not None and a.scale == 1.0 and n not in first:
                first[n] = UnitAlias(a.name, a.dimension, 1.0, True)
        t._aliases = {**first, **{k: v for k, v in self._aliases.items() if k not in first}}
        return t

    def copy(self) -> UnitTable:
        t = UnitTable(builtin=False)
        t._aliases = dict(self._aliases)
        return t


DEFAULT_UNITS = UnitTable()


# ---------------------------------------------------------------------------
# unification


@dataclass(frozen=True)
class DimEquation:
    lhs: Dimension
    rhs: Dimension
    origin: object = field(default=None, compare=False)

    def residual(self) -> Dimension:
        return self.lhs / self.rhs


class Inconsistent(Exception):
    """No solution exists. `residual` is lhs/rhs after substitution."""

    def __init__(self, equation, residual: Dimension | None = None, related: tuple = ()):
        self.equation = equation
        self.residual = residual
        self.related = tuple(related)
        detail = f" (left over: {format_dimension(residual, unicode=True)})" if residual is not None else ""
        super().__init__(f"cannot satisfy {equation.lhs} = {equation.rhs}{detail}")


class DimSubstitution(Mapping[DimVar, Dimension]):
    """Idempotent mapping from dimension variables to dimensions."""

    def __init__(self, bindings: Mapping[DimVar, Dimension] | None = None):
        self._b = dict(bindings or {})

    def __getitem__(self, v: DimVar) -> Dimension:
        return self._b[v]

    def __iter__(self):
        return iter(self._b)

    def __len__(self) -> int:
        return len(self._b)

    def apply(self, d: Dimension) -> Dimension:
        return d.substitute(self._b)

    def __repr__(self) -> str:
        inner = ", ".join(f"{v} := {d}" for v, d in sorted(self._b.items(), key=lambda kv: kv[0].id))
        return f"DimSubstitution({{{inner}}})"


class _NoSolution(Exception):
    pass


def _pivot(u: Dimension) -> tuple[DimVar, int]:
    # smallest |exponent|; newest variable on ties keeps older (user-facing) ones free
    return min(u.variables.items(), key=lambda vk: (abs(vk[1]), -vk[0].id))


def _solve_one(u: Dimension, supply: DimVarSupply) -> list[tuple[DimVar, Dimension]]:
    """Bindings making `u` dimensionless, in dependency order."""
    out: list[tuple[DimVar, Dimension]] = []
    while True:
        if u.is_ground():
            if u.is_dimensionless():
                return out
            raise _NoSolution(u)
        x, ex = _pivot(u)
        others = {v: k for v, k in u.variables.items() if v != x}
        if all(k % ex == 0 for k in others.values()):
            if any(c % ex for c in u.vector):
                raise _NoSolution(u)
            rhs = Dimension((-c // ex for c in u.vector), {v: -k // ex for v, k in others.items()})
            out.append((x, rhs))
            return out
        z = supply.fresh(x.name, x.origin)
        rhs = Dimension((), {z: 1, **{v: -(k // ex) for v, k in others.items()}})
        out.append((x, rhs))
        u = u.substitute({x: rhs})


def dim_unify(
    constraints: Iterable[DimEquation | tuple[Dimension, Dimension]],
    supply: DimVarSupply | None = None,
) -> DimSubstitution:
    """Most general integer solution of a system of dimension equations.

    Raises `Inconsistent` naming the first equation that cannot be satisfied
    together with the origins of earlier equations that fed into it.
    """
    eqs = [c if isinstance(c, DimEquation) else DimEquation(*c) for c in constraints]
    if supply is None:
        top = max((v.id for e in eqs for v in e.lhs.free_vars() | e.rhs.free_vars()), default=-1)
        supply = DimVarSupply(top + 1)
    subst: dict[DimVar, Dimension] = {}
    origins: dict[DimVar, frozenset] = {}
    for eq in eqs:
        raw = eq.residual()
        related = frozenset().union(*(origins.get(v, frozenset()) for v in raw.free_vars()))
        u = raw.substitute(subst)
        try:
            new = _solve_one(u, supply)
        except _NoSolution:
            rel = tuple(o for o in related if o is not None and o is not eq.origin)
            raise Inconsistent(eq, u, rel) from None
        mine = related | {eq.origin}
        for v, rhs in new:
            rhs = rhs.substitute(subst)
            for k in subst:
                subst[k] = subst[k].substitute({v: rhs})
            subst[v] = rhs
            origins[v] = mine
    return DimSubstitution(subst)


# ---------------------------------------------------------------------------
# memory sort


@dataclass(frozen=True)
class MemorySpace:
    tag: str
    target: str | None = None

    def __str__(self) -> str:
        return self.tag if self.target is None else f"{self.tag}@{self.target}"


STACK = MemorySpace("stack")
ARENA = MemorySpace("arena")
HEAP = MemorySpace("heap")
STATIC = MemorySpace("static")
FABRIC = MemorySpace("fabric")
SCRATCHPAD = MemorySpace("scratchpad")
STANDARD_MEMORY = (STACK, ARENA, HEAP, STATIC, FABRIC, SCRATCHPAD)


@dataclass(frozen=True)
class MemVar:
    id: int
    name: str = field(default="", compare=False)

    def __str__(self) -> str:
        return f"'mu{self.id}" if not self.name else f"'{self.name}"


@dataclass(frozen=True)
class MemEquation:
    lhs: MemVar | MemorySpace
    rhs: MemVar | MemorySpace
    origin: object = field(default=None, compare=False)


def mem_unify(constraints: Iterable[MemEquation | tuple]) -> dict[MemVar, MemVar | MemorySpace]:
    """Equality unification over the finite memory-space domain.

    Every variable in the input maps to its resolved constant, or to the
    representative variable of its class when no constant was given.
    """
    parent: dict[MemVar, MemVar] = {}
    const: dict[MemVar, MemorySpace] = {}

    def find(v: MemVar) -> MemVar:
        parent.setdefault(v, v)
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for c in constraints:
        eq = c if isinstance(c, MemEquation) else MemEquation(*c)
        a, b = eq.lhs, eq.rhs
        if isinstance(a, MemorySpace) and isinstance(b, MemorySpace):
            if a != b:
                raise Inconsistent(eq)
            continue
        if isinstance(a, MemorySpace):
            a, b = b, a
        ra = find(a)
        if isinstance(b, MemorySpace):
            if ra in const and const[ra] != b:
                raise Inconsistent(eq)
            const[ra] = b
            continue
        rb = find(b)
        if ra == rb:
            continue
        ca, cb = const.get(ra), const.get(rb)
        if ca is not None and cb is not None and ca != cb:
            raise Inconsistent(eq)
        # older variable stays representative
        if rb.id < ra.id:
            ra, rb = rb, ra
        parent[rb] = ra
        if cb is not None:
            const[ra] = cb
        const.pop(rb, None)
    return {v: const.get(find(v), find(v)) for v in list(parent)}
