"""AST for Clef-lite.

Nodes compare structurally; source spans are excluded from equality so
that pretty-print round trips can be checked with ``==``. Nodes are not
hashable: analyses key side tables by ``id(node)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, is_dataclass
from typing import Iterator, Union


@dataclass(frozen=True)
class Loc:
    """1-based, end-exclusive source region."""

    line: int
    col: int
    end_line: int
    end_col: int

    def contains(self, other: Loc) -> bool:
        return (self.line, self.col) <= (other.line, other.col) and (
            other.end_line,
            other.end_col,
        ) <= (self.end_line, self.end_col)

    def merge(self, other: Loc) -> Loc:
        start = min((self.line, self.col), (other.line, other.col))
        end = max((self.end_line, self.end_col), (other.end_line, other.end_col))
        return Loc(start[0], start[1], end[0], end[1])

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NOLOC = Loc(0, 0, 0, 0)


def _loc() -> Loc:
    return field(default=NOLOC, compare=False, repr=False)


# -- dimension expressions ---------------------------------------------------


@dataclass(eq=True)
class DUnit:
    name: str
    span: Loc = _loc()


@dataclass(eq=True)
class DVar:
    name: str
    span: Loc = _loc()


@dataclass(eq=True)
class DOne:
    span: Loc = _loc()


@dataclass(eq=True)
class DMul:
    left: DimExpr
    right: DimExpr
    span: Loc = _loc()


@dataclass(eq=True)
class DDiv:
    left: DimExpr
    right: DimExpr
    span: Loc = _loc()


@dataclass(eq=True)
class DPow:
    base: DimExpr
    exponent: int
    span: Loc = _loc()


DimExpr = Union[DUnit, DVar, DOne, DMul, DDiv, DPow]


# -- type expressions ----------------------------------------------------------


@dataclass(eq=True)
class TFloat:
    dim: DimExpr | None = None
    memory: str | None = None
    span: Loc = _loc()


@dataclass(eq=True)
class TInt:
    memory: str | None = None
    span: Loc = _loc()


@dataclass(eq=True)
class TUnit:
    memory: str | None = None
    span: Loc = _loc()


@dataclass(eq=True)
class TSpan:
    elem: TypeExpr
    memory: str | None = None
    span: Loc = _loc()


@dataclass(eq=True)
class TQuire:
    dim: DimExpr | None = None
    memory: str | None = None
    span: Loc = _loc()


@dataclass(eq=True)
class TArrow:
    arg: TypeExpr
    result: TypeExpr
    memory: str | None = None
    span: Loc = _loc()


@dataclass(eq=True)
class TTuple:
    items: list
    memory: str | None = None
    span: Loc = _loc()


@dataclass(eq=True)
class TVarE:
    name: str
    memory: str | None = None
    span: Loc = _loc()


@dataclass(eq=True)
class TNamed:
    name: str
    memory: str | None = None
    span: Loc = _loc()


TypeExpr = Union[TFloat, TInt, TUnit, TSpan, TQuire, TArrow, TTuple, TVarE, TNamed]


# -- attributes ----------------------------------------------------------------


@dataclass(eq=True)
class TargetAttr:
    targets: list
    span: Loc = _loc()


@dataclass(eq=True)
class MemoryAttr:
    space: str
    span: Loc = _loc()


@dataclass(eq=True)
class InlineAttr:
    span: Loc = _loc()


@dataclass(eq=True)
class RangeAttr:
    lo: float
    hi: float
    span: Loc = _loc()


@dataclass(eq=True)
class ADAttr:
    mode: str
    span: Loc = _loc()


Attribute = Union[TargetAttr, MemoryAttr, InlineAttr, RangeAttr, ADAttr]


# -- expressions ---------------------------------------------------------------


@dataclass(eq=True)
class Literal:
    value: float | int
    is_float: bool
    unit: DimExpr | None = None
    span: Loc = _loc()


@dataclass(eq=True)
class Var:
    name: str
    span: Loc = _loc()


@dataclass(eq=True)
class Param:
    name: str
    annotation: TypeExpr | None = None
    span: Loc = _loc()


@dataclass(eq=True)
class Let:
    name: str
    value: Expr
    body: Expr
    mutable: bool = False
    bang: bool = False
    annotation: TypeExpr | None = None
    memory: str | None = None
    scope: int | None = None
    span: Loc = _loc()


@dataclass(eq=True)
class Assign:
    target: Expr
    value: Expr
    span: Loc = _loc()


@dataclass(eq=True)
class Lambda:
    params: list
    body: Expr
    span: Loc = _loc()


@dataclass(eq=True)
class Apply:
    fn: Expr
    arg: Expr
    span: Loc = _loc()


@dataclass(eq=True)
class BinOp:
    op: str
    left: Expr
    right: Expr
    span: Loc = _loc()


@dataclass(eq=True)
class Neg:
    operand: Expr
    span: Loc = _loc()


@dataclass(eq=True)
class Tuple:
    items: list
    span: Loc = _loc()


@dataclass(eq=True)
class Index:
    target: Expr
    index: Expr
    span: Loc = _loc()


@dataclass(eq=True)
class ForRange:
    var: str
    lo: Expr
    hi: Expr
    body: Expr
    span: Loc = _loc()


@dataclass(eq=True)
class ArenaBlock:
    body: Expr
    span: Loc = _loc()


@dataclass(eq=True)
class Return:
    value: Expr
    span: Loc = _loc()


@dataclass(eq=True)
class Annotated:
    expr: Expr
    annotation: TypeExpr
    span: Loc = _loc()


@dataclass(eq=True)
class Seq:
    first: Expr
    rest: Expr
    span: Loc = _loc()


@dataclass(eq=True)
class ArenaScope:
    """What an `arena { ... }` block becomes after desugaring."""

    scope: int
    body: Expr
    span: Loc = _loc()


@dataclass(eq=True)
class Load:
    """Explicit read of a mutable cell, inserted by lvalue resolution."""

    target: Expr
    span: Loc = _loc()


Expr = Union[
    Literal, Var, Let, Assign, Lambda, Apply, BinOp, Neg, Tuple, Index,
    ForRange, ArenaBlock, Return, Annotated, Seq, ArenaScope, Load,
]


def unit_value(span: Loc = NOLOC) -> Tuple:
    return Tuple([], span)


# -- top level -----------------------------------------------------------------


@dataclass(eq=True)
class Binding:
    name: str
    params: list
    body: Expr
    return_annotation: TypeExpr | None = None
    attrs: list = field(default_factory=list)
    span: Loc = _loc()

    def attr(self, kind: type):
        for a in self.attrs:
            if isinstance(a, kind):
                return a
        return None


@dataclass(eq=True)
class Extern:
    """``val name : type`` declares a name supplied from outside the program."""

    name: str
    annotation: TypeExpr
    span: Loc = _loc()


@dataclass(eq=True)
class Program:
    decls: list

    @property
    def bindings(self) -> list[Binding]:
        return [d for d in self.decls if isinstance(d, Binding)]

    @property
    def externs(self) -> list[Extern]:
        return [d for d in self.decls if isinstance(d, Extern)]

    def binding(self, name: str) -> Binding:
        for b in self.bindings:
            if b.name == name:
                return b
        raise KeyError(name)


EXPR_TYPES = (
    Literal, Var, Let, Assign, Lambda, Apply, BinOp, Neg, Tuple, Index,
    ForRange, ArenaBlock, Return, Annotated, Seq, ArenaScope, Load,
)


def children(node) -> Iterator:
    """Direct sub-expressions in source order."""
    if not is_dataclass(node):
        return
    for f in fields(node):
        if f.name == "span":
            continue
        v = getattr(node, f.name)
        if isinstance(v, EXPR_TYPES):
            yield v
        elif isinstance(v, list):
            for x in v:
                if isinstance(x, EXPR_TYPES):
                    yield x


def walk(node) -> Iterator:
    """Pre-order traversal of an expression tree."""
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        stack.extend(reversed(list(children(n))))
