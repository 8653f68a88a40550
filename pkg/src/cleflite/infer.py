"""Hindley-Milner inference extended with dimensions and memory sorts.

Structural unification happens eagerly; dimension and memory equations
are collected and solved per top-level binding by `dims.dim_unify` and
`dims.mem_unify`. Arithmetic is overloaded over int and float, so each
operator leaves a deferred constraint that fires once an operand's type
is known. Operands still unknown when the binding is finished default to
float with a fresh dimension.
"""

from __future__ import annotations

import copy
import itertools
from dataclasses import dataclass, field

from . import types as T
from .dims import (
    DEFAULT_UNITS,
    Dimension,
    DimEquation,
    DimSubstitution,
    DimVarSupply,
    Inconsistent,
    MemEquation,
    MemorySpace,
    MemVar,
    UnitTable,
    dim_unify,
    mem_unify,
)
from .syntax import ast as A
from .syntax.desugar import desugar
from .syntax.parser import parse_type


class InferenceError(Exception):
    def __init__(self, message: str, span: A.Loc, related: tuple = ()):
        self.message = message
        self.span = span
        self.related = tuple(related)
        super().__init__(f"{span}: {message}")


class TypeMismatch(InferenceError):
    pass


class UnboundVariable(InferenceError):
    pass


class UnknownUnit(InferenceError):
    pass


class DimensionError(InferenceError):
    def __init__(self, message: str, span: A.Loc, related: tuple, residual: Dimension | None):
        super().__init__(message, span, related)
        self.residual = residual


@dataclass(frozen=True)
class Origin:
    """Where a constraint came from."""

    span: A.Loc
    what: str
    related: tuple = ()


PRELUDE_SIGNATURES = {
    "Span.map": "('a -> 'b) -> Span<'a> -> Span<'b>",
    "Span.mapInto": "Span<'b> -> ('a -> 'b) -> Span<'a> -> unit",
    "Span.Length": "Span<'a> -> int",
    "Span.sum": "Span<float<'u>> -> float<'u>",
    "Quire.zero": "Quire<'u>",
    "Quire.fma": "Quire<'u * 'v> -> float<'u> -> float<'v> -> Quire<'u * 'v>",
    "Quire.toPosit": "Quire<'u> -> float<'u>",
}

# binder recorded for names resolved to the prelude
PRELUDE = "prelude"


@dataclass
class _Arith:
    op: str
    left: T.TypeTerm
    right: T.TypeTerm | None
    result: T.TypeTerm
    node: A.Expr
    origin: Origin


@dataclass
class BindingInfo:
    name: str
    scheme: T.TypeScheme
    equations: list
    substitution: DimSubstitution
    mem_solution: dict


@dataclass
class TypedProgram:
    program: A.Program
    schemes: dict
    externs: dict
    node_types: dict
    binder_types: dict
    refs: dict
    instantiations: dict
    bindings: dict
    units: UnitTable = field(default=DEFAULT_UNITS)
    display_units: UnitTable = field(default=DEFAULT_UNITS)

    def type_of(self, node) -> T.TypeTerm:
        return self.node_types[id(node)]

    def binder_type(self, binder) -> T.TypeTerm:
        return self.binder_types[id(binder)]

    def binder_of(self, var: A.Var):
        return self.refs.get(id(var))

    def verify(self) -> bool:
        """Apply each binding's solution to its equations and check equality."""
        for info in self.bindings.values():
            for eq in info.equations:
                if info.substitution.apply(eq.lhs) != info.substitution.apply(eq.rhs):
                    return False
        return True


class _Env:
    def __init__(self, parent: _Env | None = None):
        self.parent = parent
        self.vars: dict[str, tuple[T.TypeScheme, object]] = {}

    def lookup(self, name: str):
        e = self
        while e is not None:
            if name in e.vars:
                return e.vars[name]
            e = e.parent
        return None

    def extend(self) -> _Env:
        return _Env(self)


class _Session:
    def __init__(self, units: UnitTable):
        self.units = units
        self.tv_ids = itertools.count()
        self.mv_ids = itertools.count()
        self.dims = DimVarSupply()
        self.tsub: dict[int, T.TypeTerm] = {}
        self.node_types: dict[int, T.TypeTerm] = {}
        self.binder_types: dict[int, T.TypeTerm] = {}
        self.refs: dict[int, object] = {}
        self.insts: dict[int, tuple] = {}
        self.keep: list = []
        self.used_units: list[str] = []
        self._reset()

    def _reset(self):
        self.dim_eqs: list[DimEquation] = []
        self.mem_eqs: list[MemEquation] = []
        self.pending: list[_Arith] = []
        self.local_nodes: list[int] = []
        self.local_binders: list[int] = []
        self.local_insts: list[int] = []

    # -- fresh variables ---------------------------------------------------

    def fresh_tv(self, hint: str = "") -> T.TVar:
        return T.TVar(next(self.tv_ids), hint)

    def fresh_dim(self, hint: str = "") -> Dimension:
        return Dimension.var(self.dims.fresh(hint))

    def fresh_mem(self) -> MemVar:
        return MemVar(next(self.mv_ids))

    # -- substitution ------------------------------------------------------

    def prune(self, t: T.TypeTerm) -> T.TypeTerm:
        while isinstance(t, T.TVar) and t.id in self.tsub:
            t = self.tsub[t.id]
        return t

    def zonk(self, t: T.TypeTerm) -> T.TypeTerm:
        return T.map_type(self.prune(t), tv=lambda v: self._zonk_var(v))

    def _zonk_var(self, v: T.TVar) -> T.TypeTerm:
        p = self.prune(v)
        return p if isinstance(p, T.TVar) else self.zonk(p)

    def occurs(self, v: T.TVar, t: T.TypeTerm) -> bool:
        return v in T.type_vars(self.zonk(t))

    def unify(self, a: T.TypeTerm, b: T.TypeTerm, origin: Origin) -> None:
        a, b = self.prune(a), self.prune(b)
        if isinstance(a, T.TVar) and isinstance(b, T.TVar) and a.id == b.id:
            return
        if isinstance(a, T.TVar):
            self._bind(a, b, origin)
            return
        if isinstance(b, T.TVar):
            self._bind(b, a, origin)
            return
        if isinstance(a, T.FloatT) and isinstance(b, T.FloatT):
            self.dim_eqs.append(DimEquation(a.dim, b.dim, origin))
            return
        if isinstance(a, T.QuireT) and isinstance(b, T.QuireT):
            self.dim_eqs.append(DimEquation(a.dim, b.dim, origin))
            self.mem_eqs.append(MemEquation(a.mem, b.mem, origin))
            return
        if isinstance(a, T.SpanT) and isinstance(b, T.SpanT):
            self.unify(a.elem, b.elem, origin)
            self.mem_eqs.append(MemEquation(a.mem, b.mem, origin))
            return
        if isinstance(a, T.ArrowT) and isinstance(b, T.ArrowT):
            self.unify(a.arg, b.arg, origin)
            self.unify(a.result, b.result, origin)
            return
        if isinstance(a, T.TupleT) and isinstance(b, T.TupleT) and len(a.items) == len(b.items):
            for x, y in zip(a.items, b.items):
                self.unify(x, y, origin)
            return
        if isinstance(a, T.RefT) and isinstance(b, T.RefT):
            self.unify(a.inner, b.inner, origin)
            return
        if type(a) is type(b) and isinstance(a, (T.IntT, T.UnitT)):
            return
        if isinstance(a, T.NamedT) and isinstance(b, T.NamedT) and a.name == b.name:
            return
        raise TypeMismatch(
            f"type mismatch: {T.format_type(self.zonk(a), self.units)} vs {T.format_type(self.zonk(b), self.units)}",
            origin.span,
            origin.related,
        )

    def _bind(self, v: T.TVar, t: T.TypeTerm, origin: Origin) -> None:
        if self.occurs(v, t):
            raise TypeMismatch("infinite type", origin.span, origin.related)
        self.tsub[v.id] = t

    # -- annotations -----------------------------------------------------

    def dim_of(self, d: A.DimExpr, scope: dict) -> Dimension:
        if isinstance(d, A.DOne):
            return Dimension()
        if isinstance(d, A.DUnit):
            alias = self.units.lookup(d.name)
            if alias is None:
                raise UnknownUnit(f"unknown unit {d.name!r}", d.span)
            self.used_units.append(d.name)
            return alias.dimension
        if isinstance(d, A.DVar):
            if d.name not in scope["dims"]:
                scope["dims"][d.name] = Dimension.var(self.dims.fresh(d.name))
            return scope["dims"][d.name]
        if isinstance(d, A.DPow):
            return self.dim_of(d.base, scope) ** d.exponent
        left, right = self.dim_of(d.left, scope), self.dim_of(d.right, scope)
        return left * right if isinstance(d, A.DMul) else left / right

    def type_of_ann(self, t: A.TypeExpr, scope: dict) -> T.TypeTerm:
        mem = (lambda: MemorySpace(t.memory)) if t.memory else self.fresh_mem
        if isinstance(t, A.TFloat):
            return T.FloatT(Dimension() if t.dim is None else self.dim_of(t.dim, scope))
        if isinstance(t, A.TQuire):
            return T.QuireT(self.fresh_dim("q") if t.dim is None else self.dim_of(t.dim, scope), mem())
        if isinstance(t, A.TInt):
            return T.INT
        if isinstance(t, A.TUnit):
            return T.UNIT
        if isinstance(t, A.TNamed):
            return T.NamedT(t.name)
        if isinstance(t, A.TVarE):
            if t.name not in scope["types"]:
                scope["types"][t.name] = self.fresh_tv(t.name)
            return scope["types"][t.name]
        if isinstance(t, A.TSpan):
            return T.SpanT(self.type_of_ann(t.elem, scope), mem())
        if isinstance(t, A.TTuple):
            return T.TupleT(tuple(self.type_of_ann(x, scope) for x in t.items))
        if isinstance(t, A.TArrow):
            return T.ArrowT(self.type_of_ann(t.arg, scope), self.type_of_ann(t.result, scope))
        raise TypeError(t)

    # -- schemes ---------------------------------------------------------------

    def instantiate(self, s: T.TypeScheme) -> tuple[T.TypeTerm, dict]:
        tv = {v: self.fresh_tv(v.hint) for v in s.type_vars}
        dv = {v: self.dims.fresh(v.name) for v in s.dim_vars}
        mv = {v: self.fresh_mem() for v in s.mem_vars}
        dsub = {v: Dimension.var(w) for v, w in dv.items()}
        body = T.map_type(
            s.body,
            tv=lambda v: tv.get(v, v),
            dim=lambda d: d.substitute(dsub),
            mem=lambda m: mv.get(m, m),
        )
        mapping = {**tv, **{v: Dimension.var(w) for v, w in dv.items()}, **mv}
        return body, mapping

    def generalize_closed(self, t: T.TypeTerm) -> T.TypeScheme:
        return T.TypeScheme(
            frozenset(T.type_vars(t)), frozenset(T.dim_vars(t)), frozenset(T.mem_vars(t)), t
        )

    # -- recording ---------------------------------------------------------------

    def record(self, node, t: T.TypeTerm) -> T.TypeTerm:
        self.node_types[id(node)] = t
        self.local_nodes.append(id(node))
        self.keep.append(node)
        return t

    def record_binder(self, binder, t: T.TypeTerm) -> None:
        self.binder_types[id(binder)] = t
        self.local_binders.append(id(binder))
        self.keep.append(binder)

    # -- arithmetic ---------------------------------------------------------------

    def try_arith(self, c: _Arith, force: bool = False) -> bool:
        a = self.prune(c.left)
        b = self.prune(c.right) if c.right is not None else None
        operands = [a] if b is None else [a, b]
        for x in operands:
            if not isinstance(x, (T.TVar, T.IntT, T.FloatT)):
                raise TypeMismatch(
                    f"arithmetic on non-numeric type {T.format_type(self.zonk(x), self.units)}",
                    c.origin.span,
                    c.origin.related,
                )
        if any(isinstance(x, T.IntT) for x in operands):
            for x in operands:
                self.unify(x, T.INT, c.origin)
            self.unify(c.result, T.INT, c.origin)
            return True
        if not any(isinstance(x, T.FloatT) for x in operands):
            if not force:
                return False
            self.unify(a, T.FloatT(self.fresh_dim(a.hint)), c.origin)
            a = self.prune(a)
        for x in operands:
            if isinstance(x, T.TVar):
                self.unify(x, T.FloatT(self.fresh_dim(x.hint)), c.origin)
        a = self.prune(c.left)
        if b is None:
            self.unify(c.result, a, c.origin)
            return True
        b = self.prune(c.right)
        if c.op in "+-":
            self.dim_eqs.append(DimEquation(a.dim, b.dim, c.origin))
            self.unify(c.result, T.FloatT(a.dim), c.origin)
            return True
        r = self.fresh_dim()
        rhs = a.dim * b.dim if c.op == "*" else a.dim / b.dim
        self.dim_eqs.append(DimEquation(r, rhs, c.origin))
        self.unify(c.result, T.FloatT(r), c.origin)
        return True

    def flush_arith(self) -> None:
        while self.pending:
            progressed = False
            for c in list(self.pending):
                if self.try_arith(c):
                    self.pending.remove(c)
                    progressed = True
            if not progressed:
                c = self.pending.pop(0)
                self.try_arith(c, force=True)

    # -- expressions ---------------------------------------------------------------

    def origin_of(self, node, what: str, env: _Env, operands=()) -> Origin:
        related = []
        for o in operands:
            if isinstance(o, A.Var):
                found = env.lookup(o.name)
                binder = found[1] if found else None
                span = getattr(binder, "span", None)
                related.append(span if span is not None else o.span)
            else:
                related.append(o.span)
        return Origin(node.span, what, tuple(related))

    def infer(self, e: A.Expr, env: _Env, scope: dict, hint: str = "") -> T.TypeTerm:
        if isinstance(e, A.Literal):
            if not e.is_float:
                return self.record(e, T.INT)
            if e.unit is not None:
                return self.record(e, T.FloatT(self.dim_of(e.unit, scope)))
            return self.record(e, T.FloatT(self.fresh_dim(hint or "lit")))
        if isinstance(e, A.Var):
            found = env.lookup(e.name)
            if found is None:
                raise UnboundVariable(f"unbound variable {e.name!r}", e.span)
            scheme, binder = found
            self.refs[id(e)] = binder
            if scheme.type_vars or scheme.dim_vars or scheme.mem_vars:
                t, mapping = self.instantiate(scheme)
                self.insts[id(e)] = (scheme, mapping)
                self.local_insts.append(id(e))
            else:
                t = scheme.body
            self.record(e, t)
            return t.inner if isinstance(t, T.RefT) else t
        if isinstance(e, A.Load):
            t = self.infer(e.target, env, scope)
            return self.record(e, t)
        if isinstance(e, A.BinOp):
            ta = self.infer(e.left, env, scope)
            tb = self.infer(e.right, env, scope)
            tr = self.fresh_tv()
            origin = self.origin_of(e, f"'{e.op}'", env, (e.left, e.right))
            c = _Arith(e.op, ta, tb, tr, e, origin)
            if not self.try_arith(c):
                self.pending.append(c)
            return self.record(e, tr)
        if isinstance(e, A.Neg):
            ta = self.infer(e.operand, env, scope)
            tr = self.fresh_tv()
            c = _Arith("neg", ta, None, tr, e, Origin(e.span, "negation"))
            if not self.try_arith(c):
                self.pending.append(c)
            return self.record(e, tr)
        if isinstance(e, A.Lambda):
            inner = env.extend()
            pts = [self.bind_param(p, inner, scope) for p in e.params]
            tb = self.infer(e.body, inner, scope)
            return self.record(e, T.arrow(*pts, tb))
        if isinstance(e, A.Apply):
            tf = self.infer(e.fn, env, scope)
            ta = self.infer(e.arg, env, scope)
            tr = self.fresh_tv()
            self.unify(tf, T.ArrowT(ta, tr), self.origin_of(e, "application", env, (e.fn, e.arg)))
            return self.record(e, tr)
        if isinstance(e, A.Let):
            tv = self.infer(e.value, env, scope, hint=e.name)
            if e.annotation is not None:
                self.unify(tv, self.type_of_ann(e.annotation, scope), Origin(e.span, "annotation"))
            if e.memory is not None:
                self.pin_memory(tv, MemorySpace(e.memory), Origin(e.span, "memory"))
            bt = T.RefT(tv) if e.mutable else tv
            self.record_binder(e, bt)
            inner = env.extend()
            inner.vars[e.name] = (T.TypeScheme.mono(bt), e)
            return self.record(e, self.infer(e.body, inner, scope))
        if isinstance(e, A.Assign):
            tval = self.infer(e.value, env, scope)
            if isinstance(e.target, A.Var):
                found = env.lookup(e.target.name)
                if found is None:
                    raise UnboundVariable(f"unbound variable {e.target.name!r}", e.target.span)
                scheme, binder = found
                if not isinstance(scheme.body, T.RefT):
                    raise TypeMismatch(f"{e.target.name!r} is not mutable", e.target.span, (getattr(binder, "span", e.span),))
                self.refs[id(e.target)] = binder
                self.record(e.target, scheme.body)
                self.unify(scheme.body.inner, tval, Origin(e.span, "assignment"))
            else:
                tt = self.infer(e.target, env, scope)
                self.unify(tt, tval, Origin(e.span, "assignment"))
            return self.record(e, T.UNIT)
        if isinstance(e, A.Tuple):
            if not e.items:
                return self.record(e, T.UNIT)
            return self.record(e, T.TupleT(tuple(self.infer(x, env, scope) for x in e.items)))
        if isinstance(e, A.Index):
            tt = self.infer(e.target, env, scope)
            ti = self.infer(e.index, env, scope)
            self.unify(ti, T.INT, Origin(e.index.span, "index"))
            elem = self.fresh_tv()
            self.unify(tt, T.SpanT(elem, self.fresh_mem()), Origin(e.span, "indexing"))
            return self.record(e, elem)
        if isinstance(e, A.ForRange):
            o = Origin(e.span, "loop bounds")
            self.unify(self.infer(e.lo, env, scope), T.INT, o)
            self.unify(self.infer(e.hi, env, scope), T.INT, o)
            inner = env.extend()
            inner.vars[e.var] = (T.TypeScheme.mono(T.INT), e)
            self.record_binder(e, T.INT)
            self.infer(e.body, inner, scope)
            return self.record(e, T.UNIT)
        if isinstance(e, A.Seq):
            self.infer(e.first, env, scope)
            return self.record(e, self.infer(e.rest, env, scope))
        if isinstance(e, A.ArenaScope):
            return self.record(e, self.infer(e.body, env, scope))
        if isinstance(e, A.Return):
            return self.record(e, self.infer(e.value, env, scope))
        if isinstance(e, A.Annotated):
            t = self.infer(e.expr, env, scope)
            self.unify(t, self.type_of_ann(e.annotation, scope), Origin(e.span, "annotation"))
            return self.record(e, t)
        if isinstance(e, A.ArenaBlock):
            raise ValueError("arena blocks must be desugared before inference")
        raise TypeError(e)

    def bind_param(self, p: A.Param, env: _Env, scope: dict) -> T.TypeTerm:
        if p.name == "()":
            t = T.UNIT
        elif p.annotation is not None:
            t = self.type_of_ann(p.annotation, scope)
        else:
            t = self.fresh_tv(p.name)
        self.record_binder(p, t)
        if p.name != "()":
            env.vars[p.name] = (T.TypeScheme.mono(t), p)
        return t

    def pin_memory(self, t: T.TypeTerm, space: MemorySpace, origin: Origin) -> None:
        t = self.prune(t)
        if isinstance(t, (T.SpanT, T.QuireT)):
            self.mem_eqs.append(MemEquation(t.mem, space, origin))

    # -- top level ------------------------------------------------------------------

    def solve(self) -> tuple[list[DimEquation], DimSubstitution, dict]:
        self.flush_arith()
        eqs = list(self.dim_eqs)
        try:
            sub = dim_unify(eqs, self.dims)
        except Inconsistent as exc:
            o = exc.equation.origin
            lhs = T.format_dim(exc.equation.lhs, self.units, unicode=True)
            rhs = T.format_dim(exc.equation.rhs, self.units, unicode=True)
            left = T.format_dim(exc.residual, None, unicode=True)
            related = tuple(o.related) + tuple(r.span for r in exc.related if isinstance(r, Origin))
            raise DimensionError(
                f"dimension mismatch at {o.what}: {lhs} vs {rhs} (left over: {left})",
                o.span,
                related,
                exc.residual,
            ) from None
        try:
            msol = mem_unify(self.mem_eqs)
        except Inconsistent as exc:
            o = exc.equation.origin
            raise TypeMismatch(
                f"memory space conflict: {exc.equation.lhs} vs {exc.equation.rhs}",
                o.span if o else A.NOLOC,
                o.related if o else (),
            ) from None
        return eqs, sub, msol

    def finalize(self, t: T.TypeTerm, sub: DimSubstitution, msol: dict) -> T.TypeTerm:
        return T.map_type(
            self.zonk(t),
            dim=sub.apply,
            mem=lambda m: msol.get(m, m) if isinstance(m, MemVar) else m,
        )


def _prelude_env(s: _Session) -> _Env:
    env = _Env()
    for name, sig in PRELUDE_SIGNATURES.items():
        t = s.type_of_ann(parse_type(sig), {"types": {}, "dims": {}})
        env.vars[name] = (s.generalize_closed(t), PRELUDE)
    return env


def infer_program(p: A.Program, units: UnitTable | None = None) -> TypedProgram:
    """Type every binding; the input program is left untouched."""
    units = units or DEFAULT_UNITS
    prog = desugar(copy.deepcopy(p))
    s = _Session(units)
    env = _prelude_env(s)
    schemes: dict[str, T.TypeScheme] = {}
    externs: dict[str, T.TypeScheme] = {}
    infos: dict[str, BindingInfo] = {}
    for d in prog.decls:
        s._reset()
        scope = {"types": {}, "dims": {}}
        if isinstance(d, A.Extern):
            t = s.type_of_ann(d.annotation, scope)
            sc = s.generalize_closed(t)
            externs[d.name] = sc
            env.vars[d.name] = (sc, d)
            continue
        inner = env.extend()
        pts = [s.bind_param(prm, inner, scope) for prm in d.params]
        tb = s.infer(d.body, inner, scope, hint=d.name)
        if d.return_annotation is not None:
            s.unify(tb, s.type_of_ann(d.return_annotation, scope), Origin(d.span, "return annotation"))
        t = T.arrow(*pts, tb) if pts else tb
        eqs, sub, msol = s.solve()
        fin = s.finalize(t, sub, msol)
        for nid in s.local_nodes:
            s.node_types[nid] = s.finalize(s.node_types[nid], sub, msol)
        for bid in s.local_binders:
            s.binder_types[bid] = s.finalize(s.binder_types[bid], sub, msol)
        for vid in s.local_insts:
            scheme, mapping = s.insts[vid]
            resolved = {}
            for q, inst in mapping.items():
                if isinstance(inst, Dimension):
                    resolved[q] = sub.apply(inst)
                elif isinstance(inst, MemVar):
                    resolved[q] = msol.get(inst, inst)
                else:
                    resolved[q] = s.finalize(inst, sub, msol)
            s.insts[vid] = (scheme, resolved)
        scheme = s.generalize_closed(fin)
        schemes[d.name] = scheme
        infos[d.name] = BindingInfo(d.name, scheme, eqs, sub, msol)
        s.record_binder(d, fin)
        env.vars[d.name] = (scheme, d)
    typed = TypedProgram(
        prog, schemes, externs, s.node_types, s.binder_types, s.refs, s.insts, infos, units,
        units.prefer(s.used_units),
    )
    typed._keep = s.keep
    _insert_loads(typed)
    return typed


# -- lvalue resolution ---------------------------------------------------------------


def resolve_lvalue(v: A.Expr, typed: TypedProgram) -> A.Expr:
    """Wrap reads of mutable cells in an explicit `Load`; leave values alone."""
    if isinstance(v, A.Load) or not isinstance(v, A.Var):
        return v
    t = typed.node_types.get(id(v))
    if not isinstance(t, T.RefT):
        return v
    load = A.Load(v, v.span)
    typed.node_types[id(load)] = t.inner
    typed._keep.append(load)
    return load


def _insert_loads(typed: TypedProgram) -> None:
    for b in typed.program.bindings:
        _loads_in(b, typed)


def _loads_in(node, typed: TypedProgram) -> None:
    import dataclasses

    for f in dataclasses.fields(node):
        if f.name == "span":
            continue
        v = getattr(node, f.name)
        lvalue = isinstance(node, (A.Assign, A.Load)) and f.name == "target"
        if isinstance(v, A.EXPR_TYPES):
            if not lvalue:
                new = resolve_lvalue(v, typed)
                if new is not v:
                    setattr(node, f.name, new)
                    continue
            _loads_in(v, typed)
        elif isinstance(v, list):
            for i, x in enumerate(v):
                if isinstance(x, A.EXPR_TYPES):
                    new = resolve_lvalue(x, typed)
                    if new is not x:
                        v[i] = new
                    else:
                        _loads_in(x, typed)
