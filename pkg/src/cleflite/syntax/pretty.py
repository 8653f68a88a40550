"""Canonical source rendering; ``parse(pretty(p)) == p`` for parsed programs."""

from __future__ import annotations

from . import ast as A

INDENT = "    "

_BLOCKY = (A.Let, A.Seq, A.ForRange)


def pretty(p: A.Program) -> str:
    out = []
    for d in p.decls:
        if isinstance(d, A.Extern):
            out.append(f"val {d.name} : {pretty_type(d.annotation)}")
            continue
        head = ["let", d.name]
        head.extend(pretty_attr(a) for a in d.attrs)
        head.extend(_param(p) for p in d.params)
        if d.return_annotation is not None:
            head.append(f": {pretty_type(d.return_annotation)}")
        out.append(" ".join(head) + " =")
        out.extend(_block(d.body, 1))
    return "\n".join(out) + ("\n" if out else "")


def pretty_expr(e: A.Expr) -> str:
    return "\n".join(_block(e, 0))


def pretty_attr(a) -> str:
    if isinstance(a, A.TargetAttr):
        return f"[<Target: {' | '.join(a.targets)}>]"
    if isinstance(a, A.MemoryAttr):
        return f"[<Memory: {a.space}>]"
    if isinstance(a, A.InlineAttr):
        return "[<Inline>]"
    if isinstance(a, A.RangeAttr):
        return f"[<Range: {_num(a.lo)} .. {_num(a.hi)}>]"
    if isinstance(a, A.ADAttr):
        return f"[<AD: {a.mode}>]"
    raise TypeError(a)


def _num(x: float) -> str:
    s = repr(float(x))
    return s[:-2] if s.endswith(".0") and "e" not in s and abs(x) >= 1 else s


def _param(p: A.Param) -> str:
    if p.name == "()":
        return "()"
    if p.annotation is None:
        return p.name
    return f"({p.name}: {pretty_type(p.annotation)})"


# -- dimensions and types --------------------------------------------------------


def pretty_dim(d: A.DimExpr, prec: int = 0) -> str:
    if isinstance(d, A.DUnit):
        return d.name
    if isinstance(d, A.DVar):
        return "'" + d.name
    if isinstance(d, A.DOne):
        return "1"
    if isinstance(d, A.DPow):
        return f"{pretty_dim(d.base, 2)}^{d.exponent}"
    op = " * " if isinstance(d, A.DMul) else " / "
    s = pretty_dim(d.left, 1) + op + pretty_dim(d.right, 2)
    return f"({s})" if prec >= 2 else s


def pretty_type(t: A.TypeExpr, prec: int = 0) -> str:
    if isinstance(t, A.TFloat):
        return "float" if t.dim is None else f"float<{pretty_dim(t.dim)}>"
    if isinstance(t, A.TQuire):
        return "Quire" if t.dim is None else f"Quire<{pretty_dim(t.dim)}>"
    if isinstance(t, A.TInt):
        return "int"
    if isinstance(t, A.TUnit):
        return "unit"
    if isinstance(t, A.TSpan):
        return f"Span<{pretty_type(t.elem)}>"
    if isinstance(t, A.TVarE):
        return "'" + t.name
    if isinstance(t, A.TNamed):
        return t.name
    if isinstance(t, A.TTuple):
        s = " * ".join(pretty_type(x, 2) for x in t.items)
        return f"({s})" if prec >= 2 else s
    if isinstance(t, A.TArrow):
        s = f"{pretty_type(t.arg, 1)} -> {pretty_type(t.result, 0)}"
        return f"({s})" if prec >= 1 else s
    raise TypeError(t)


# -- expressions -------------------------------------------------------------------


def _block(e: A.Expr, level: int) -> list[str]:
    pad = INDENT * level
    if isinstance(e, A.Let):
        kw = "let!" if e.bang else "let"
        head = f"{pad}{kw} {'mutable ' if e.mutable else ''}{e.name}"
        if e.annotation is not None:
            head += f" : {pretty_type(e.annotation)}"
        lines = _rhs(head + " =", e.value, level)
        return lines + _block(e.body, level)
    if isinstance(e, A.Seq):
        return _block(e.first, level) + _block(e.rest, level)
    if isinstance(e, A.ForRange):
        head = f"{pad}for {e.var} in {_expr(e.lo, 1, level)} .. {_expr(e.hi, 1, level)} do"
        return [head] + _block(e.body, level + 1)
    return [pad + _stmt(e, level)]


def _rhs(head: str, value: A.Expr, level: int) -> list[str]:
    if isinstance(value, _BLOCKY):
        return [head] + _block(value, level + 1)
    return [f"{head} {_stmt(value, level)}"]


def _stmt(e: A.Expr, level: int) -> str:
    if isinstance(e, A.Assign):
        return f"{_expr(e.target, 1, level)} <- {_expr(e.value, 1, level)}"
    if isinstance(e, A.Return):
        return f"return {_expr(e.value, 0, level)}"
    return _expr(e, 0, level)


def _paren(s: str, need: bool) -> str:
    return f"({s})" if need else s


def _expr(e: A.Expr, prec: int, level: int) -> str:
    if isinstance(e, A.Literal):
        if not e.is_float:
            return str(e.value)
        s = repr(float(e.value))
        return s if e.unit is None else f"{s}<{pretty_dim(e.unit)}>"
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.Load):
        return _expr(e.target, prec, level)
    if isinstance(e, A.Tuple):
        return "(" + ", ".join(_expr(x, 2, level) for x in e.items) + ")"
    if isinstance(e, A.Annotated):
        return f"({_expr(e.expr, 0, level)} : {pretty_type(e.annotation)})"
    if isinstance(e, A.Index):
        return f"{_expr(e.target, 7, level)}.[{_expr(e.index, 0, level)}]"
    if isinstance(e, A.Apply):
        return _paren(f"{_expr(e.fn, 6, level)} {_expr(e.arg, 7, level)}", prec > 6)
    if isinstance(e, A.Neg):
        return _paren("-" + _expr(e.operand, 5, level), prec > 5)
    if isinstance(e, A.BinOp):
        p = 3 if e.op in "+-" else 4
        s = f"{_expr(e.left, p, level)} {e.op} {_expr(e.right, p + 1, level)}"
        return _paren(s, prec > p)
    if isinstance(e, A.Lambda):
        params = " ".join(_param(p) for p in e.params)
        if isinstance(e.body, _BLOCKY):
            inner = "\n".join(_block(e.body, level + 1))
            s = f"fun {params} ->\n{inner}"
        else:
            s = f"fun {params} -> {_stmt(e.body, level)}"
        return _paren(s, prec > 0)
    if isinstance(e, (A.ArenaBlock, A.ArenaScope)):
        inner = "\n".join(_block(e.body, level + 1))
        return f"arena {{\n{inner}\n{INDENT * level}}}"
    if isinstance(e, (A.Assign, A.Return)):
        return _paren(_stmt(e, level), True)
    raise ValueError(f"{type(e).__name__} cannot appear in expression position")
