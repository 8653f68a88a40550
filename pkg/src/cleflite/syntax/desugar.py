"""Arena-block elimination.

Each ``arena { ... }`` becomes an `ArenaScope` with a fresh scope id; every
binding in the block's statement chain is tagged ``memory="arena"`` with
that id. Nested arena blocks get their own ids. Lambdas inside a block
keep their own bindings untagged: they run in their own frame.
"""

from __future__ import annotations

import dataclasses
import itertools

from . import ast as A


def desugar(p: A.Program) -> A.Program:
    existing = [n.scope for b in p.bindings for n in A.walk(b.body) if isinstance(n, A.ArenaScope)]
    ids = itertools.count(max(existing, default=0) + 1)
    decls = []
    for d in p.decls:
        if isinstance(d, A.Binding):
            d = dataclasses.replace(d, body=_expr(d.body, None, ids))
        decls.append(d)
    return A.Program(decls)


def _expr(e: A.Expr, scope: int | None, ids) -> A.Expr:
    if isinstance(e, A.ArenaBlock):
        sid = next(ids)
        return A.ArenaScope(sid, _expr(e.body, sid, ids), e.span)
    if isinstance(e, A.Return) and scope is not None:
        return _expr(e.value, scope, ids)
    if isinstance(e, A.Let):
        value = _expr(e.value, scope, ids)
        body = _expr(e.body, scope, ids)
        if scope is not None and e.memory is None:
            return dataclasses.replace(e, value=value, body=body, memory="arena", scope=scope)
        return dataclasses.replace(e, value=value, body=body)
    if isinstance(e, A.Lambda):
        return dataclasses.replace(e, body=_expr(e.body, None, ids))
    changes = {}
    for f in dataclasses.fields(e):
        v = getattr(e, f.name)
        if isinstance(v, A.EXPR_TYPES):
            changes[f.name] = _expr(v, scope, ids)
        elif isinstance(v, list) and any(isinstance(x, A.EXPR_TYPES) for x in v):
            changes[f.name] = [_expr(x, scope, ids) if isinstance(x, A.EXPR_TYPES) else x for x in v]
    return dataclasses.replace(e, **changes) if changes else e
