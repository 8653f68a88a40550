"""Escape classification, lifetime promotion and allocation strategy.

Every value starts with the tentative lifetime Stack(its own frame). Each
out-edge imposes a requirement:

* a Return into a function root needs Arena(caller), or Static when the
  function is a module-level value or declared static;
* a Return out of a lambda body needs Arena in the lambda's defining frame,
  and at least the lambda's own lifetime;
* a ByRef write needs Arena in the reference's scope, and at least the
  target's own lifetime;
* a Capture needs the capturing closure's lifetime;
* a flowing DataDep (alias) passes the target's requirement back unchanged;
* any other use needs nothing beyond the tentative lifetime.

The required lifetime is the maximum, computed by a monotone fixpoint. When
several escapes reach the same lifetime the kind is chosen by rank,
ReturnEscape > ByRefEscape > ClosureCapture, then by the lowest closure id.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .dims import MemorySpace
from .psg import LEVEL_NAMES, EdgeKind, LifetimeClass, Psg, PsgNode, State

# -- records ---------------------------------------------------------------------------------


class EscapeKind(enum.Enum):
    STACK_SCOPED = "StackScoped"
    CLOSURE_CAPTURE = "ClosureCapture"
    RETURN_ESCAPE = "ReturnEscape"
    BYREF_ESCAPE = "ByRefEscape"


RANK = {
    EscapeKind.STACK_SCOPED: 0,
    EscapeKind.CLOSURE_CAPTURE: 1,
    EscapeKind.BYREF_ESCAPE: 2,
    EscapeKind.RETURN_ESCAPE: 3,
}
KIND_OF_RANK = {v: k for k, v in RANK.items()}


@dataclass(frozen=True)
class EscapeRecord:
    kind: EscapeKind
    chain: tuple = ()
    promoted_from: LifetimeClass | None = None
    promoted_to: LifetimeClass | None = None
    closure: int | None = None  # the capturing lambda for ClosureCapture

    @property
    def kind_name(self) -> str:
        if self.kind is EscapeKind.CLOSURE_CAPTURE:
            return f"ClosureCapture({self.closure})"
        return self.kind.value

    @property
    def promoted(self) -> bool:
        return self.promoted_from is not None

    def to_json(self) -> dict:
        life = lambda c: None if c is None else {"level": c.level_name, "scope": c.scope}  # noqa: E731
        return {
            "kind": self.kind.value,
            "closure": self.closure,
            "chain": list(self.chain),
            "promotedFrom": life(self.promoted_from),
            "promotedTo": life(self.promoted_to),
        }


STACK_SCOPED = EscapeRecord(EscapeKind.STACK_SCOPED)


# -- requirement tuples ----------------------------------------------------------------------
#
# A requirement is (lifetime, rank, -closure id); tuples compare by
# (lifetime key, rank, -closure id), so max() implements the tie-break.


@dataclass(frozen=True)
class _Req:
    life: LifetimeClass
    rank: int
    closure: int | None
    chain: tuple

    @property
    def key(self) -> tuple:
        return (self.life.key, self.rank, -(self.closure if self.closure is not None else -1))


def _better(a: _Req | None, b: _Req | None) -> _Req | None:
    if a is None:
        return b
    if b is None:
        return a
    return b if b.key > a.key else a


def _caller_arena(g: Psg, scope_id: int) -> LifetimeClass:
    s = g.scopes[scope_id]
    return LifetimeClass(1, s.id, s.depth)


def _static() -> LifetimeClass:
    return LifetimeClass(3, 0, 0)


def _max_life(*xs) -> LifetimeClass:
    return max((x for x in xs if x is not None), key=lambda c: c.key)


def _active(n: PsgNode) -> bool:
    return n.state is not State.FRESH


def lifetime_of(g: Psg, nid: int, reqs: dict) -> LifetimeClass:
    n = g.nodes[nid]
    r = reqs.get(nid)
    return _max_life(g.tentative(nid), n.floor, r.life if r else None)


def _through(e, dst, base: LifetimeClass, kind: EscapeKind, closure, reqs: dict) -> _Req:
    """An edge whose target may itself outlive `base`: the larger of the two wins."""
    own = reqs.get(dst.id)
    if own is not None and own.life.key > base.key:
        return _Req(own.life, RANK[kind], closure, (e.id,) + own.chain)
    return _Req(base, RANK[kind], closure, (e.id,))


def _edge_req(g: Psg, e, reqs: dict) -> _Req | None:
    """The requirement an out-edge imposes on its source, given current estimates."""
    dst = g.nodes[e.dst]
    if not _active(dst):
        return None
    if e.kind is EdgeKind.RETURN:
        if dst.kind == "Binding":
            if getattr(dst, "inline", False):
                return None
            life = _static() if dst.static_return else _caller_arena(g, dst.scope)
            return _Req(life, RANK[EscapeKind.RETURN_ESCAPE], None, (e.id,))
        # out of a lambda body: the closure's caller is its defining frame
        return _through(e, dst, _max_life(_caller_arena(g, dst.scope), dst.floor), EscapeKind.RETURN_ESCAPE, None, reqs)
    if e.kind is EdgeKind.BYREF:
        return _through(e, dst, _max_life(_caller_arena(g, dst.scope), dst.floor), EscapeKind.BYREF_ESCAPE, None, reqs)
    if e.kind is EdgeKind.CAPTURE:
        tent = _max_life(g.tentative(dst.id), dst.floor)
        return _through(e, dst, tent, EscapeKind.CLOSURE_CAPTURE, dst.id, reqs)
    if e.kind is EdgeKind.DATA and e.flow:
        own = reqs.get(dst.id)
        if own is None:
            return None
        return _Req(own.life, own.rank, own.closure, (e.id,) + own.chain)
    return None


def _fixpoint(g: Psg) -> tuple[dict, int]:
    reqs: dict[int, _Req] = {}
    order = sorted(i for i, n in g.nodes.items() if _active(n))
    rounds = 0
    changed = True
    while changed:
        changed = False
        rounds += 1
        for nid in order:
            best = reqs.get(nid)
            for e in g.out_edges(nid):
                r = _edge_req(g, e, reqs)
                if r is not None and (best is None or r.key > best.key):
                    best = r
                    changed = True
            if best is not None:
                reqs[nid] = best
    return reqs, rounds - 1


def _record(g: Psg, nid: int, reqs: dict) -> EscapeRecord:
    r = reqs.get(nid)
    tent = g.tentative(nid)
    if r is None or r.life.key <= tent.key:
        return STACK_SCOPED
    kind = KIND_OF_RANK[r.rank]
    to = _max_life(r.life, g.nodes[nid].floor)
    return EscapeRecord(kind, r.chain, tent, to, r.closure)


# -- public operations -----------------------------------------------------------------------


def classify(g: Psg, v) -> EscapeRecord:
    """Escape record of one node, computed from the current graph without mutating it."""
    nid = v.id if isinstance(v, PsgNode) else v
    reqs, _ = _fixpoint(g)
    return _record(g, nid, reqs)


def classify_all(g: Psg) -> dict[int, EscapeRecord]:
    reqs, _ = _fixpoint(g)
    return {nid: _record(g, nid, reqs) for nid, n in g.nodes.items() if _active(n)}


def promote(g: Psg) -> Psg:
    """Raise every node's lifetime to its required lifetime and attach escape records.

    Fields are written only when they change, so a second run performs no writes.
    """
    reqs, rounds = _fixpoint(g)
    for nid in sorted(g.nodes):
        n = g.nodes[nid]
        if not _active(n):
            continue
        rec = _record(g, nid, reqs)
        life = lifetime_of(g, nid, reqs)
        old = getattr(n, "lifetime", None)
        if old is not None and old.key > life.key:
            life = old  # never lower a lifetime
        if old != life:
            n.lifetime = life
        if n.escape != rec:
            n.escape = rec
    g.promote_iterations = rounds
    return g


# -- allocation strategy ---------------------------------------------------------------------


@dataclass(frozen=True)
class AllocationDecision:
    strategy: str  # "stack" | "arena-closure" | "arena-caller" | "arena-origin"
    level: str
    region: MemorySpace
    scope: int | None
    target: str = ""

    def __str__(self) -> str:
        return f"{self.region} ({self.strategy})"


STRATEGY = {
    EscapeKind.STACK_SCOPED: ("stack", "stack"),
    EscapeKind.CLOSURE_CAPTURE: ("arena-closure", "arena"),
    EscapeKind.RETURN_ESCAPE: ("arena-caller", "arena"),
    EscapeKind.BYREF_ESCAPE: ("arena-origin", "arena"),
}


def allocation_strategy(r: EscapeRecord, target=None) -> AllocationDecision:
    """Map an escape record to an allocation; the target only picks the concrete region."""
    strategy, level = STRATEGY[r.kind]
    if r.promoted_to is not None and r.promoted_to.level > 1:
        level = LEVEL_NAMES[r.promoted_to.level]
    region = target.region(level) if target is not None else MemorySpace(level)
    scope = r.promoted_to.scope if r.promoted_to is not None else None
    return AllocationDecision(strategy, level, region, scope, getattr(target, "name", ""))


# -- restructuring suggestions ---------------------------------------------------------------


@dataclass(frozen=True)
class Suggestion:
    name: str
    title: str
    cost: str
    detail: str
    chain: tuple

    def to_json(self) -> dict:
        return {"name": self.name, "title": self.title, "cost": self.cost, "detail": self.detail, "chain": list(self.chain)}


BUFFER = ("caller-buffer", "Caller-provided buffer", "zero allocation",
          "take the destination span as a parameter and fill it in place")
CPS = ("continuation", "Continuation style", "stack locality preserved",
       "accept a continuation that consumes the value inside this frame")
ANNOTATE = ("explicit-annotation", "Explicit annotation", "declared intent",
            "mark the binding [<Memory: arena>] so the promotion is intentional")

SUGGESTIONS = {
    EscapeKind.RETURN_ESCAPE: (BUFFER, CPS, ANNOTATE),
    EscapeKind.CLOSURE_CAPTURE: (CPS, ANNOTATE),
    EscapeKind.BYREF_ESCAPE: (ANNOTATE,),
    EscapeKind.STACK_SCOPED: (),
}


def suggest_restructurings(g: Psg, v) -> list[Suggestion]:
    n = g.nodes[v.id if isinstance(v, PsgNode) else v]
    rec = n.escape if n.escape is not None else classify(g, n.id)
    if not rec.promoted or n.declared:
        return []
    return [Suggestion(name, title, cost, detail, rec.chain) for name, title, cost, detail in SUGGESTIONS[rec.kind]]


# -- automatic differentiation ---------------------------------------------------------------


class AdMode(enum.Enum):
    FORWARD = "Forward"
    REVERSE = "Reverse"


@dataclass(frozen=True)
class AdCoeffectSignature:
    mode: AdMode
    aux_memory: str  # "ConstantPerLayer" | "LinearInDepth"
    tape_required: bool


def ad_signature(mode) -> AdCoeffectSignature:
    mode = AdMode(mode) if isinstance(mode, str) else mode
    if mode is AdMode.FORWARD:
        return AdCoeffectSignature(mode, "ConstantPerLayer", False)
    return AdCoeffectSignature(mode, "LinearInDepth", True)


def verify_forward_no_tape(g: Psg, region) -> bool:
    """True when nothing in the region outlives the region's scope.

    `region` is a set of node ids, or a binding name meaning all of its nodes
    apart from the function root.
    """
    if isinstance(region, str):
        ids = {n.id for n in g.binding_nodes(region) if n.kind != "Binding"}
    else:
        ids = set(region)
    records = classify_all(g)
    return all(records[i].kind is EscapeKind.STACK_SCOPED for i in ids if i in records)


# -- reporting helpers -----------------------------------------------------------------------


def allocation_sites(g: Psg) -> list[PsgNode]:
    return [n for n in sorted(g.nodes.values(), key=lambda n: n.id) if n.allocates and _active(n)]


def site_name(g: Psg, n: PsgNode) -> str:
    """The let-bound name an allocation flows into, else a label."""
    for e in g.out_edges(n.id):
        if e.flow and e.kind is EdgeKind.DATA and g.nodes[e.dst].kind == "Let":
            return g.nodes[e.dst].label
    return n.label


def escapes(g: Psg) -> list[tuple[PsgNode, EscapeRecord]]:
    """Promoted allocation sites in source order."""
    out = []
    for n in allocation_sites(g):
        rec = n.escape if n.escape is not None else classify(g, n.id)
        if rec.promoted:
            out.append((n, rec))
    return out
