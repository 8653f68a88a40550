"""The Program Semantic Graph.

Every expression of a typed program becomes a node carrying its type,
dimension and coeffect record. Edges record data flow, calls, closure
captures, returns, writes through references and cross-target transfers.
Nodes move between three states: Live (elaborated, saturated, active),
Latent (resolved but inactive) and Fresh (syntax only).
"""

from __future__ import annotations

import enum
import itertools
from contextlib import contextmanager
from dataclasses import dataclass

from . import types as T
from .diagnostics import Diagnostic
from .dims import ARENA, HEAP, STACK, STATIC, MemorySpace, MemVar
from .infer import PRELUDE, TypedProgram
from .syntax import ast as A

# -- vocabulary -------------------------------------------------------------------------


class State(enum.Enum):
    LIVE = "Live"
    LATENT = "Latent"
    FRESH = "Fresh"


class EdgeKind(enum.Enum):
    DATA = "DataDep"
    CONTROL = "ControlDep"
    CAPTURE = "Capture"
    RETURN = "Return"
    BYREF = "ByRef"
    TRANSFER = "Transfer"


class Emission(enum.Enum):
    INLINE = "Inline"
    MANDATORY_INLINE = "MandatoryInline"
    SEPARATE = "SeparateFunction"
    MODULE_INIT = "ModuleInit"


LEVELS = {"stack": 0, "arena": 1, "heap": 2, "static": 3}
LEVEL_NAMES = {v: k for k, v in LEVELS.items()}
LEVEL_SPACES = {0: STACK, 1: ARENA, 2: HEAP, 3: STATIC}


@dataclass(frozen=True)
class Scope:
    """A lexical frame: the caller sentinel, a function, a lambda or an arena block."""

    id: int
    kind: str  # "caller" | "function" | "lambda" | "arena"
    depth: int
    parent: int | None = None
    owner: str = ""
    span: A.Loc | None = None


@dataclass(frozen=True, order=False)
class LifetimeClass:
    """stack < arena < heap < static; within a level, shallower scopes live longer."""

    level: int
    scope: int
    depth: int

    @property
    def key(self) -> tuple[int, int]:
        return (self.level, -self.depth)

    def __lt__(self, other: LifetimeClass) -> bool:
        return self.key < other.key

    def __le__(self, other: LifetimeClass) -> bool:
        return self.key <= other.key

    def __gt__(self, other: LifetimeClass) -> bool:
        return self.key > other.key

    def __ge__(self, other: LifetimeClass) -> bool:
        return self.key >= other.key

    @property
    def level_name(self) -> str:
        return LEVEL_NAMES[self.level]

    def __str__(self) -> str:
        return f"{self.level_name}@s{self.scope}"


class CapabilityError(Exception):
    def __init__(self, node: int, target: str, missing: str, span: A.Loc | None = None, owner: str = ""):
        super().__init__(f"{owner or f'node {node}'} requires {missing}, which target {target} lacks")
        self.node = node
        self.target = target
        self.missing = missing
        self.span = span
        self.owner = owner


class InvalidTransition(Exception):
    pass


class UnknownTarget(KeyError):
    pass


class PassiveViolation(RuntimeError):
    """An annotation was written while the graph was in passive (read-only) mode."""


# -- records --------------------------------------------------------------------------------


@dataclass(frozen=True)
class CoeffectRecord:
    emission: Emission
    captures: frozenset = frozenset()
    lifetime: LifetimeClass | None = None
    memory: MemorySpace | MemVar | None = None
    capabilities: frozenset = frozenset()
    targets: int = 0

    def resolved(self) -> bool:
        return self.lifetime is not None and isinstance(self.memory, MemorySpace)


ANNOTATION_FIELDS = frozenset({"type", "dimension", "coeffects", "escape", "reachability", "ssa"})


class PsgNode:
    """A graph node. Writes to annotation fields are counted and can be forbidden."""

    def __init__(self, id: int, kind: str, label: str, expr=None, scope: int = 0, binding: str = "", span=None):
        object.__setattr__(self, "writes", 0)
        object.__setattr__(self, "graph", None)
        self.id = id
        self.kind = kind
        self.label = label
        self.expr = expr
        self.scope = scope
        self.binding = binding
        self.span = span
        self.state = State.LIVE
        self.type = None
        self.dimension = None
        self.coeffects = CoeffectRecord(Emission.INLINE)
        self.escape = None
        self.reachability = 0
        self.ssa = ""
        # escape-analysis inputs
        self.allocates = False
        self.opens: int | None = None  # scope opened by this node (function roots, lambdas, arena blocks)
        self.floor: LifetimeClass | None = None  # declared lifetime
        self.declared = False
        self.static_return = False
        self.saturated = False

    def __setattr__(self, name, value):
        if name in ANNOTATION_FIELDS:
            g = self.graph
            if g is not None and g.passive:
                raise PassiveViolation(f"write to {name} of node {self.id} during passive traversal")
            object.__setattr__(self, "writes", self.writes + 1)
        object.__setattr__(self, name, value)

    def annotations(self) -> tuple:
        return (self.type, self.dimension, self.coeffects, self.escape, self.reachability, self.ssa)

    def __repr__(self) -> str:
        return f"PsgNode({self.id}, {self.kind}, {self.label!r}, {self.state.value})"


@dataclass
class PsgEdge:
    id: int
    src: int
    dst: int
    kind: EdgeKind
    flow: bool = False  # the source value itself (not a derived value) reaches dst
    reachability: int = 0
    transfer: tuple[str, str] | None = None
    report: object = None
    note: str = ""


# -- the graph ------------------------------------------------------------------------------


class Psg:
    def __init__(self, targets=()):
        self.targets: tuple[str, ...] = tuple(targets)
        self.nodes: dict[int, PsgNode] = {}
        self.edges: list[PsgEdge] = []
        self.scopes: dict[int, Scope] = {}
        self.roots: dict[str, int] = {}
        self.bindings: dict[str, A.Binding] = {}
        self.bindings_config: dict = {}
        self.typed: TypedProgram | None = None
        self.diagnostics: list[Diagnostic] = []
        self.passive = False
        self.saturated = False
        self.iterations = 0
        self.promote_iterations = 0
        self.param_returns: dict[str, frozenset] = {}
        self._disabled: dict[str, list[int]] = {}
        self._ids = itertools.count()
        self._eids = itertools.count()
        self._sids = itertools.count()
        self._ssa = itertools.count()
        self._out: dict[int, list[PsgEdge]] | None = None
        self._in: dict[int, list[PsgEdge]] | None = None
        self.add_scope("caller", None)

    # construction

    def add_scope(self, kind: str, parent: int | None, owner: str = "", span=None) -> int:
        sid = next(self._sids)
        depth = 0 if parent is None else self.scopes[parent].depth + 1
        self.scopes[sid] = Scope(sid, kind, depth, parent, owner, span)
        return sid

    def add_node(self, kind: str, label: str, expr=None, scope: int = 0, binding: str = "", span=None) -> PsgNode:
        n = PsgNode(next(self._ids), kind, label, expr, scope, binding, span)
        n.graph = self
        n.reachability = (1 << len(self.targets)) - 1
        n.ssa = f"%v{next(self._ssa)}"
        self.nodes[n.id] = n
        self._out = self._in = None
        return n

    def add_edge(self, src: int, dst: int, kind: EdgeKind, flow: bool = False, note: str = "") -> PsgEdge:
        e = PsgEdge(next(self._eids), src, dst, kind, flow, note=note)
        e.reachability = self.nodes[src].reachability & self.nodes[dst].reachability
        self.edges.append(e)
        self._out = self._in = None
        return e

    # queries

    def out_edges(self, nid: int) -> list[PsgEdge]:
        self._index()
        return self._out.get(nid, [])

    def in_edges(self, nid: int) -> list[PsgEdge]:
        self._index()
        return self._in.get(nid, [])

    def _index(self):
        if self._out is None:
            self._out, self._in = {}, {}
            for e in self.edges:
                self._out.setdefault(e.src, []).append(e)
                self._in.setdefault(e.dst, []).append(e)

    def edge(self, eid: int) -> PsgEdge:
        return next(e for e in self.edges if e.id == eid)

    def frame(self, nid: int) -> Scope:
        return self.scopes[self.nodes[nid].scope]

    def tentative(self, nid: int) -> LifetimeClass:
        s = self.frame(nid)
        return LifetimeClass(0, s.id, s.depth)

    def target_bit(self, name: str) -> int:
        if name not in self.targets:
            raise UnknownTarget(name)
        return 1 << self.targets.index(name)

    def target_names(self, bits: int) -> list[str]:
        return [t for i, t in enumerate(self.targets) if bits >> i & 1]

    def node_for(self, expr) -> PsgNode | None:
        for n in self.nodes.values():
            if n.expr is expr:
                return n
        return None

    def find(self, label: str, kind: str | None = None, binding: str | None = None) -> PsgNode:
        for n in self.nodes.values():
            if n.label == label and (kind is None or n.kind == kind) and (binding is None or n.binding == binding):
                return n
        raise KeyError(label)

    def binding_nodes(self, name: str) -> list[PsgNode]:
        return [n for n in self.nodes.values() if n.binding == name]

    @contextmanager
    def passive_mode(self):
        """Forbid annotation writes, as a diagnostics traversal must not compute anything."""
        prev = self.passive
        self.passive = True
        try:
            yield self
        finally:
            self.passive = prev


# -- elaboration -----------------------------------------------------------------------------

PRELUDE_ALIASES = {"Quire.fma": (0,)}
PRELUDE_ALLOCATORS = {"Span.map", "Quire.zero"}
QUIRE_OPS = {"Quire.zero", "Quire.fma", "Quire.toPosit"}


def allocation_type(t) -> bool:
    t = T.strip_ref(t) if t is not None else None
    return isinstance(t, (T.SpanT, T.QuireT, T.ArrowT))


def _alloc_parts(t) -> list:
    """Allocation-bearing components of a type, outermost first."""
    t = T.strip_ref(t)
    if isinstance(t, (T.SpanT, T.QuireT, T.ArrowT)):
        return [t]
    if isinstance(t, T.TupleT):
        return [p for x in t.items for p in _alloc_parts(x)]
    return []


def may_alias(arg_t, result_t) -> bool:
    """Whether a call returning result_t could hand back an argument of type arg_t."""
    if arg_t is None or result_t is None:
        return False
    parts = _alloc_parts(result_t)
    return any(p == q for p in _alloc_parts(arg_t) for q in parts)


def _tail(e):
    while True:
        if isinstance(e, A.Let):
            e = e.body
        elif isinstance(e, A.Seq):
            e = e.rest
        elif isinstance(e, A.ArenaScope):
            e = e.body
        else:
            return e


def _label(e) -> str:
    if isinstance(e, A.Literal):
        return repr(e.value)
    if isinstance(e, A.Var):
        return e.name
    if isinstance(e, A.Let):
        return e.name
    if isinstance(e, A.BinOp):
        return e.op
    if isinstance(e, A.Tuple):
        return f"tuple/{len(e.items)}"
    if isinstance(e, A.ForRange):
        return e.var
    if isinstance(e, A.Lambda):
        return "fun " + " ".join(p.name for p in e.params)
    if isinstance(e, A.ArenaScope):
        return f"arena#{e.scope}"
    return type(e).__name__.lower()


class _Elaborator:
    def __init__(self, g: Psg, typed: TypedProgram):
        self.g = g
        self.typed = typed
        self.binder_nodes: dict[int, int] = {}  # id(binder) -> node id
        self.binding = ""
        self.bits = 0
        self.explicit: set[str] = set()

    def node(self, kind, label, expr, scope, span=None) -> PsgNode:
        n = self.g.add_node(kind, label, expr, scope, self.binding, span or getattr(expr, "span", None))
        n.reachability = self.bits
        if expr is not None and id(expr) in self.typed.binder_types:
            n.type = self.typed.binder_types[id(expr)]
        elif expr is not None and id(expr) in self.typed.node_types:
            n.type = self.typed.node_types[id(expr)]
        if n.type is not None:
            n.dimension = T.type_dimension(n.type)
        mem = _type_memory(n.type)
        n.coeffects = CoeffectRecord(Emission.INLINE, memory=mem, targets=self.bits)
        return n

    def edge(self, src, dst, kind, flow=False, note=""):
        return self.g.add_edge(src, dst, kind, flow, note)

    # declarations

    def extern(self, d: A.Extern):
        self.binding = d.name
        self.bits = (1 << len(self.g.targets)) - 1
        n = self.node("Extern", d.name, d, 0, d.span)
        n.floor = LifetimeClass(3, 0, 0)
        n.coeffects = CoeffectRecord(Emission.SEPARATE, memory=STATIC, targets=self.bits)
        self.binder_nodes[id(d)] = n.id

    def binding_decl(self, b: A.Binding, target_names: tuple):
        g = self.g
        self.binding = b.name
        attr = b.attr(A.TargetAttr)
        if attr is not None:
            wanted = [t for t in attr.targets if t in target_names]
            self.explicit = set(wanted)
        else:
            wanted = list(target_names)
            self.explicit = set()
        self.bits = sum(1 << target_names.index(t) for t in wanted)
        fscope = g.add_scope("function", 0, b.name, b.span)
        root = self.node("Binding", b.name, b, 0, b.span)
        root.opens = fscope
        g.roots[b.name] = root.id
        g.bindings[b.name] = b
        if b.attr(A.InlineAttr) is not None:
            emission = Emission.MANDATORY_INLINE
        elif b.params:
            emission = Emission.SEPARATE
        else:
            emission = Emission.MODULE_INIT
        mattr = b.attr(A.MemoryAttr)
        declared = mattr.space if mattr is not None else None
        root.coeffects = CoeffectRecord(
            emission,
            memory=MemorySpace(declared) if declared else None,
            targets=self.bits,
        )
        root.floor = LifetimeClass(3, 0, 0)
        root.static_return = declared == "static" or not b.params
        root.inline = b.attr(A.InlineAttr) is not None
        self.declared_space = declared
        self.fscope = fscope
        params = []
        for p in b.params:
            pn = self.node("Param", p.name, p, fscope)
            self.binder_nodes[id(p)] = pn.id
            params.append(pn.id)
        v = self.expr(b.body, fscope)
        self.edge(v, root.id, EdgeKind.RETURN, flow=True)
        self.finish_binding(b, root, params, fscope)

    def finish_binding(self, b, root, params, fscope):
        g = self.g
        # apply declared memory as a floor on allocation-bearing values in the body
        if self.declared_space in LEVELS:
            lvl = LEVELS[self.declared_space]
            s = g.scopes[fscope]
            for n in g.binding_nodes(b.name):
                if n.id != root.id and n.kind != "Param" and allocation_type(n.type):
                    fl = LifetimeClass(lvl, s.id, s.depth)
                    n.floor = fl if n.floor is None or fl > n.floor else n.floor
                    n.declared = True
        # which parameters can reach the return value by plain flow
        out = set()
        for i, pid in enumerate(params):
            if _flows_to(g, pid, root.id):
                out.add(i)
        g.param_returns[b.name] = frozenset(out)
        # capability requirements
        if any(n.kind == "Var" and n.label in QUIRE_OPS for n in g.binding_nodes(b.name)) or any(
            isinstance(T.strip_ref(n.type), T.QuireT) for n in g.binding_nodes(b.name) if n.type is not None
        ):
            for n in g.binding_nodes(b.name):
                if n.id == root.id or isinstance(T.strip_ref(n.type), T.QuireT):
                    n.coeffects = _replace(n.coeffects, capabilities=n.coeffects.capabilities | {"quire"})
        root.explicit_targets = frozenset(self.explicit)

    # expressions; each returns the node carrying the expression's value

    def expr(self, e, scope: int) -> int:
        m = getattr(self, "e_" + type(e).__name__)
        return m(e, scope)

    def e_Literal(self, e, scope):
        return self.node("Literal", _label(e), e, scope).id

    def e_Var(self, e, scope):
        n = self.node("Var", e.name, e, scope)
        binder = self.typed.binder_of(e)
        if binder == PRELUDE:
            if e.name in PRELUDE_ALLOCATORS and not isinstance(T.strip_ref(n.type), T.ArrowT):
                n.allocates = True
            n.prelude = True
        elif isinstance(binder, A.Binding):
            root = self.g.roots.get(binder.name)
            if root is not None:
                self.edge(root, n.id, EdgeKind.CONTROL, note="call")
        elif binder is not None and id(binder) in self.binder_nodes:
            bn = self.binder_nodes[id(binder)]
            self.edge(bn, n.id, EdgeKind.DATA, flow=True)
            bscope = self.g.nodes[bn].scope
            if not _encloses(self.g, bscope, scope) and bscope != scope:
                pass
        return n.id

    def e_Load(self, e, scope):
        n = self.node("Load", "load", e, scope)
        t = self.expr(e.target, scope)
        self.edge(t, n.id, EdgeKind.DATA, flow=True)
        return n.id

    def e_Annotated(self, e, scope):
        n = self.node("Annotated", "annotated", e, scope)
        v = self.expr(e.expr, scope)
        self.edge(v, n.id, EdgeKind.DATA, flow=True)
        return n.id

    def e_Let(self, e, scope):
        n = self.node("Let", e.name, e, scope)
        self.binder_nodes[id(e)] = n.id
        v = self.expr(e.value, scope)
        self.edge(v, n.id, EdgeKind.DATA, flow=True)
        if e.memory is not None:
            space = e.memory
            n.coeffects = _replace(n.coeffects, memory=MemorySpace(space))
            if space in LEVELS:
                s = self.g.scopes[self._arena_scope(e, scope)]
                fl = LifetimeClass(LEVELS[space], s.id, s.depth)
                for x in (n, self.g.nodes[v]):
                    x.floor = fl
                    x.declared = True
        return self.expr(e.body, scope)

    def _arena_scope(self, e, scope):
        if e.scope is not None:
            for s in self.g.scopes.values():
                if s.kind == "arena" and s.owner == f"arena#{e.scope}":
                    return s.id
        return scope

    def e_Seq(self, e, scope):
        n = self.node("Seq", "seq", e, scope)
        a = self.expr(e.first, scope)
        self.edge(a, n.id, EdgeKind.CONTROL)
        return self.expr(e.rest, scope)

    def e_ArenaScope(self, e, scope):
        s = self.g.add_scope("arena", scope, f"arena#{e.scope}", e.span)
        n = self.node("ArenaScope", _label(e), e, scope)
        n.opens = s
        v = self.expr(e.body, s)
        self.edge(v, n.id, EdgeKind.CONTROL)
        return v

    def e_Assign(self, e, scope):
        n = self.node("Assign", "<-", e, scope)
        v = self.expr(e.value, scope)
        self.edge(v, n.id, EdgeKind.DATA)
        tgt = e.target
        binder = self.typed.binder_of(tgt) if isinstance(tgt, A.Var) else None
        t = self.expr(tgt, scope)
        self.edge(t, n.id, EdgeKind.DATA)
        if binder is not None and id(binder) in self.binder_nodes:
            bn = self.binder_nodes[id(binder)]
            if self._frame(self.g.nodes[bn].scope) == self._frame(scope):
                self.edge(v, bn, EdgeKind.DATA, flow=True, note="assign")
            else:
                self.edge(v, bn, EdgeKind.BYREF, flow=True, note="assign")
        return n.id

    def _frame(self, scope):
        return scope

    def e_Lambda(self, e, scope):
        g = self.g
        ls = g.add_scope("lambda", scope, self.binding, e.span)
        n = self.node("Lambda", _label(e), e, scope)
        n.opens = ls
        n.allocates = True
        for p in e.params:
            pn = self.node("Param", p.name, p, ls)
            self.binder_nodes[id(p)] = pn.id
        v = self.expr(e.body, ls)
        self.edge(v, n.id, EdgeKind.RETURN, flow=True)
        # captures: local binders from enclosing frames referenced in the body
        caps = []
        for x in A.walk(e.body):
            if isinstance(x, A.Var):
                b = self.typed.binder_of(x)
                if b is None or b == PRELUDE or isinstance(b, (A.Binding, A.Extern)):
                    continue
                bn = self.binder_nodes.get(id(b))
                if bn is None or _encloses(g, ls, g.nodes[bn].scope):
                    continue
                if bn not in caps:
                    caps.append(bn)
        for bn in caps:
            self.edge(bn, n.id, EdgeKind.CAPTURE, flow=True)
        n.coeffects = _replace(n.coeffects, captures=frozenset(g.nodes[b].label for b in caps))
        return n.id

    def e_Apply(self, e, scope):
        # flatten the curried spine
        spine = []
        head = e
        while isinstance(head, A.Apply):
            spine.append(head)
            head = head.fn
        spine.reverse()
        args = [a.arg for a in spine]
        hn = self.expr(head, scope)
        nodes = [self.node("Apply", "apply", a, scope) for a in spine]
        prev = hn
        for an in nodes:
            self.edge(prev, an.id, EdgeKind.DATA)
            prev = an.id
        outer = nodes[-1]
        arg_nodes = [self.expr(a, scope) for a in args]
        flows = self.call_flows(head, args, outer, len(args))
        for i, (a, an) in enumerate(zip(arg_nodes, nodes)):
            self.edge(a, outer.id if i in flows else an.id, EdgeKind.DATA, flow=i in flows)
        if self.allocating_call(head, flows, outer):
            outer.allocates = True
        return outer.id

    def call_flows(self, head, args, outer, nargs) -> set[int]:
        binder = self.typed.binder_of(head) if isinstance(head, A.Var) else None
        if binder == PRELUDE:
            return set(PRELUDE_ALIASES.get(head.name, ()))
        if isinstance(binder, A.Binding) and binder.name in self.g.param_returns:
            return set(i for i in self.g.param_returns[binder.name] if i < nargs)
        res_t = outer.type
        return {i for i, a in enumerate(args) if may_alias(self.typed.node_types.get(id(a)), res_t)}

    def allocating_call(self, head, flows, outer) -> bool:
        if not allocation_type(outer.type) or flows:
            return False
        if isinstance(head, A.Var) and self.typed.binder_of(head) == PRELUDE:
            return head.name in PRELUDE_ALLOCATORS
        return True

    def e_BinOp(self, e, scope):
        n = self.node("BinOp", e.op, e, scope)
        for x in (e.left, e.right):
            self.edge(self.expr(x, scope), n.id, EdgeKind.DATA)
        return n.id

    def e_Neg(self, e, scope):
        n = self.node("Neg", "neg", e, scope)
        self.edge(self.expr(e.operand, scope), n.id, EdgeKind.DATA)
        return n.id

    def e_Tuple(self, e, scope):
        n = self.node("Tuple", _label(e), e, scope)
        for x in e.items:
            self.edge(self.expr(x, scope), n.id, EdgeKind.DATA, flow=True)
        return n.id

    def e_Index(self, e, scope):
        n = self.node("Index", "index", e, scope)
        for x in (e.target, e.index):
            self.edge(self.expr(x, scope), n.id, EdgeKind.DATA)
        return n.id

    def e_ForRange(self, e, scope):
        n = self.node("ForRange", e.var, e, scope)
        self.binder_nodes[id(e)] = n.id
        for x in (e.lo, e.hi):
            self.edge(self.expr(x, scope), n.id, EdgeKind.DATA)
        b = self.expr(e.body, scope)
        self.edge(b, n.id, EdgeKind.CONTROL)
        return n.id

    def e_Return(self, e, scope):
        return self.expr(e.value, scope)

    def e_ArenaBlock(self, e, scope):
        return self.expr(A.ArenaScope(-1, e.body, e.span), scope)


def _replace(rec: CoeffectRecord, **kw) -> CoeffectRecord:
    from dataclasses import replace

    return replace(rec, **kw)


def _type_memory(t):
    t = T.strip_ref(t) if t is not None else None
    if isinstance(t, (T.SpanT, T.QuireT)):
        return t.mem
    return None


def _encloses(g: Psg, outer: int, inner: int) -> bool:
    """Whether scope `outer` is `inner` or one of its ancestors."""
    s = inner
    while s is not None:
        if s == outer:
            return True
        s = g.scopes[s].parent
    return False


def _flows_to(g: Psg, src: int, dst: int) -> bool:
    seen, stack = set(), [src]
    while stack:
        u = stack.pop()
        if u == dst:
            return True
        if u in seen:
            continue
        seen.add(u)
        for e in g.out_edges(u):
            if e.flow and e.kind in (EdgeKind.DATA, EdgeKind.RETURN):
                stack.append(e.dst)
    return False


def elaborate(typed: TypedProgram, targets=()) -> Psg:
    """Build the graph for a typed program; all nodes start Live and unsaturated."""
    names = tuple(t.name if hasattr(t, "name") else t for t in targets)
    g = Psg(names)
    g.typed = typed
    g.bindings_config = {t.name: t for t in targets if hasattr(t, "name")}
    el = _Elaborator(g, typed)
    for d in typed.program.decls:
        if isinstance(d, A.Extern):
            el.extern(d)
        else:
            el.binding_decl(d, names)
    _default_lambda_emission(g)
    return g


def _default_lambda_emission(g: Psg):
    """Lambdas used exactly once and never captured are emitted inline."""
    for n in g.nodes.values():
        if n.kind != "Lambda":
            continue
        uses = [e for e in g.out_edges(n.id) if e.kind is not EdgeKind.RETURN]
        captured = any(e.kind is EdgeKind.CAPTURE for e in uses)
        em = Emission.INLINE if len(uses) <= 1 and not captured else Emission.SEPARATE
        n.coeffects = _replace(n.coeffects, emission=em)


# -- saturation ---------------------------------------------------------------------------------


def _required_caps(n: PsgNode) -> frozenset:
    return n.coeffects.capabilities


def _target_has(binding, cap: str) -> bool:
    if cap == "quire":
        return binding.has_quire
    return cap in binding.capabilities


def saturate(g: Psg, strict: bool = True) -> Psg:
    """Resolve reachability, capabilities, lifetimes and memory to a fixpoint.

    With strict=False capability failures are recorded as diagnostics and the
    offending target is dropped from the binding instead of raising.
    """
    from . import escape

    if g.saturated:
        return g
    iterations = 0
    # capabilities and target reachability per binding
    for name, rid in g.roots.items():
        root = g.nodes[rid]
        needed = _required_caps(root)
        bits = root.reachability
        for i, t in enumerate(g.targets):
            if not bits >> i & 1 or t not in g.bindings_config:
                continue
            for cap in sorted(needed):
                if not _target_has(g.bindings_config[t], cap):
                    if t in getattr(root, "explicit_targets", frozenset()):
                        err = CapabilityError(rid, t, cap, root.span, name)
                        if strict:
                            raise err
                        g.diagnostics.append(
                            Diagnostic("error", "capability", str(err), root.span, (f"{t}: not available",))
                        )
                    bits &= ~(1 << i)
        if bits != root.reachability:
            iterations += 1
            for n in g.binding_nodes(name):
                n.reachability &= bits
                n.coeffects = _replace(n.coeffects, targets=n.reachability)
    for e in g.edges:
        if e.kind is not EdgeKind.TRANSFER:
            r = g.nodes[e.src].reachability & g.nodes[e.dst].reachability
            if r != e.reachability:
                e.reachability = r
    _add_transfers(g)
    # lifetimes
    escape.promote(g)
    iterations += g.promote_iterations
    # memory: declared spaces stand; everything else follows its lifetime level
    for n in g.nodes.values():
        if n.state is State.FRESH:
            continue
        rec = n.coeffects
        life = n.lifetime if hasattr(n, "lifetime") else g.tentative(n.id)
        mem = rec.memory
        if not isinstance(mem, MemorySpace):
            mem = LEVEL_SPACES[life.level]
        new = _replace(rec, lifetime=life, memory=mem, targets=n.reachability)
        if new != rec:
            n.coeffects = new
    _context_dependence(g)
    for n in g.nodes.values():
        if n.state is not State.FRESH:
            n.saturated = True
    g.iterations = iterations
    g.saturated = True
    return g


def _add_transfers(g: Psg):
    """A call whose callee runs on targets the caller does not gets a Transfer edge per crossing."""
    existing = {(e.src, e.dst, e.transfer) for e in g.edges if e.kind is EdgeKind.TRANSFER}
    for e in list(g.edges):
        if e.kind is not EdgeKind.CONTROL or e.note != "call":
            continue
        callee, site = g.nodes[e.src], g.nodes[e.dst]
        only = callee.reachability & ~site.reachability
        if not only or not site.reachability:
            continue
        for s in g.target_names(only):
            dest = None
            for t in g.target_names(site.reachability):
                a, b = g.bindings_config.get(s), g.bindings_config.get(t)
                if a is not None and b is not None and (a.link_to(t) or b.link_to(s)):
                    dest = t
                    break
            if dest is None:
                dest = g.target_names(site.reachability)[0]
            key = (callee.id, site.id, (s, dest))
            if key in existing:
                continue
            te = g.add_edge(callee.id, site.id, EdgeKind.TRANSFER)
            te.transfer = (s, dest)
            te.reachability = g.target_bit(dest)
            existing.add(key)


def _context_dependence(g: Psg):
    """Poll-model functions instantiated with conflicting memory spaces at different call sites."""
    typed = g.typed
    if typed is None:
        return
    sites: dict[str, dict] = {}
    for n in g.nodes.values():
        if n.kind != "Var" or not isinstance(n.expr, A.Var):
            continue
        inst = typed.instantiations.get(id(n.expr))
        binder = typed.binder_of(n.expr)
        if inst is None or not isinstance(binder, A.Binding):
            continue
        _, mapping = inst
        for q, v in mapping.items():
            if isinstance(q, MemVar) and isinstance(v, MemorySpace):
                sites.setdefault(binder.name, {}).setdefault(v, []).append(n)
    for name, by_space in sites.items():
        if len(by_space) > 1:
            b = g.bindings.get(name)
            notes = tuple(
                f"{n.binding} at {n.span}: {space}" for space, ns in sorted(by_space.items(), key=lambda kv: str(kv[0])) for n in ns
            )
            g.diagnostics.append(
                Diagnostic(
                    "warning",
                    "context-dependent",
                    f"memory placement of {name} depends on the call site",
                    b.span if b else None,
                    notes + ("Consider: an arena scope or an explicit [<Memory: ...>] annotation",),
                )
            )


# -- three-state transitions ------------------------------------------------------------------


def _boundary(g: Psg, ids: set[int]) -> list[PsgEdge]:
    return [e for e in g.edges if (e.src in ids) != (e.dst in ids)]


def mark_latent(g: Psg, node_ids) -> Psg:
    ids = set(node_ids)
    for i in ids:
        n = g.nodes[i]
        if n.state is not State.LIVE:
            raise InvalidTransition(f"node {i} is {n.state.value}, not Live")
    for i in sorted(ids):
        g.nodes[i].state = State.LATENT
    return g


def reactivate(g: Psg, node_ids) -> Psg:
    """Latent -> Live. Only edges crossing the set boundary are re-checked."""
    ids = set(node_ids)
    for i in ids:
        n = g.nodes[i]
        if n.state is not State.LATENT:
            raise InvalidTransition(f"node {i} is {n.state.value}; only Latent nodes can be reactivated")
    for i in sorted(ids):
        g.nodes[i].state = State.LIVE
    for e in _boundary(g, ids):
        if e.kind is EdgeKind.TRANSFER:
            continue
        r = g.nodes[e.src].reachability & g.nodes[e.dst].reachability
        if r != e.reachability:
            e.reachability = r
    return g


def insert_fresh(g: Psg, exprs, binding: str = "") -> list[int]:
    """Add syntax-only nodes; they carry no type, dimension or coeffects."""
    out = []
    for e in exprs:
        n = g.add_node("Fresh", _label(e), e, 0, binding, getattr(e, "span", None))
        n.state = State.FRESH
        n.coeffects = None
        n.reachability = 0
        out.append(n.id)
    return out


def disable_target(g: Psg, name: str) -> Psg:
    """Drop a target: nodes reachable only there become Latent; others lose the bit."""
    bit = g.target_bit(name)
    cleared = []
    to_latent = []
    for n in g.nodes.values():
        if n.state is State.FRESH or not n.reachability & bit:
            continue
        n.reachability &= ~bit
        cleared.append(n.id)
        if n.reachability == 0 and n.state is State.LIVE:
            to_latent.append(n.id)
    for e in g.edges:
        if e.reachability & bit:
            e.reachability &= ~bit
    g._disabled[name] = cleared
    mark_latent(g, to_latent)
    g._disabled[name + "#latent"] = to_latent
    return g


def enable_target(g: Psg, name: str) -> Psg:
    bit = g.target_bit(name)
    for i in g._disabled.pop(name, []):
        g.nodes[i].reachability |= bit
    reactivate(g, g._disabled.pop(name + "#latent", []))
    for e in g.edges:
        if e.kind is EdgeKind.TRANSFER:
            if e.transfer and e.transfer[1] == name:
                e.reachability |= bit
            continue
        e.reachability = g.nodes[e.src].reachability & g.nodes[e.dst].reachability
    return g


@dataclass(frozen=True)
class PsgView:
    graph: Psg
    target: str
    node_ids: tuple
    edge_ids: tuple

    def nodes(self) -> list[PsgNode]:
        return [self.graph.nodes[i] for i in self.node_ids]

    def __len__(self) -> int:
        return len(self.node_ids)

    def __contains__(self, nid: int) -> bool:
        return nid in self.node_ids


def active_subgraph(g: Psg, target: str) -> PsgView:
    bit = g.target_bit(target)
    ids = tuple(i for i, n in g.nodes.items() if n.state is State.LIVE and n.reachability & bit)
    keep = set(ids)
    eids = tuple(e.id for e in g.edges if e.src in keep and e.dst in keep and e.reachability & bit)
    return PsgView(g, target, ids, eids)


# -- dump -------------------------------------------------------------------------------------------


def _bits(g: Psg, b: int) -> str:
    return "".join("1" if b >> i & 1 else "0" for i in range(len(g.targets))) or "-"


def dump(g: Psg, units=None) -> str:
    """One line per node, then one per edge, ordered by id.

    node <id> <state> <kind> <label> : <type> | dim=<dimension> | <coeffects> | ssa=<name> reach=<bits>
    edge <id> <src> -> <dst> <kind>[ flow][ from->to] reach=<bits>
    """
    units = units or (g.typed.display_units if g.typed else None)
    lines = []
    with g.passive_mode():
        for i in sorted(g.nodes):
            n = g.nodes[i]
            ty = T.format_type(n.type, units) if n.type is not None else "-"
            dim = T.format_dim(n.dimension, units) if n.dimension is not None else "-"
            c = n.coeffects
            if c is None:
                co = "-"
            else:
                caps = ",".join(sorted(c.capabilities)) or "-"
                capt = ",".join(sorted(c.captures)) or "-"
                life = str(c.lifetime) if c.lifetime else "?"
                mem = str(c.memory) if isinstance(c.memory, MemorySpace) else "?"
                co = f"em={c.emission.value} life={life} mem={mem} caps={caps} captures={capt}"
            esc = f" esc={n.escape.kind_name}" if n.escape is not None else ""
            lines.append(
                f"node {n.id} {n.state.value} {n.kind} {n.label} : {ty} | dim={dim} | {co}{esc} | ssa={n.ssa} reach={_bits(g, n.reachability)}"
            )
        for e in g.edges:
            extra = " flow" if e.flow else ""
            if e.transfer:
                extra += f" {e.transfer[0]}->{e.transfer[1]}"
            lines.append(f"edge {e.id} {e.src} -> {e.dst} {e.kind.value}{extra} reach={_bits(g, e.reachability)}")
    return "\n".join(lines) + ("\n" if lines else "")
