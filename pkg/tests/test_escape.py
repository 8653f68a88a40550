from __future__ import annotations

import random

import pytest

from cleflite.escape import (
    AdMode,
    EscapeKind,
    allocation_strategy,
    classify,
    escapes,
    promote,
    site_name,
    suggest_restructurings,
    verify_forward_no_tape,
    ad_signature,
)
from cleflite.psg import EdgeKind, LifetimeClass, Psg

from conftest import fixture_text
from helpers import config, graph_of
from oracles import escape_oracle, random_psg


def test_readings_return_to_caller_arena():
    g = graph_of(fixture_text("readings.clef"))
    (n, rec), = escapes(g)
    assert site_name(g, n) == "readings"
    assert rec.kind is EscapeKind.RETURN_ESCAPE
    assert rec.promoted_from.level_name == "stack"
    assert (rec.promoted_to.level_name, rec.promoted_to.scope) == ("arena", 0)
    assert [g.edge(i).kind for i in rec.chain][-1] is EdgeKind.RETURN
    d = allocation_strategy(rec, config()["x86_64"])
    assert (d.strategy, d.level, str(d.region)) == ("arena-caller", "arena", "arena")


def test_alternatives_keep_readings_on_the_stack():
    g = graph_of(fixture_text("readings_alternatives.clef"))
    by_binding = {}
    for n in g.nodes.values():
        if n.allocates:
            by_binding.setdefault(n.binding, []).append(n.escape.kind)
    assert set(by_binding["processReadingsBuffer"]) == {EscapeKind.STACK_SCOPED}
    assert set(by_binding["processReadingsCps"]) == {EscapeKind.STACK_SCOPED}
    assert EscapeKind.RETURN_ESCAPE in by_binding["processReadingsDeclared"]


def test_declared_arena_gets_no_suggestions():
    g = graph_of(fixture_text("readings_alternatives.clef"))
    (n, rec), = escapes(g)
    assert n.binding == "processReadingsDeclared" and n.declared
    assert suggest_restructurings(g, n) == []


def test_undeclared_return_escape_gets_three_suggestions():
    g = graph_of(fixture_text("readings.clef"))
    (n, rec), = escapes(g)
    sugg = suggest_restructurings(g, n)
    assert [s.name for s in sugg] == ["caller-buffer", "continuation", "explicit-annotation"]
    assert all(s.chain == rec.chain for s in sugg)


def test_captured_chain_of_returned_closures():
    src = (
        "let f (s: Span<float<m>>) =\n"
        "    let a = Span.map (fun x -> x) s\n"
        "    let k1 = fun y -> a\n"
        "    let k2 = fun z -> k1\n"
        "    let k3 = fun w -> k2\n"
        "    k3\n"
    )
    g = graph_of(src)
    found = {site_name(g, n): rec for n, rec in escapes(g)}
    assert set(found) == {"a", "k1", "k2", "k3"}
    assert {r.promoted_to.key for r in found.values()} == {(1, 0)}
    # each chain is a suffix of the one before it
    chains = [found[k].chain for k in ("a", "k1", "k2", "k3")]
    assert all(outer[-len(inner):] == inner for outer, inner in zip(chains, chains[1:]))


def _chain_graph():
    """v is captured by c1, c1 by c2, c2 by c3, and c3 is returned."""
    g = Psg(("cpu",))
    fn = g.add_scope("function", 0)
    root = g.add_node("Binding", "f", scope=0)
    v = g.add_node("Apply", "v", scope=fn)
    cs = [g.add_node("Lambda", f"c{i}", scope=fn) for i in (1, 2, 3)]
    g.add_edge(v.id, cs[0].id, EdgeKind.CAPTURE)
    g.add_edge(cs[0].id, cs[1].id, EdgeKind.CAPTURE)
    g.add_edge(cs[1].id, cs[2].id, EdgeKind.CAPTURE)
    g.add_edge(cs[2].id, root.id, EdgeKind.RETURN, flow=True)
    return g, v, cs


def test_closure_capture_names_the_first_closure():
    g, v, cs = _chain_graph()
    promote(g)
    rec = v.escape
    assert rec.kind is EscapeKind.CLOSURE_CAPTURE and rec.closure == cs[0].id
    assert rec.kind_name == f"ClosureCapture({cs[0].id})"
    assert rec.promoted_to == LifetimeClass(1, 0, 0)
    assert len(rec.chain) == 4
    assert cs[2].escape.kind is EscapeKind.RETURN_ESCAPE
    assert allocation_strategy(rec).strategy == "arena-closure"


def test_unreturned_closure_keeps_captures_on_the_stack():
    g, v, cs = _chain_graph()
    g.edges.pop()
    g._out = g._in = None
    promote(g)
    assert all(n.escape.kind is EscapeKind.STACK_SCOPED for n in [v, *cs])


def test_byref_escape():
    g = Psg(("cpu",))
    outer = g.add_scope("function", 0)
    inner = g.add_scope("arena", outer)
    ref = g.add_node("Let", "r", scope=outer)
    v = g.add_node("Apply", "v", scope=inner)
    g.add_edge(v.id, ref.id, EdgeKind.BYREF)
    assert classify(g, v.id).kind is EscapeKind.BYREF_ESCAPE
    assert classify(g, v.id).promoted_to.scope == outer


def test_static_return_promotes_to_static():
    g = Psg(("cpu",))
    fn = g.add_scope("function", 0)
    root = g.add_node("Binding", "table", scope=0)
    root.static_return = True
    v = g.add_node("Apply", "v", scope=fn)
    g.add_edge(v.id, root.id, EdgeKind.RETURN, flow=True)
    assert classify(g, v.id).promoted_to.level_name == "static"


@pytest.mark.parametrize("seed", range(60))
def test_promote_matches_oracle(seed):
    g = random_psg(random.Random(seed))
    want = escape_oracle(g)
    promote(g)
    for nid, key in want.items():
        n = g.nodes[nid]
        life = [g.tentative(nid).key] + ([n.floor.key] if n.floor else []) + ([key[0]] if key else [])
        assert n.lifetime.key == max(life)
        if key is None:
            assert n.escape.kind is EscapeKind.STACK_SCOPED


def test_ad_signatures():
    fwd, rev = ad_signature(AdMode.FORWARD), ad_signature("Reverse")
    assert (fwd.aux_memory, fwd.tape_required) == ("ConstantPerLayer", False)
    assert (rev.aux_memory, rev.tape_required) == ("LinearInDepth", True)


def test_forward_region_without_escapes_is_tape_free():
    g = graph_of("let f (x: float<m>) (y: float<m>) =\n    let s = x * y\n    s + s\n")
    interior = {g.find("s", "Let").id, g.find("*", "BinOp").id}
    assert verify_forward_no_tape(g, interior)
    # the function's result itself is returned to the caller
    assert not verify_forward_no_tape(g, "f")
    g = graph_of(fixture_text("readings.clef"))
    assert not verify_forward_no_tape(g, "processReadings")
