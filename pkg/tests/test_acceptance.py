"""One test per acceptance criterion; the terminal summary lists PASS/FAIL for each."""

from __future__ import annotations

import math
import random
import re
from fractions import Fraction

import pytest

from cleflite.dims import (
    N_BASE,
    Dimension,
    DimEquation,
    DimVarSupply,
    dim_unify,
    format_dimension,
    gradient_dimension,
)
from cleflite.escape import (
    RANK,
    EscapeKind,
    ad_signature,
    classify,
    classify_all,
    escapes,
    promote,
    site_name,
    suggest_restructurings,
    verify_forward_no_tape,
)
from cleflite.psg import CapabilityError, EdgeKind, Psg, State, mark_latent, reactivate
from cleflite.repr import Ieee, NoViableCandidate, Posit, Quire, ValueRange, covers, quire_spec, select_representation
from cleflite.repr.quire import naive_accumulate, quire_accumulate
from cleflite.report import analyze, render_text
from cleflite.targets import select_format
from cleflite.types import format_scheme

from conftest import GOLDEN, fixture_text
from helpers import config, graph_of, typed_of
from oracles import brute_select, check_system, escape_oracle, posit_round, posit_value, random_psg, random_system


def _render(name: str, show: str = "all") -> str:
    return render_text(analyze(fixture_text(name), config(), name), show)


def _golden(name: str) -> str:
    return (GOLDEN / name).read_text(encoding="utf-8")


# -- 1 ---------------------------------------------------------------------------------------


def test_gravity_polymorphic_force(criterion):
    with criterion("Gravity: polymorphic computeForce, 'd_g = m³·kg⁻¹·s⁻²", limit=1.0):
        typed = typed_of(fixture_text("gravity.clef"))
        scheme = typed.schemes["computeForce"]
        assert format_scheme(scheme) == (
            "float<'d_mass1> -> float<'d_mass2> -> float<'d_distance> -> "
            "float<'d_g * 'd_mass1 * 'd_mass2 * 'd_distance^-2>"
        )
        named = {v.name: v for v in scheme.dim_vars}
        assert set(named) == {"mass1", "mass2", "distance", "g"}
        result = scheme.body
        while hasattr(result, "result"):
            result = result.result
        kg, m = Dimension.of(mass=1), Dimension.of(length=1)
        newtons = typed.units.lookup("newtons").dimension
        sub = dim_unify([
            DimEquation(Dimension.var(named["mass1"]), kg),
            DimEquation(Dimension.var(named["mass2"]), kg),
            DimEquation(Dimension.var(named["distance"]), m),
            DimEquation(result.dim, newtons),
        ])
        d_g = sub.apply(Dimension.var(named["g"]))
        assert d_g == Dimension.of(length=3, mass=-1, time=-2)
        assert format_dimension(d_g, unicode=True) == "m³·kg⁻¹·s⁻²"
        ret = sub.apply(result.dim)
        assert ret == Dimension.of(mass=1, length=1, time=-2)
        assert format_dimension(ret, unicode=True) == "m·kg·s⁻²"
        # the same instantiation, written as a caller, type checks
        caller = fixture_text("gravity.clef") + (
            "\nlet useForce (a: float<kg>) (b: float<kg>) (r: float<m>) : float<newtons> =\n"
            "    computeForce a b r\n"
        )
        assert format_scheme(typed_of(caller).schemes["useForce"]) == (
            "float<kg> -> float<kg> -> float<m> -> float<newtons>"
        )


# -- 2 ---------------------------------------------------------------------------------------


def test_readings_return_escape(criterion):
    with criterion("Readings: ReturnEscape, stack -> arena(caller), 3 suggestions", limit=1.0):
        g = graph_of(fixture_text("readings.clef"))
        found = [(n, r) for n, r in escapes(g) if site_name(g, n) == "readings"]
        assert len(found) == 1
        site, rec = found[0]
        assert rec.kind is EscapeKind.RETURN_ESCAPE
        assert rec.promoted_from.level_name == "stack"
        assert rec.promoted_to.level_name == "arena"
        assert rec.promoted_to.scope == 0  # the caller's frame
        sugg = suggest_restructurings(g, site)
        assert [s.title for s in sugg] == ["Caller-provided buffer", "Continuation style", "Explicit annotation"]
        assert _render("readings.clef", "escapes") == _golden("readings.escapes.txt")


# -- 3 ---------------------------------------------------------------------------------------

_APPROX = re.compile(r"~(\d\.\de-?\d+)")
LISTED_APPROX = {"in [0.01, 100]": 1.5e-9, "at regime extremes": 3.9e-3}


def test_gravity_across_targets(criterion):
    with criterion("Gravity across targets: float64/posit32, lossless transfer, golden", limit=5.0):
        rep = analyze(fixture_text("gravity_targets.clef"), config(), "gravity_targets.clef")
        g = rep.graph
        cfg = config()
        b = g.bindings["computeForce"]
        assert select_format(b, cfg["x86_64"])[0].short_name == "float64"
        assert select_format(b, cfg["xilinx"])[0].short_name == "posit32"
        assert covers(Posit(32), ValueRange(1e-2, 1e25))
        transfers = [e.report for e in g.edges if e.kind is EdgeKind.TRANSFER]
        assert transfers, "expected a xilinx -> x86_64 transfer"
        t = transfers[0]
        assert (t.source, t.dest) == ("xilinx", "x86_64")
        assert t.fidelity == 1.0 and t.lossless
        text = render_text(rep, "all")
        golden = _golden("gravity_targets.all.txt")
        assert _APPROX.sub("~N", text) == _APPROX.sub("~N", golden)
        # analytic figures stay within one decade of the published approximations
        line = next(ln for ln in text.splitlines() if "Precision: ~" in ln)
        for (label, listed), ours in zip(LISTED_APPROX.items(), _APPROX.findall(line)):
            assert label in line
            assert abs(math.log10(float(ours) / listed)) <= 1.0, (label, ours, listed)


# -- 4 ---------------------------------------------------------------------------------------


def test_range_warning_astronomical(criterion):
    with criterion("Range warning: posit32 does not cover [1e-11, 1e72], rescaling suggested", limit=5.0):
        text = _render("astronomical.clef", "repr")
        assert text == _golden("astronomical.repr.txt")
        warning = text[text.index("Warning:"):]
        assert warning.splitlines() == [
            "Warning: posit<32, es=2> dynamic range [1e-36, 1e36] does not cover",
            "  full dimensional range [1e-11, 1e72] of astronomicalDistance<meters>",
            "  Consider: float64 (covers full range) or scaling to AU (closer to posit range)",
        ]


# -- 5 ---------------------------------------------------------------------------------------


def test_quire_spec_and_loihi2(criterion):
    with criterion("Quire spec: 512 bits / 64 bytes / 1 line; loihi2 CapabilityError", limit=5.0):
        q = quire_spec(32)
        assert (q.bits, q.bytes, q.cache_lines(64)) == (512, 64, 1)
        with pytest.raises(CapabilityError) as info:
            graph_of(fixture_text("quire_work.clef"), strict=True)
        assert info.value.target == "loihi2"
        assert info.value.missing == "quire"


# -- 6 ---------------------------------------------------------------------------------------


def _p8(x) -> int:
    return posit_round(8, 2, Fraction(x))


def _adversarial(rng):
    """A large term, many small ones, then the large term cancelled."""
    big = rng.choice([16, 64, 256, 1024])
    small = Fraction(1, rng.choice([2, 4, 8, 16]))
    one = _p8(1)
    body = [(_p8(small), one)] * rng.randint(4, 20)
    return [(_p8(big), one)] + body + [(_p8(-big), one)]


def test_quire_exactness(criterion):
    with criterion("Quire exactness: 1,000 posit(8,2) dot products round once", limit=10.0):
        rng = random.Random(2024)
        patterns = [p for p in range(256) if p != 0x80]
        divergent = 0
        for i in range(1000):
            if i % 10 == 0:
                prods = _adversarial(rng)
            else:
                prods = [(rng.choice(patterns), rng.choice(patterns)) for _ in range(rng.randint(0, 32))]
            exact = sum((posit_value(8, 2, a) * posit_value(8, 2, b) for a, b in prods), Fraction(0))
            got = quire_accumulate(Quire.zero(8), prods)
            assert got == posit_round(8, 2, exact), prods
            if naive_accumulate(Posit(8), prods) != got:
                divergent += 1
        assert divergent >= 1


# -- 7 ---------------------------------------------------------------------------------------

CANDIDATES = {"posit8": Posit(8), "posit16": Posit(16), "float32": Ieee(32)}


def test_selector_matches_enumeration(criterion):
    with criterion("Selector equals brute-force enumeration on 200 decade ranges", limit=30.0):
        rng = random.Random(7)
        outcomes = set()
        for _ in range(200):
            a = rng.randint(-50, 45)
            r = ValueRange(10.0**a, 10.0 ** (a + rng.randint(1, 12)))
            # the full candidate list, plus a random subset so posit-vs-posit ranking is exercised
            subset = rng.sample(list(CANDIDATES), rng.randint(1, 3))
            for names in (list(CANDIDATES), subset):
                want = brute_select(r.exact_lo, r.exact_hi, names)
                formats = [CANDIDATES[n] for n in names]
                if want is None:
                    with pytest.raises(NoViableCandidate):
                        select_representation(r, formats)
                    outcomes.add(None)
                    continue
                sel = select_representation(r, formats)
                assert sel.format == CANDIDATES[want[0]], (r, names, want)
                assert sel.profile.exact_summary == want[1]
                outcomes.add(want[0])
        assert {None, "posit8", "posit16", "float32"} <= outcomes


# -- 8 ---------------------------------------------------------------------------------------


def _rand_dim(rng, vs):
    return Dimension([rng.randint(-3, 3) for _ in range(N_BASE)], {v: rng.randint(-3, 3) for v in vs})


def test_unification_properties(criterion):
    with criterion("Unification: 10,000 systems vs exhaustive [-3, 3] enumeration", limit=60.0):
        rng = random.Random(11)
        failures = []
        solved = 0
        for _ in range(10_000):
            supply = DimVarSupply()
            xs, eqs = random_system(rng, supply)
            # group laws on dimensions over the same variables
            a, b, c = (_rand_dim(rng, xs) for _ in range(3))
            one = Dimension()
            if not ((a * b) * c == a * (b * c) and a * b == b * a and a * one == a and a / a == one):
                failures.append(("group laws", a, b, c))
            fails = check_system(xs, eqs, supply, rng)
            failures.extend(fails)
            if not fails:
                try:
                    dim_unify(eqs, DimVarSupply(100))
                    solved += 1
                except Exception:
                    pass
        assert not failures, failures[:5]
        assert 1000 < solved < 10_000  # both outcomes are exercised


# -- 9 ---------------------------------------------------------------------------------------


def _expected(g, nid, key):
    n = g.nodes[nid]
    tent = g.tentative(nid)
    if key is None or key[0] <= tent.key:
        return EscapeKind.STACK_SCOPED, None
    kind = next(k for k, r in RANK.items() if r == key[1])
    closure = -key[2] if key[2] != 1 else None
    to = max(key[0], n.floor.key) if n.floor is not None else key[0]
    return kind, (to, closure)


def test_escape_oracle(criterion):
    with criterion("Escape: classify/promote equal the reachability oracle on 500 graphs", limit=30.0):
        rng = random.Random(5)
        escaped = 0
        for _ in range(500):
            g = random_psg(rng)
            want = escape_oracle(g)
            promote(g)
            for nid, key in want.items():
                n = g.nodes[nid]
                kind, detail = _expected(g, nid, key)
                assert n.escape.kind is kind, (nid, key, n.escape)
                if detail is not None:
                    escaped += 1
                    assert n.escape.promoted_to.key == detail[0]
                    assert n.escape.closure == detail[1]
                    assert n.escape.promoted_from == g.tentative(nid)
                life = [g.tentative(nid).key] + ([n.floor.key] if n.floor else []) + ([key[0]] if key else [])
                assert n.lifetime.key == max(life)
            # idempotent: a second run writes nothing
            before = {i: n.writes for i, n in g.nodes.items()}
            lives = {i: n.lifetime for i, n in g.nodes.items()}
            promote(g)
            assert {i: n.writes for i, n in g.nodes.items()} == before
            assert classify_all(g) == {i: g.nodes[i].escape for i in classify_all(g)}
            # monotone: more edges never lower a lifetime
            src, dst = rng.sample(sorted(g.nodes), 2)
            g.add_edge(src, dst, EdgeKind.DATA, flow=True)
            promote(g)
            for i, life in lives.items():
                assert g.nodes[i].lifetime.key >= life.key
        assert escaped > 100


# -- 10 --------------------------------------------------------------------------------------


def test_three_state_round_trip(criterion):
    with criterion("Three-state: latent/reactivate keeps annotations, interior writes = 0", limit=5.0):
        g = graph_of(fixture_text("gravity_targets.clef"))
        region = {n.id for n in g.binding_nodes("computeForce") if n.kind != "Binding"}
        snapshot = {i: n.annotations() for i, n in g.nodes.items()}
        inner = [e for e in g.edges if e.src in region and e.dst in region]
        boundary = [e for e in g.edges if (e.src in region) != (e.dst in region)]
        assert inner and boundary
        mark_latent(g, region)
        assert all(g.nodes[i].state is State.LATENT for i in region)
        # poison one interior and one boundary edge: only the boundary may be re-checked
        sentinel = -1
        inner[0].reachability = sentinel
        boundary[0].reachability = sentinel
        writes = {i: g.nodes[i].writes for i in region}
        reactivate(g, region)
        assert {i: g.nodes[i].writes for i in region} == writes
        assert inner[0].reachability == sentinel
        assert boundary[0].reachability != sentinel
        assert {i: n.annotations() for i, n in g.nodes.items()} == snapshot
        assert all(g.nodes[i].state is State.LIVE for i in region)


# -- 11 --------------------------------------------------------------------------------------


def _ad_fixture():
    """x and its tangent dx feed a product and its derivative; nothing leaves the frame."""
    g = Psg(("cpu",))
    fn = g.add_scope("function", 0, owner="f")
    root = g.add_node("Binding", "f", scope=0, binding="f")
    x = g.add_node("Param", "x", scope=fn, binding="f")
    dx = g.add_node("Param", "dx", scope=fn, binding="f")
    y = g.add_node("BinOp", "*", scope=fn, binding="f")
    dy = g.add_node("BinOp", "+", scope=fn, binding="f")
    for a, b in ((x, y), (x, dy), (dx, dy)):
        g.add_edge(a.id, b.id, EdgeKind.DATA)
    promote(g)
    return g, root, [x.id, dx.id, y.id, dy.id]


def test_gradient_closure_and_forward_ad(criterion):
    with criterion("Gradient closure over 10,000 triples; forward AD region is tape-free", limit=1.0):
        rng = random.Random(3)
        for _ in range(10_000):
            a, b, c = (Dimension([rng.randint(-4, 4) for _ in range(N_BASE)]) for _ in range(3))
            assert gradient_dimension(a, c) == gradient_dimension(a, b) * gradient_dimension(b, c)
        assert not ad_signature("Forward").tape_required
        assert ad_signature("Reverse").tape_required
        g, root, region = _ad_fixture()
        assert verify_forward_no_tape(g, set(region))
        assert verify_forward_no_tape(g, "f")
        # inject a value that leaves the frame through the function result
        leak = g.add_node("Apply", "tape", scope=g.nodes[region[0]].scope, binding="f")
        g.add_edge(region[2], leak.id, EdgeKind.DATA, flow=True)
        g.add_edge(leak.id, root.id, EdgeKind.RETURN, flow=True)
        assert classify(g, leak.id).kind is EscapeKind.RETURN_ESCAPE
        assert not verify_forward_no_tape(g, set(region) | {leak.id})
        assert not verify_forward_no_tape(g, "f")
