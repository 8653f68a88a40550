from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cleflite.syntax import ParseError, desugar, parse, parse_expr, parse_type, pretty, pretty_expr, pretty_type, tokenize
from cleflite.syntax import ast as A

from conftest import FIXTURES


@pytest.mark.parametrize("path", sorted(FIXTURES.glob("*.clef")), ids=lambda p: p.stem)
def test_fixture_round_trip(path):
    p = parse(path.read_text(encoding="utf-8"))
    assert parse(pretty(p)) == p


names = st.sampled_from(["x", "y", "force", "m1"])
leaves = st.one_of(
    names.map(A.Var),
    st.integers(0, 999).map(lambda n: A.Literal(n, False)),
    st.sampled_from([0.5, 6.674e-11, 1e25]).map(lambda v: A.Literal(v, True)),
)


def _compound(sub):
    return st.one_of(
        st.builds(A.BinOp, st.sampled_from(["+", "-", "*", "/"]), sub, sub),
        st.builds(A.Apply, names.map(A.Var), sub),
        st.builds(lambda a, b: A.Tuple([a, b]), sub, sub),
        st.builds(lambda p, b: A.Lambda([A.Param(p)], b), names, sub),
    )


exprs = st.recursive(leaves, _compound, max_leaves=8)


@settings(max_examples=200)
@given(exprs)
def test_expression_round_trip(e):
    assert parse_expr(pretty_expr(e)) == e


def test_arithmetic_precedence_and_associativity():
    e = parse_expr("a - b - c * d / e")
    assert e == A.BinOp(
        "-",
        A.BinOp("-", A.Var("a"), A.Var("b")),
        A.BinOp("/", A.BinOp("*", A.Var("c"), A.Var("d")), A.Var("e")),
    )


def test_pipe_becomes_application():
    assert parse_expr("a |> f |> g") == parse_expr("g (f a)")


def test_application_is_left_nested():
    e = parse_expr("f a b")
    assert e == A.Apply(A.Apply(A.Var("f"), A.Var("a")), A.Var("b"))


def test_literal_with_unit():
    e = parse_expr("6.674e-11<m^3 * kg^-1 * s^-2>")
    assert isinstance(e, A.Literal) and e.is_float and e.unit is not None


def test_types_parse_and_print():
    for text in ["float<kg>", "Span<float<celsius>> -> Summary", "float<'u> -> float<'u^2>", "(float * int)"]:
        assert parse_type(pretty_type(parse_type(text))) == parse_type(text)


def test_offside_rule_blocks():
    src = "let f x =\n    let y = x\n    y\nlet g = 1\n"
    p = parse(src)
    assert [b.name for b in p.bindings] == ["f", "g"]
    assert isinstance(p.binding("f").body, A.Let)


def test_attributes_and_extern():
    p = parse((FIXTURES / "gravity_targets.clef").read_text())
    b = p.binding("computeForce")
    assert b.attr(A.TargetAttr).targets == ["x86_64", "xilinx"]
    r = b.attr(A.RangeAttr)
    assert (r.lo, r.hi) == (1e-2, 1e25)
    ext = parse("val summarize : Span<float<'u>> -> Summary\n").externs
    assert ext[0].name == "summarize"


def test_spans_are_one_based():
    e = parse("let f x =\n    x + 1\n").binding("f").body
    assert (e.span.line, e.span.col) == (2, 5)


def test_tokens_mark_adjacency():
    toks = tokenize("1.5<m> a <b")
    lt = [t for t in toks if t.text == "<"]
    assert lt[0].adjacent and not lt[1].adjacent


@pytest.mark.parametrize(
    "src",
    ["let f x =\n  x +\n", "let = 3\n", "let f (x: float<m) = x\n", "let f x = (x\n"],
)
def test_parse_errors_carry_location(src):
    with pytest.raises(ParseError) as info:
        parse(src)
    assert info.value.loc.line >= 1
    assert str(info.value).startswith(f"{info.value.loc.line}:")


def test_arena_block_desugars_to_scope():
    p = desugar(parse((FIXTURES / "bounded.clef").read_text()))
    body = p.binding("processReadings").body
    assert isinstance(body, A.ArenaScope)
    lets = [n for n in A.walk(body) if isinstance(n, A.Let)]
    assert lets and all(l.memory == "arena" and l.scope == body.scope for l in lets)
    assert not any(isinstance(n, (A.ArenaBlock, A.Return)) for n in A.walk(body))


def test_lambda_inside_arena_keeps_own_frame():
    src = "let f () = arena {\n    let g = fun x ->\n        let y = x\n        y\n    g 1\n}\n"
    body = desugar(parse(src)).binding("f").body
    outer = [n for n in A.walk(body) if isinstance(n, A.Let) and n.name == "g"]
    inner = [n for n in A.walk(body) if isinstance(n, A.Let) and n.name == "y"]
    assert outer[0].memory == "arena"
    assert inner[0].memory is None


def test_nested_arenas_get_distinct_scopes():
    src = "let f () = arena {\n    let a = 1\n    arena {\n        let b = 2\n        b\n    }\n}\n"
    body = desugar(parse(src)).binding("f").body
    scopes = {n.scope for n in A.walk(body) if isinstance(n, A.ArenaScope)}
    assert len(scopes) == 2


def test_pretty_program_is_stable():
    p = parse((FIXTURES / "readings.clef").read_text())
    once = pretty(p)
    assert pretty(parse(once)) == once
