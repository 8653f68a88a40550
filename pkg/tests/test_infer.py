from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cleflite.dims import DEFAULT_UNITS, Dimension, format_dimension
from cleflite.infer import DimensionError, InferenceError, TypeMismatch, UnboundVariable, UnknownUnit
from cleflite.syntax import ast as A
from cleflite.types import format_scheme, type_dimension

from conftest import fixture_text
from helpers import typed_of


def schemes(src: str) -> dict[str, str]:
    return {k: format_scheme(v) for k, v in typed_of(src).schemes.items()}


def test_unannotated_force_is_polymorphic():
    s = schemes(fixture_text("gravity.clef"))["computeForce"]
    assert s == "float<'d_mass1> -> float<'d_mass2> -> float<'d_distance> -> float<'d_g * 'd_mass1 * 'd_mass2 * 'd_distance^-2>"


def test_annotated_force_resolves_to_newtons():
    s = schemes(fixture_text("gravity_targets.clef"))
    assert s["computeForce"] == "float<kg> -> float<kg> -> float<m> -> float<newtons>"
    assert s["hostForce"] == s["computeForce"]


def test_let_polymorphism():
    s = schemes("let id x = x\nlet use (a: float<m>) (b: float<s>) = (id a, id b)\n")
    assert s["id"] == "'a -> 'a"
    assert s["use"] == "float<m> -> float<s> -> float<m> * float<s>"


def test_dimension_polymorphic_square():
    s = schemes("let sq x = x * x\nlet area (w: float<m>) = sq w\n")
    assert s["sq"] == "float<'d_x> -> float<'d_x^2>"
    assert s["area"] == "float<m> -> float<m^2>"


def test_division_and_unit_literals():
    assert schemes("let v (d: float<m>) (t: float<s>) = d / t\n")["v"] == "float<m> -> float<s> -> float<m * s^-1>"
    assert schemes("let f (x: float<m>) = x + 2.0\n")["f"] == "float<m> -> float<m>"
    assert schemes("let c = 3.0<m/s>\n")["c"] == "float<m * s^-1>"


def test_quire_fma_dimension_is_product():
    t = typed_of(fixture_text("quire_work.clef"))
    assert format_scheme(t.schemes["work"]) == "Span<float<newtons>> -> Span<float<m>> -> float<joules>"
    q = next(n for n in A.walk(t.program.binding("work").body) if isinstance(n, A.Let) and n.name == "q")
    assert type_dimension(t.binder_type(q)) == DEFAULT_UNITS.lookup("joules").dimension


def test_dimension_mismatch_names_both_operands():
    with pytest.raises(DimensionError) as info:
        typed_of(fixture_text("bad.clef"))
    e = info.value
    assert "dimension mismatch at '+': m vs s" in str(e)
    assert e.residual == Dimension.of(length=1, time=-1)
    assert format_dimension(e.residual, unicode=True) == "m·s⁻¹"
    assert [str(r) for r in e.related] == ["1:9", "1:23"]


def test_return_annotation_mismatch():
    with pytest.raises(DimensionError, match="return annotation"):
        typed_of("let f (x: float<m>) : float<s> = x\n")


@pytest.mark.parametrize(
    "src, err",
    [
        ("let f x = y\n", UnboundVariable),
        ("let f (x: float<furlongs>) = x\n", UnknownUnit),
        ("let f (x: float<m>) = x + 1\n", TypeMismatch),
        ("let f (x: float<m>) = x 1\n", TypeMismatch),
    ],
)
def test_errors(src, err):
    with pytest.raises(err) as info:
        typed_of(src)
    assert isinstance(info.value, InferenceError)
    assert info.value.span.line == 1


def test_solution_verifies():
    for name in ["gravity.clef", "readings.clef", "gravity_targets.clef", "quire_work.clef"]:
        assert typed_of(fixture_text(name)).verify()


def test_display_prefers_source_unit_names():
    t = typed_of(fixture_text("readings.clef"))
    assert format_scheme(t.schemes["processReadings"], t.display_units) == "Span<float<celsius>> -> Span<float<celsius>> * Summary"


def test_references_resolve_to_binders():
    t = typed_of("let f (x: float<m>) =\n    let y = x\n    y\n")
    body = t.program.binding("f").body
    var_y = body.body
    assert t.binder_of(var_y) is body


EXP = st.integers(-3, 3)


@settings(max_examples=60, deadline=None)
@given(st.tuples(EXP, EXP, EXP), st.tuples(EXP, EXP, EXP))
def test_product_of_annotated_params(a, b):
    def unit(t):
        parts = [f"{s}^{k}" for s, k in zip(("m", "s", "kg"), t) if k]
        return " * ".join(parts) if parts else "1"

    src = f"let f (x: float<{unit(a)}>) (y: float<{unit(b)}>) = x * y\n"
    t = typed_of(src)
    arg = t.schemes["f"].body.result.result
    want = Dimension.of(length=a[0] + b[0], time=a[1] + b[1], mass=a[2] + b[2])
    assert arg.dim == want
