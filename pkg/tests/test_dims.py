from __future__ import annotations

import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cleflite.dims import (
    ARENA,
    DEFAULT_UNITS,
    N_BASE,
    STACK,
    DimEquation,
    Dimension,
    DimVarSupply,
    Inconsistent,
    MemEquation,
    MemVar,
    dim_unify,
    format_dimension,
    gradient_dimension,
    mem_unify,
    parse_unit_spec,
)

from oracles import check_system, random_system

SUPPLY = DimVarSupply(1000)
VARS = [SUPPLY.fresh(n) for n in "uvw"]

exps = st.integers(-4, 4)
ground = st.lists(exps, min_size=N_BASE, max_size=N_BASE).map(Dimension)
dims = st.builds(
    lambda base, ks: Dimension(base, dict(zip(VARS, ks))),
    st.lists(exps, min_size=N_BASE, max_size=N_BASE),
    st.lists(exps, min_size=3, max_size=3),
)


@given(dims, dims, dims)
def test_group_laws(a, b, c):
    one = Dimension.dimensionless()
    assert (a * b) * c == a * (b * c)
    assert a * b == b * a
    assert a * one == a
    assert a * a.inverse() == one
    assert a / b == a * b ** -1


@given(dims, st.integers(-3, 3), st.integers(-3, 3))
def test_power_laws(a, j, k):
    assert a ** j * a ** k == a ** (j + k)
    assert (a ** j) ** k == a ** (j * k)


@given(ground, ground, ground)
def test_gradient_chain_rule(a, b, c):
    assert gradient_dimension(a, c) == gradient_dimension(a, b) * gradient_dimension(b, c)


def test_gradient_of_energy_by_position_is_force():
    joules = DEFAULT_UNITS.lookup("joules").dimension
    m = Dimension.of(length=1)
    assert gradient_dimension(joules, m) == DEFAULT_UNITS.lookup("newtons").dimension


def test_equal_dimensions_hash_alike():
    a = Dimension.of(length=1, time=-2)
    b = Dimension([1, -2])
    assert a == b and hash(a) == hash(b)
    assert Dimension([0] * N_BASE).is_dimensionless()


def test_too_many_base_exponents():
    with pytest.raises(ValueError):
        Dimension([0] * (N_BASE + 1))


def test_non_integer_power_rejected():
    with pytest.raises(TypeError):
        Dimension.of(length=1) ** 0.5


def test_format_ascii_and_unicode():
    d = Dimension.of(length=3, mass=-1, time=-2)
    assert format_dimension(d) == "m^3 * kg^-1 * s^-2"
    assert format_dimension(d, unicode=True) == "m³·kg⁻¹·s⁻²"
    assert format_dimension(Dimension()) == "1"
    assert format_dimension(DEFAULT_UNITS.lookup("newtons").dimension, DEFAULT_UNITS) == "newtons"


def test_unit_spec_round_trip():
    dim, scale, display = parse_unit_spec("length:1 scale=1.5e11 display")
    assert dim == Dimension.of(length=1) and scale == 1.5e11 and display
    with pytest.raises(ValueError):
        parse_unit_spec("furlongs:1")


def test_unit_table_rescalings_and_prefer():
    m = Dimension.of(length=1)
    assert {a.name for a in DEFAULT_UNITS.rescalings(m)} == {"km", "AU"}
    t = DEFAULT_UNITS.prefer(["meters"])
    assert t.display_name(m) == "meters"
    assert DEFAULT_UNITS.display_name(m) == "m"
    t2 = DEFAULT_UNITS.copy()
    t2.define("furlong", "length:1 scale=201.168")
    assert "furlong" in t2 and "furlong" not in DEFAULT_UNITS


def test_unify_solves_force_constant():
    s = DimVarSupply()
    g = s.fresh("g")
    kg, m = Dimension.of(mass=1), Dimension.of(length=1)
    newtons = DEFAULT_UNITS.lookup("newtons").dimension
    sub = dim_unify([DimEquation(Dimension.var(g) * kg * kg / (m * m), newtons)], s)
    assert sub.apply(Dimension.var(g)) == Dimension.of(length=3, mass=-1, time=-2)


def test_unify_divisibility_failure_names_residual():
    s = DimVarSupply()
    x = s.fresh("x")
    eq = DimEquation(Dimension.var(x, 2), Dimension.of(length=1), origin="here")
    with pytest.raises(Inconsistent) as info:
        dim_unify([eq], s)
    assert info.value.equation is eq
    assert "left over" in str(info.value)


def test_unify_reports_related_origins():
    s = DimVarSupply()
    x = s.fresh("x")
    eqs = [
        DimEquation(Dimension.var(x), Dimension.of(length=1), origin="first"),
        DimEquation(Dimension.var(x), Dimension.of(time=1), origin="second"),
    ]
    with pytest.raises(Inconsistent) as info:
        dim_unify(eqs, s)
    assert info.value.equation.origin == "second"
    assert info.value.related == ("first",)
    assert info.value.residual == Dimension.of(length=1, time=-1)


def test_unify_introduces_parameter_for_non_dividing_exponents():
    s = DimVarSupply()
    x, y = s.fresh("x"), s.fresh("y")
    sub = dim_unify([DimEquation(Dimension.var(x, 2) * Dimension.var(y, 3), Dimension())], s)
    ex, ey = sub.apply(Dimension.var(x)), sub.apply(Dimension.var(y))
    assert (ex ** 2 * ey ** 3).is_dimensionless()
    # one free parameter generates the whole lattice of solutions (3k, -2k)
    (z,) = ex.free_vars() | ey.free_vars()
    assert (ex.exponent_of(z), ey.exponent_of(z)) in {(3, -2), (-3, 2)}


@pytest.mark.parametrize("seed", range(40))
def test_unify_against_enumeration(seed):
    rng = random.Random(seed)
    supply = DimVarSupply()
    xs, eqs = random_system(rng, supply)
    assert check_system(xs, eqs, supply, rng) == []


def test_mem_unify_resolves_classes():
    a, b, c = MemVar(0), MemVar(1), MemVar(2)
    sol = mem_unify([MemEquation(a, b), MemEquation(b, ARENA), (c, c)])
    assert sol[a] == ARENA and sol[b] == ARENA
    assert sol[c] == c


def test_mem_unify_conflict():
    a = MemVar(0)
    with pytest.raises(Inconsistent):
        mem_unify([(a, STACK), (a, ARENA)])
    with pytest.raises(Inconsistent):
        mem_unify([(STACK, ARENA)])
