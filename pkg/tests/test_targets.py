from __future__ import annotations

from fractions import Fraction

import pytest

from cleflite.dims import Dimension
from cleflite.repr import BPosit, Fixed, Ieee, Posit, ValueRange
from cleflite.targets import (
    ConfigError,
    MissingLink,
    annotate_transfers,
    conversion_error,
    embeds,
    find_link,
    parse_config,
    preserved_count,
    select_format,
    serialize,
    transfer_fidelity,
)
from cleflite.psg import EdgeKind
from cleflite.syntax import parse

from conftest import FIXTURES, fixture_text
from helpers import config, graph_of
from oracles import brute_fidelity, format_values


def test_bundled_targets():
    cfg = config()
    assert cfg.names == ["x86_64", "xilinx", "riscv_xposit", "loihi2"]
    x86, fpga = cfg["x86_64"], cfg["xilinx"]
    assert x86.preferred == Ieee(64) and fpga.preferred == Posit(32)
    assert x86.has_quire and not x86.quire_in_hardware
    assert fpga.quire_in_hardware and fpga.quire_region.tag == "fabric"
    assert not cfg["loihi2"].has_quire
    assert cfg["loihi2"].region("heap").tag == "heap"
    with pytest.raises(KeyError):
        cfg["gpu"]


def test_fixture_config_matches_bundled():
    assert parse_config((FIXTURES / "reference.targets").read_text()).bindings == config().bindings


def test_serialize_round_trip():
    cfg = config()
    text = serialize(cfg.bindings, cfg.units)
    again = parse_config(text)
    assert again.bindings == cfg.bindings
    assert serialize(again.bindings, again.units) == text


def test_units_section_extends_table():
    cfg = parse_config(
        "[units]\nparsec = length:1 scale=3.0857e16\n\n[target t]\nformats = float64\nregions = stack:s, arena:a\n"
    )
    assert cfg.units.lookup("parsec").dimension == Dimension.of(length=1)
    assert "parsec = " in serialize(cfg.bindings, cfg.units)


@pytest.mark.parametrize(
    "text, line, field",
    [
        ("[target t]\nformats = posit7es9\nregions = stack:s, arena:a\n", 2, "formats"),
        ("[target t]\nformats = float64\nregions = stack\n", 3, "regions"),
        ("[target t]\nformats = float64\nregions = stack:s, arena:a\ncache_line = -4\n", 4, "cache_line"),
        ("[target t]\nformats = float64\nregions = stack:s, arena:a\ncolour = red\n", 4, "colour"),
        ("[target t]\nregions = stack:s, arena:a\n", 1, "formats"),
        ("[target t]\nformats = float64\nregions = stack:s\n", 1, "regions"),
        ("formats = float64\n", 1, "formats"),
        ("[target t]\nformats = float64\nformats = float32\n", 3, "formats"),
        ("[target t]\nthis is not a key\n", 2, None),
    ],
)
def test_config_errors_carry_line(text, line, field):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line and info.value.field == field
    assert str(info.value).startswith(f"line {line}: ")


def test_empty_and_duplicate_configs():
    with pytest.raises(ConfigError, match="no targets"):
        parse_config("# nothing\n")
    with pytest.raises(ConfigError, match="duplicate target"):
        parse_config("[target t]\nformats = float64\nregions = stack:s, arena:a\n[target t]\n")


def test_unknown_capability_warns():
    with pytest.warns(UserWarning, match="teleport"):
        parse_config("[target t]\ncapabilities = teleport\nformats = float64\nregions = stack:s, arena:a\n")


def test_links_are_symmetric():
    cfg = config()
    link = find_link(cfg["x86_64"], cfg["xilinx"])
    assert link.protocol == "BAREWire over PCIe"
    assert find_link(cfg["xilinx"], cfg["x86_64"]) is link
    with pytest.raises(MissingLink):
        find_link(cfg["xilinx"], cfg["loihi2"])


# -- fidelity ----------------------------------------------------------------------------

SMALL = [Posit(8), Posit(10), Posit(12), BPosit(12, 2, 3, 0), Fixed(8, 4), Fixed(10, 3, False), Ieee(16)]


@pytest.mark.parametrize("src", SMALL, ids=str)
@pytest.mark.parametrize("dst", SMALL, ids=str)
def test_preserved_count_matches_enumeration(src, dst):
    kept, total = preserved_count(src, dst)
    if src == dst:
        assert kept == total
    assert Fraction(kept, total) == brute_fidelity(src, dst)
    magnitudes = lambda f: {abs(v) for v in format_values(f) if v}
    assert embeds(src, dst) == (kept == total) == (magnitudes(src) <= magnitudes(dst))


def test_posit32_to_float64_is_lossless():
    r = transfer_fidelity(Posit(32), Ieee(64), "xilinx", "x86_64")
    assert r.lossless and r.fidelity == 1.0
    assert r.reason == "float64 range exceeds posit32 range"


def test_identity_transfer():
    r = transfer_fidelity(Ieee(32), Ieee(32))
    assert r.method == "identity" and r.reason == "identical formats"


def test_lossy_transfer_reports_worst_error():
    r = transfer_fidelity(Ieee(64), Posit(32))
    assert not r.lossless and r.saturates and 0 < r.fidelity < 1
    assert r.to_json()["worstError"] == r.worst_error
    # near 1 a posit32 carries 27 fraction bits, so float64 values round within 2^-28
    near_one = conversion_error(Ieee(64), Posit(32), ValueRange(1.0, 2.0))
    assert near_one <= Fraction(1, 2**28) and near_one > Fraction(1, 2**29)


def test_conversion_error_matches_enumeration():
    src, dst = Posit(12), Posit(8)
    want = max(abs(dst.round(v) - v) / v for v in format_values(src) if dst.range_lo <= v <= dst.range_hi and v > 0)
    assert conversion_error(src, dst) == want


# -- per-binding formats -----------------------------------------------------------------


def test_select_format_uses_declared_range():
    cfg = config()
    p = parse(fixture_text("gravity_targets.clef"))
    b = p.binding("computeForce")
    fmt, sel = select_format(b, cfg["x86_64"])
    assert fmt == Ieee(64) and sel is not None
    fmt, sel = select_format(b, cfg["xilinx"])
    assert fmt == Posit(32)
    fmt, sel = select_format(p.binding("hostForce"), cfg["xilinx"])
    assert (fmt, sel) == (Posit(32), None)


def test_select_format_falls_back_when_nothing_covers():
    p = parse("[<Range: 1e-11 .. 1e72>]\nlet d (x: float<m>) = x\n")
    fmt, sel = select_format(p.binding("d"), config()["xilinx"])
    assert fmt == Posit(32) and sel is None


def test_annotate_transfers_on_gravity_targets():
    g = annotate_transfers(graph_of(fixture_text("gravity_targets.clef")))
    reports = [e.report for e in g.edges if e.kind is EdgeKind.TRANSFER]
    assert reports
    for r in reports:
        assert (r.source, r.dest) == ("xilinx", "x86_64")
        assert r.lossless and r.protocol == "BAREWire over PCIe"
