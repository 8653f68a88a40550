"""Target bindings and cross-target transfer fidelity.

Binding files are line oriented::

    # comment
    [units]
    AU = length:1 scale=1.495978707e11

    [target xilinx]
    capabilities = posit-pipeline, quire-hw
    formats = posit32es2
    regions = stack:stack, arena:arena, quire:fabric
    cache_line = 64
    quire_cycles = 1
    link.x86_64 = BAREWire over PCIe
    link.x86_64.latency = 2 us

Lists are comma separated. `regions` maps a lifetime level (stack, arena,
heap, static) or `quire` to a memory space name.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .dims import DEFAULT_UNITS, MemorySpace, UnitTable, format_unit_spec, parse_unit_spec
from .repr.error import ValueRange, exact_error
from .repr.formats import (
    Fixed,
    FormatSyntaxError,
    NumericFormat,
    UnsupportedWidth,
    _PositBase,
    floor_log2,
    parse_format,
    pow2,
)

KNOWN_CAPABILITIES = frozenset(
    {
        "float16",
        "float32",
        "float64",
        "posit-pipeline",
        "posit-sw",
        "fixed-point",
        "quire-hw",
        "quire-sw",
        "spiking",
        "simd",
    }
)
LEVELS = ("stack", "arena", "heap", "static")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        where = f"line {line}: " if line else ""
        what = f"{field}: " if field else ""
        super().__init__(f"{where}{what}{message}")
        self.line = line
        self.field = field


class MissingLink(LookupError):
    pass


@dataclass(frozen=True)
class TransferLink:
    protocol: str
    note: str = ""
    latency: str = ""
    bandwidth: str = ""


@dataclass(frozen=True)
class TargetBinding:
    name: str
    capabilities: frozenset
    formats: tuple
    regions: dict = field(default_factory=dict, hash=False, compare=True)
    cache_line: int = 64
    quire_cycles: int | None = None
    links: dict = field(default_factory=dict, hash=False, compare=True)

    def __post_init__(self):
        if not self.formats:
            raise ConfigError("at least one format is required", field="formats")
        for level in ("stack", "arena"):
            if level not in self.regions:
                raise ConfigError(f"target {self.name} has no {level} region", field="regions")

    @property
    def has_quire(self) -> bool:
        return "quire-hw" in self.capabilities or "quire-sw" in self.capabilities

    @property
    def quire_in_hardware(self) -> bool:
        return "quire-hw" in self.capabilities

    def region(self, level: str) -> MemorySpace:
        """Memory space backing a lifetime level; unmapped levels keep their own name."""
        return self.regions.get(level, MemorySpace(level))

    @property
    def quire_region(self) -> MemorySpace:
        return self.regions.get("quire", self.region("stack"))

    @property
    def posit_width(self) -> int:
        """Posit width the quire would serve; the first posit format, else 32."""
        for f in self.formats:
            if isinstance(f, _PositBase):
                return f.n
        return 32

    @property
    def preferred(self) -> NumericFormat:
        return self.formats[0]

    def link_to(self, peer: str) -> TransferLink | None:
        return self.links.get(peer)


@dataclass(frozen=True)
class TargetConfig:
    bindings: tuple
    units: UnitTable

    def __getitem__(self, name: str) -> TargetBinding:
        for b in self.bindings:
            if b.name == name:
                return b
        raise KeyError(name)

    @property
    def names(self) -> list[str]:
        return [b.name for b in self.bindings]


def find_link(a: TargetBinding, b: TargetBinding) -> TransferLink:
    link = a.link_to(b.name) or b.link_to(a.name)
    if link is None:
        raise MissingLink(f"no transfer link between {a.name} and {b.name}")
    return link


# -- parsing ------------------------------------------------------------------------

_SECTION = re.compile(r"^\[\s*(units|target\s+(?P<name>[A-Za-z_][\w.-]*))\s*\]$")
_KEY = re.compile(r"^(?P<key>[A-Za-z_][\w.-]*)\s*=\s*(?P<value>.*)$")


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


def _build(name: str, fields: dict, line: int) -> TargetBinding:
    caps, formats, regions, links = frozenset(), (), {}, {}
    cache_line, cycles = 64, None
    link_fields: dict[str, dict] = {}
    for key, (value, ln) in fields.items():
        if key == "capabilities":
            caps = frozenset(_split(value))
            for c in sorted(caps - KNOWN_CAPABILITIES):
                warnings.warn(f"target {name}: unknown capability {c!r}", stacklevel=3)
        elif key == "formats":
            try:
                formats = tuple(parse_format(v) for v in _split(value))
            except (FormatSyntaxError, UnsupportedWidth, ValueError) as e:
                raise ConfigError(str(e), ln, key) from None
        elif key == "regions":
            for item in _split(value):
                level, _, space = item.partition(":")
                if not space:
                    raise ConfigError(f"expected level:space, got {item!r}", ln, key)
                regions[level.strip()] = MemorySpace(space.strip())
        elif key in ("cache_line", "quire_cycles"):
            try:
                n = int(value)
            except ValueError:
                raise ConfigError(f"expected an integer, got {value!r}", ln, key) from None
            if n <= 0:
                raise ConfigError("must be positive", ln, key)
            if key == "cache_line":
                cache_line = n
            else:
                cycles = n
        elif key.startswith("link."):
            peer, _, attr = key[len("link."):].partition(".")
            if attr not in ("", "note", "latency", "bandwidth"):
                raise ConfigError(f"unknown link attribute {attr!r}", ln, key)
            link_fields.setdefault(peer, {})[attr or "protocol"] = value
        else:
            raise ConfigError("unknown key", ln, key)
    for peer, lf in link_fields.items():
        if "protocol" not in lf:
            raise ConfigError(f"link to {peer} has no protocol", line, f"link.{peer}")
        links[peer] = TransferLink(lf["protocol"], lf.get("note", ""), lf.get("latency", ""), lf.get("bandwidth", ""))
    if not formats:
        raise ConfigError(f"target {name} lists no formats", line, "formats")
    for level in ("stack", "arena"):
        if level not in regions:
            raise ConfigError(f"target {name} has no {level} region", line, "regions")
    return TargetBinding(name, caps, formats, regions, cache_line, cycles, links)


def parse_config(text: str) -> TargetConfig:
    units = DEFAULT_UNITS.copy()
    bindings: list[TargetBinding] = []
    section: str | None = None
    target: tuple[str, dict, int] | None = None

    def flush():
        if target is not None:
            bindings.append(_build(*target))

    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            flush()
            target = None
            if m["name"]:
                if any(b.name == m["name"] for b in bindings):
                    raise ConfigError(f"duplicate target {m['name']}", ln)
                target = (m["name"], {}, ln)
                section = "target"
            else:
                section = "units"
            continue
        m = _KEY.match(line)
        if not m:
            raise ConfigError(f"cannot parse {raw.strip()!r}", ln)
        key, value = m["key"], m["value"].strip()
        if section is None:
            raise ConfigError("entry outside any section", ln, key)
        if section == "units":
            try:
                dim, scale, display = parse_unit_spec(value)
            except ValueError as e:
                raise ConfigError(str(e), ln, key) from None
            units.define(key, dim, scale, display)
        else:
            if key in target[1]:
                raise ConfigError("duplicate key", ln, key)
            target[1][key] = (value, ln)
    flush()
    if not bindings:
        raise ConfigError("no targets defined")
    return TargetConfig(tuple(bindings), units)


def load_config(path) -> TargetConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}") from None
    return parse_config(text)


def load_bindings(path) -> list[TargetBinding]:
    return list(load_config(path).bindings)


def serialize(bindings, units: UnitTable | None = None) -> str:
    out = []
    if units is not None:
        builtin = {a.name: a for a in DEFAULT_UNITS}
        extra = [a for a in units if builtin.get(a.name) != a]
        if extra:
            out.append("[units]")
            out += [f"{a.name} = {format_unit_spec(a)}" for a in extra]
            out.append("")
    for b in bindings:
        out.append(f"[target {b.name}]")
        if b.capabilities:
            out.append("capabilities = " + ", ".join(sorted(b.capabilities)))
        out.append("formats = " + ", ".join(f.spec for f in b.formats))
        out.append("regions = " + ", ".join(f"{k}:{v}" for k, v in b.regions.items()))
        out.append(f"cache_line = {b.cache_line}")
        if b.quire_cycles is not None:
            out.append(f"quire_cycles = {b.quire_cycles}")
        for peer, link in b.links.items():
            out.append(f"link.{peer} = {link.protocol}")
            for attr in ("note", "latency", "bandwidth"):
                if getattr(link, attr):
                    out.append(f"link.{peer}.{attr} = {getattr(link, attr)}")
        out.append("")
    return "\n".join(out)


def bundled_config_path() -> Path:
    return Path(__file__).parent / "data" / "reference.targets"


# -- transfer fidelity ------------------------------------------------------------------


@dataclass(frozen=True)
class TransferReport:
    source: str
    dest: str
    src_format: NumericFormat
    dst_format: NumericFormat
    fidelity: float
    lossless: bool
    protocol: str = ""
    method: str = "parametric"
    counted: int = 0
    worst_error: float = 0.0
    saturates: bool = False
    link: TransferLink | None = None

    @property
    def reason(self) -> str:
        if self.lossless:
            if self.src_format == self.dst_format:
                return "identical formats"
            return f"{self.dst_format.short_name} range exceeds {self.src_format.short_name} range"
        parts = [f"{self.fidelity:.3g} of {self.src_format.short_name} values exact, worst conversion error {self.worst_error:.3g}"]
        if self.saturates:
            parts.append(f"{self.dst_format.short_name} range narrower than {self.src_format.short_name}")
        return "; ".join(parts)

    def to_json(self) -> dict:
        out = {
            "from": self.source,
            "to": self.dest,
            "srcFormat": self.src_format.spec,
            "dstFormat": self.dst_format.spec,
            "fidelity": self.fidelity,
            "lossless": self.lossless,
            "protocol": self.protocol,
            "method": self.method,
        }
        if not self.lossless:
            out.update(counted=self.counted, worstError=self.worst_error, saturates=self.saturates)
        if self.link is not None:
            out.update(latency=self.link.latency, bandwidth=self.link.bandwidth)
        return out


def _extreme_scales(f: NumericFormat) -> tuple[int, int]:
    lo = floor_log2(f.minpos)
    hi = floor_log2(f.maxpos)
    if isinstance(f, Fixed) and f.signed:
        hi = max(hi, floor_log2(-f.decode(1 << (f.n - 1))))
    return lo, hi


def embeds(src: NumericFormat, dst: NumericFormat) -> bool:
    """Every finite src value is exactly a dst value, judged binade by binade.

    In each binade 2^s a format holds the values 2^s(1 + j 2^-F) for its
    fraction width F (F = None where it holds nothing). src embeds in dst when
    dst carries at least as many fraction bits as src in every binade src uses.
    """
    if src == dst:
        return True
    lo, hi = _extreme_scales(src)
    for s in range(lo, hi + 1):
        fs = src.frac_bits_at(s)
        if fs is None:
            continue
        fd = dst.frac_bits_at(s)
        if fd is None or fd < fs or (_hole(dst, s) and not _hole(src, s)):
            return False
    if _signed(src) and not _signed(dst):
        return False
    return True


def preserved_count(src: NumericFormat, dst: NumericFormat) -> tuple[int, int]:
    """(kept, total) over the non-zero finite values of src, counted binade by binade.

    Magnitudes are treated sign-symmetrically; a signed fixed-point format's
    extra most-negative value is left out.

    Binade 2^s of src holds 2^F values; those that dst keeps exactly are the
    ones whose lowest F - F' fraction bits are zero, 2^min(F, F') of them.
    """
    lo, hi = _extreme_scales(src)
    kept = total = 0
    for s in range(lo, hi + 1):
        fs = src.frac_bits_at(s)
        if fs is None:
            continue
        src_hole = _hole(src, s)
        total += (1 << fs) - src_hole
        fd = dst.frac_bits_at(s)
        if fd is not None:
            kept += (1 << min(fs, fd)) - (src_hole or _hole(dst, s))
    if _signed(src):
        return kept * (2 if _signed(dst) else 1), total * 2
    return kept, total


def _signed(f: NumericFormat) -> bool:
    return not (isinstance(f, Fixed) and not f.signed)


def _hole(f: NumericFormat, s: int) -> bool:
    """A b-posit's lowest binade lacks its first value, which is the zero pattern."""
    return f.frac_bits_at(s) is not None and floor_log2(f.minpos) == s and f.minpos != pow2(s)


def conversion_error(src: NumericFormat, dst: NumericFormat, r: ValueRange | None = None) -> Fraction:
    """Worst relative error converting src values that lie inside dst's range.

    The worst src value sits next to a dst tie point, and the widest relative
    dst gap in each binade is its first one, so each binade is probed at the
    src values on either side of that tie.
    """
    lo = max(src.minpos, dst.range_lo)
    hi = min(src.maxpos, dst.range_hi)
    if r is not None:
        lo, hi = max(lo, r.exact_lo), min(hi, r.exact_hi)
    worst = Fraction(0)
    if lo > hi:
        return worst
    for s in range(floor_log2(lo), floor_log2(hi) + 1):
        p = dst.encode(max(lo, pow2(s)))
        if p >= dst.last_positive:
            continue
        t = dst.tie(p)
        q = src.encode(t)
        for v in (src.decode(q - 1), src.decode(q), src.decode(q + 1)):
            if v is None or isinstance(v, float) or not lo <= v <= hi:
                continue
            worst = max(worst, abs(dst.round(v) - v) / v)
    return worst


def transfer_fidelity(
    src: NumericFormat,
    dst: NumericFormat,
    source: str = "",
    dest: str = "",
    link: TransferLink | None = None,
    r: ValueRange | None = None,
) -> TransferReport:
    """Fidelity is the share of src's non-zero finite values that dst holds exactly."""
    protocol = link.protocol if link else ""
    if src == dst:
        return TransferReport(source, dest, src, dst, 1.0, True, protocol, "identity", link=link)
    kept, total = preserved_count(src, dst)
    lossless = kept == total
    assert lossless == embeds(src, dst)
    if not lossless:
        worst = float(conversion_error(src, dst, r))
        saturates = src.maxpos > dst.maxpos or src.minpos < dst.minpos
        return TransferReport(
            source, dest, src, dst, kept / total, False, protocol, "counted", total, worst, saturates, link
        )
    return TransferReport(source, dest, src, dst, 1.0, True, protocol, "counted", link=link)


def transfer_error_bound(src: NumericFormat, dst: NumericFormat, r: ValueRange) -> float:
    """Worst relative error converting values in r when src is finer than dst."""
    return float(exact_error(dst, r))


# -- per-binding format choice and transfer annotation ----------------------------------


def binding_range(binding) -> ValueRange | None:
    """The declared [<Range: lo .. hi>] of a binding, if any."""
    from .syntax.ast import RangeAttr

    a = binding.attr(RangeAttr) if binding is not None else None
    return ValueRange(a.lo, a.hi) if a is not None else None


def select_format(binding, target: TargetBinding):
    """Format a binding uses on a target, with the selection when a range is declared.

    Without a range the target's preferred format stands. When no preferred
    format covers the declared range the preferred one is kept and the
    selection is None; the range warnings then explain why.
    """
    from .repr.select import NoViableCandidate, select_representation

    r = binding_range(binding)
    if r is None:
        return target.preferred, None
    try:
        sel = select_representation(r, list(target.formats), subject=getattr(binding, "name", None))
    except NoViableCandidate:
        return target.preferred, None
    return sel.format, sel


def annotate_transfers(g, bindings=None):
    """Attach a TransferReport to every Transfer edge of a saturated graph."""
    from .psg import EdgeKind

    by_name = dict(g.bindings_config)
    for b in bindings or ():
        by_name[b.name] = b
    for e in g.edges:
        if e.kind is not EdgeKind.TRANSFER:
            continue
        s, d = e.transfer
        a, b = by_name[s], by_name[d]
        link = find_link(a, b)
        src_fmt, _ = select_format(g.bindings.get(g.nodes[e.src].binding), a)
        dst_fmt, _ = select_format(g.bindings.get(g.nodes[e.dst].binding), b)
        r = binding_range(g.bindings.get(g.nodes[e.src].binding))
        e.report = transfer_fidelity(src_fmt, dst_fmt, s, d, link, r)
    return g


__all__ = [
    "annotate_transfers",
    "binding_range",
    "select_format",
    "ConfigError",
    "KNOWN_CAPABILITIES",
    "MissingLink",
    "TargetBinding",
    "TargetConfig",
    "TransferLink",
    "TransferReport",
    "bundled_config_path",
    "embeds",
    "find_link",
    "load_bindings",
    "load_config",
    "parse_config",
    "conversion_error",
    "preserved_count",
    "serialize",
    "transfer_fidelity",
]
