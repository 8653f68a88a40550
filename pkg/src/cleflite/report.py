"""Whole-program analysis and the design-time displays built from it.

`analyze` runs parse, inference, graph elaboration and saturation, escape
promotion and transfer annotation, then gathers what the displays need into
a `DiagnosticsReport`. Rendering only reads that report and the saturated
graph; the graph is put in passive mode while text is produced.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from . import escape as E
from . import types as T
from .diagnostics import Diagnostic
from .infer import InferenceError, TypedProgram, infer_program
from .psg import EdgeKind, Psg, active_subgraph, elaborate, saturate
from .repr.error import ErrorProfile, ValueRange, worst_case_rel_error
from .repr.formats import Ieee, NumericFormat, _PositBase
from .repr.quire import quire_spec
from .repr.select import (
    NoViableCandidate,
    covers,
    fmt_range,
    nominal_range,
    precision_ratio,
    select_representation,
    sweet_spot,
)
from .syntax import ast as A
from .syntax.lexer import ParseError
from .syntax.parser import parse
from .syntax.pretty import pretty_expr
from .targets import MissingLink, TargetBinding, TargetConfig, TransferReport, annotate_transfers

REPORT_VERSION = 1
SHOW_CHOICES = ("escapes", "repr", "transfers", "all")


class ConfigProblem(Exception):
    """The program is fine but the configuration cannot serve it (exit code 2)."""


# -- small renderers ---------------------------------------------------------------------


def sci(x: float, digits: int = 2) -> str:
    """Compact scientific notation: 1.11e-16, 3.9e-3."""
    if x == 0:
        return "0"
    mant, exp = f"{x:.{digits - 1}e}".split("e")
    return f"{mant}e{int(exp)}"


def plain(x: float) -> str:
    return f"{x:g}"


def cache_lines_text(nbytes: int, line_bytes: int, level: str = "") -> str:
    """How many cache lines a contiguous object spans: "1 cache line", "12.5 L1 cache lines"."""
    n = nbytes / line_bytes
    lvl = f"{level} " if level else ""
    return f"{n:g} {lvl}cache line{'' if n == 1 else 's'}"


def signature_for(t, fmt: NumericFormat, units=None) -> str:
    """The binding's type with every float replaced by the chosen format."""
    name = fmt.short_name

    def sub(x):
        x = T.strip_ref(x) if isinstance(x, T.RefT) else x
        if isinstance(x, T.FloatT):
            return T.NamedT(name)
        if isinstance(x, T.SpanT):
            return T.SpanT(sub(x.elem), x.mem)
        if isinstance(x, T.TupleT):
            return T.TupleT(tuple(sub(i) for i in x.items))
        if isinstance(x, T.ArrowT):
            return T.ArrowT(sub(x.arg), sub(x.result))
        return x

    return T.format_type(sub(t), units)


def result_type(t):
    _, res = T.uncurry(t)
    return res


# -- report records ----------------------------------------------------------------------


@dataclass
class QuireLine:
    target: str
    available: bool
    text: str
    region: str = ""
    bits: int = 0
    bytes: int = 0
    cache_lines: int = 0
    cycles: int | None = None
    hardware: bool = False

    def to_json(self) -> dict:
        out = {"target": self.target, "available": self.available, "text": self.text}
        if self.available:
            out.update(
                region=self.region, bits=self.bits, bytes=self.bytes, cacheLines=self.cache_lines,
                cyclesPerFma=self.cycles, hardware=self.hardware,
            )
        return out


@dataclass
class TargetResolution:
    target: str
    format: NumericFormat
    signature: str
    profile: ErrorProfile | None
    covers: bool | None
    quire: QuireLine
    quire_used: bool
    sweet: tuple | None = None  # (SweetSpot, error)
    allocations: list = field(default_factory=list)  # (name, AllocationDecision)

    def precision_text(self) -> str:
        p = self.profile
        if p is None:
            return "n/a"
        if isinstance(self.format, Ieee):
            return f"{sci(p.summary, 3)} relative error (uniform)"
        if isinstance(self.format, _PositBase) and self.sweet is not None:
            spot, err = self.sweet
            lo, hi = 10.0**spot.lo_decade, 10.0**spot.hi_decade
            return f"~{sci(err)} in [{plain(lo)}, {plain(hi)}], ~{sci(p.summary)} at regime extremes"
        mark = "~" if p.approximate else ""
        return f"{mark}{sci(p.summary, 3)} relative error (worst case)"

    def quire_text(self) -> str:
        if self.quire_used:
            return self.quire.text
        if not self.quire.available:
            return self.quire.text
        if self.quire.hardware:
            return f"available, {self.quire.text.split(',')[0]}"
        return "not used (no accumulation loop detected)"

    def to_json(self) -> dict:
        p = self.profile
        prof = None
        if p is not None:
            prof = {
                "summary": p.summary,
                "method": p.method,
                "approximate": p.approximate,
                "range": [p.range.lo, p.range.hi],
                "text": self.precision_text(),
            }
            if self.sweet is not None:
                spot, err = self.sweet
                prof["sweetSpot"] = {"range": [10.0**spot.lo_decade, 10.0**spot.hi_decade], "error": err}
        return {
            "target": self.target,
            "format": self.format.spec,
            "formatName": self.format.long_name,
            "signature": self.signature,
            "errorProfile": prof,
            "dynamicRange": nominal_range(self.format),
            "covers": self.covers,
            "quire": {**self.quire.to_json(), "used": self.quire_used, "summary": self.quire_text()},
            "allocation": [
                {"name": n, "strategy": a.strategy, "level": a.level, "region": str(a.region)} for n, a in self.allocations
            ],
        }


@dataclass
class BindingReport:
    name: str
    span: A.Loc
    scheme: str
    type: object
    range: ValueRange | None
    dimension_text: str
    per_target: list
    transfers: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "span": [self.span.line, self.span.col],
            "scheme": self.scheme,
            "range": [self.range.lo, self.range.hi] if self.range else None,
            "perTarget": [t.to_json() for t in self.per_target],
            "transfers": [tr.to_json() for tr in self.transfers],
        }


@dataclass
class QuireReport:
    name: str
    binding: str
    span: A.Loc
    dimension: str
    lines: list
    lifetime: str
    escape: E.EscapeRecord

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "binding": self.binding,
            "span": [self.span.line, self.span.col],
            "dimension": self.dimension,
            "perTarget": [q.to_json() for q in self.lines],
            "lifetime": self.lifetime,
            "escape": self.escape.to_json(),
        }


@dataclass
class EscapeReport:
    binding: str
    name: str
    span: A.Loc
    creator: str
    record: E.EscapeRecord
    path: list
    tentative: str
    required: str
    suggestions: list
    allocations: dict

    def to_json(self) -> dict:
        return {
            "binding": self.binding,
            "name": self.name,
            "span": [self.span.line, self.span.col],
            "createdBy": self.creator,
            **self.record.to_json(),
            "path": self.path,
            "tentative": self.tentative,
            "required": self.required,
            "allocation": {t: {"strategy": a.strategy, "region": str(a.region)} for t, a in self.allocations.items()},
            "suggestions": [s.to_json() for s in self.suggestions],
        }


@dataclass
class DiagnosticsReport:
    file: str
    targets: list
    bindings: list = field(default_factory=list)
    quires: list = field(default_factory=list)
    escapes: list = field(default_factory=list)
    transfers: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)
    selections: list = field(default_factory=list)
    graph: Psg | None = None
    typed: TypedProgram | None = None

    @property
    def errors(self) -> list[Diagnostic]:
        return [d for d in self.diagnostics if d.severity == "error"]

    def binding(self, name: str) -> BindingReport:
        return next(b for b in self.bindings if b.name == name)

    def to_json(self) -> dict:
        return {
            "reportVersion": REPORT_VERSION,
            "file": self.file,
            "targets": list(self.targets),
            "bindings": [b.to_json() for b in self.bindings],
            "selections": [s.to_json() for s in self.selections],
            "quires": [q.to_json() for q in self.quires],
            "escapes": [e.to_json() for e in self.escapes],
            "transfers": [t.to_json() for t in self.transfers],
            "diagnostics": [d.to_json() for d in self.diagnostics],
        }

    def to_text_json(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=False) + "\n"


# -- analysis ----------------------------------------------------------------------------


def _inference_diagnostic(e: InferenceError) -> Diagnostic:
    notes = []
    for r in e.related:
        span = r if isinstance(r, A.Loc) else getattr(r, "span", None)
        what = getattr(r, "what", "")
        if span is not None:
            notes.append(f"origin: {span.line}:{span.col}" + (f" ({what})" if what else ""))
    return Diagnostic("error", type(e).__name__, e.message, e.span, tuple(notes))


def quire_line(tb: TargetBinding, lifetime_region: str | None = None) -> QuireLine:
    if not tb.has_quire:
        return QuireLine(tb.name, False, "not available (no exact accumulation support)")
    spec = quire_spec(tb.posit_width)
    cycles = tb.quire_cycles
    if tb.quire_in_hardware:
        region = str(tb.quire_region)
        where = f"{spec.bits}-bit fabric pipeline" if region == "fabric" else f"{spec.bits}-bit {region}"
        cost = f", {cycles} cycle{'' if cycles == 1 else 's'}/fma" if cycles is not None else ""
        return QuireLine(tb.name, True, where + cost, region, spec.bits, spec.bytes,
                         spec.cache_lines(tb.cache_line), cycles, True)
    region = lifetime_region or str(tb.quire_region)
    text = f"{region}, {spec.bytes} bytes, {cache_lines_text(spec.bytes, tb.cache_line)}"
    if cycles is not None:
        text += f", ~{cycles} cycles/fma"
    return QuireLine(tb.name, True, text, region, spec.bits, spec.bytes, spec.cache_lines(tb.cache_line), cycles, False)


def _profile(fmt: NumericFormat, r: ValueRange | None) -> ErrorProfile | None:
    rr = r if r is not None else ValueRange(float(fmt.range_lo), float(fmt.range_hi))
    try:
        return worst_case_rel_error(fmt, rr)
    except ValueError:
        return None


def _sweet(fmt: NumericFormat):
    if not isinstance(fmt, _PositBase):
        return None
    spot = sweet_spot(fmt)
    return spot, worst_case_rel_error(fmt, spot.range).summary


def _subject(b: A.Binding, t, units) -> str:
    d = T.type_dimension(result_type(t))
    if d is None or d.is_dimensionless():
        return b.name
    return f"{b.name}<{T.format_dim(d, units)}>"


def _select(b: A.Binding, t, tb: TargetBinding, r: ValueRange | None, units, diags: list):
    if r is None:
        return tb.preferred, None
    d = T.type_dimension(result_type(t))
    try:
        sel = select_representation(r, list(tb.formats), _subject(b, t, units), d, units)
        return sel.format, True
    except NoViableCandidate as exc:
        for w in exc.diagnostics:
            if w not in diags:
                diags.append(w)
        return tb.preferred, False


def _requested_targets(g: Psg, name: str) -> list[str]:
    root = g.nodes[g.roots[name]]
    explicit = getattr(root, "explicit_targets", frozenset())
    b = g.bindings[name]
    attr = b.attr(A.TargetAttr)
    if attr is None:
        return list(g.targets)
    return [t for t in g.targets if t in explicit]


def _uses_quire(g: Psg, name: str) -> bool:
    return "quire" in g.nodes[g.roots[name]].coeffects.capabilities


def _scope_text(g: Psg, life) -> str:
    if life.level == 3:
        return "static"
    s = g.scopes[life.scope]
    if s.kind == "caller":
        where = "caller's scope"
    elif s.kind == "function":
        where = f"lexical scope of {s.owner}"
    elif s.kind == "lambda":
        where = f"closure frame in {s.owner}"
    else:
        where = f"arena block in {s.owner}"
    return f"{life.level_name} ({where})"


def _creator(n) -> str:
    e = n.expr
    if isinstance(e, A.Apply):
        h = e
        while isinstance(h, A.Apply):
            h = h.fn
        return h.name if isinstance(h, A.Var) else "call"
    if isinstance(e, A.Lambda):
        return "closure"
    if isinstance(e, A.Var):
        return e.name
    return n.label


def _path(g: Psg, rec: E.EscapeRecord, start) -> list[str]:
    out = [E.site_name(g, start)]
    for eid in rec.chain:
        e = g.edge(eid)
        d = g.nodes[e.dst]
        if d.kind == "Binding":
            label = f"return of {d.label}"
        elif d.kind == "Lambda":
            label = "closure" if e.kind is EdgeKind.CAPTURE else "closure result"
        elif d.kind == "Tuple":
            label = pretty_expr(d.expr)
        elif d.kind in ("Let", "Var", "Param"):
            label = d.label
        elif d.kind == "Apply":
            label = f"call to {_creator(d)}"
        else:
            continue
        if e.kind is EdgeKind.BYREF:
            label = f"write to {d.label}"
        if label != out[-1]:
            out.append(label)
    return out


def _loop_lines(b: A.Binding, let: A.Let, typed: TypedProgram):
    """Source lines from the quire's binding to the end of the loop that updates it."""
    for x in A.walk(let.body):
        if isinstance(x, A.ForRange):
            for y in A.walk(x.body):
                if isinstance(y, A.Var) and typed.binder_of(y) is let:
                    return let.span.line, x.span.end_line
    return None


def _quire_reports(g: Psg, typed: TypedProgram, config: dict, name: str) -> list[QuireReport]:
    out = []
    b = g.bindings[name]
    for n in g.binding_nodes(name):
        if n.kind != "Let" or not isinstance(T.strip_ref(n.type), T.QuireT):
            continue
        rec = n.escape or E.STACK_SCOPED
        lines = []
        for t in _requested_targets(g, name):
            tb = config[t]
            region = str(E.allocation_strategy(rec, tb).region)
            lines.append(quire_line(tb, region))
        loop = _loop_lines(b, n.expr, typed)
        if rec.kind is E.EscapeKind.STACK_SCOPED:
            where = f"loop scope (lines {loop[0]}-{loop[1]})" if loop else f"lexical scope of {name}"
            life = f"{where}, no escape detected"
        else:
            life = f"{rec.kind_name}, promoted to {_scope_text(g, rec.promoted_to)}"
        dim = T.format_dim(T.type_dimension(n.type), typed.display_units)
        out.append(QuireReport(n.label, name, n.span, dim, lines, life, rec))
    return out


def _escape_reports(g: Psg, config: dict, names: set) -> list[EscapeReport]:
    out = []
    for n, rec in E.escapes(g):
        if n.binding not in names:
            continue
        allocs = {t: E.allocation_strategy(rec, config[t]) for t in g.target_names(n.reachability) if t in config}
        out.append(
            EscapeReport(
                n.binding,
                E.site_name(g, n),
                n.span,
                _creator(n),
                rec,
                _path(g, rec, n),
                _scope_text(g, rec.promoted_from),
                _scope_text(g, rec.promoted_to),
                E.suggest_restructurings(g, n),
                allocs,
            )
        )
    return out


STRATEGY_TEXT = {
    "stack": "lexical scope",
    "arena-closure": "closure environment",
    "arena-caller": "caller's scope",
    "arena-origin": "reference origin scope",
}


def _allocations(g: Psg, name: str, tb: TargetBinding) -> list:
    """Allocation sites other than closures and quires; quires get their own line."""
    out = []
    for n in E.allocation_sites(g):
        if n.binding != name or n.kind == "Lambda" or isinstance(T.strip_ref(n.type), T.QuireT):
            continue
        rec = n.escape or E.STACK_SCOPED
        out.append((E.site_name(g, n), E.allocation_strategy(rec, tb)))
    return out


@dataclass
class SelectionListing:
    """The per-value representation choice with a precision note."""

    name: str
    type_text: str
    range: ValueRange
    provenance: str
    rows: list  # (target, format, profile, near_one)
    note: tuple | None  # (ratio, spot, share)

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "type": self.type_text,
            "range": [self.range.lo, self.range.hi],
            "provenance": self.provenance,
            "perTarget": [
                {"target": t, "format": f.spec, "formatName": f.long_name, "worstCase": p.summary, "nearOne": one}
                for t, f, p, one in self.rows
            ],
        }
        if self.note is not None:
            ratio, spot, share = self.note
            out["note"] = {"ratio": ratio, "versus": "float32", "subrange": [10.0**spot.lo_decade, 10.0**spot.hi_decade], "share": share}
        return out


def _selection_listing(b: A.Binding, t, r: ValueRange, per_target: list, units) -> SelectionListing:
    rows = []
    note = None
    for tr in per_target:
        if tr.profile is None:
            continue
        one = None
        if isinstance(tr.format, _PositBase):
            try:
                one = tr.profile.at_decade(0)
            except KeyError:
                one = worst_case_rel_error(tr.format, ValueRange(1.0, 1.0)).summary
        rows.append((tr.target, tr.format, tr.profile, one))
        if note is None and isinstance(tr.format, _PositBase):
            spot = sweet_spot(tr.format)
            note = (precision_ratio(tr.format, Ieee(32), spot), spot, spot.share_of(r))
    return SelectionListing(
        b.name, T.format_type(result_type(t), units), r, "from [<Range>] annotation", rows, note
    )


def analyze(
    source: str,
    config: TargetConfig,
    filename: str = "<input>",
    target: str | None = None,
) -> DiagnosticsReport:
    """Run the pipeline. Raises ConfigProblem for configuration failures."""
    names = list(config.names)
    if target is not None and target not in names:
        raise ConfigProblem(f"unknown target {target!r}; configured: {', '.join(names)}")
    rep = DiagnosticsReport(filename, [target] if target else names)
    try:
        program = parse(source)
    except ParseError as e:
        rep.diagnostics.append(Diagnostic("error", "ParseError", e.message, e.loc))
        return rep
    try:
        typed = infer_program(program, config.units)
    except InferenceError as e:
        rep.diagnostics.append(_inference_diagnostic(e))
        return rep
    rep.typed = typed
    g = elaborate(typed, list(config.bindings))
    saturate(g, strict=False)
    try:
        annotate_transfers(g)
    except MissingLink as e:
        raise ConfigProblem(str(e)) from None
    rep.graph = g
    rep.diagnostics.extend(g.diagnostics)
    cfg = {b.name: b for b in config.bindings}
    units = typed.display_units
    visible = set(g.roots)
    if target is not None:
        view = active_subgraph(g, target)
        visible = {n for n, rid in g.roots.items() if rid in view}
    with g.passive_mode():
        for d in typed.program.decls:
            if not isinstance(d, A.Binding) or d.name not in visible:
                continue
            root = g.nodes[g.roots[d.name]]
            t = root.type
            r = None
            ra = d.attr(A.RangeAttr)
            if ra is not None:
                r = ValueRange(ra.lo, ra.hi)
            used = _uses_quire(g, d.name)
            per = []
            for tn in g.target_names(root.reachability):
                if target is not None and tn != target:
                    continue
                tb = cfg[tn]
                fmt, ok = _select(d, t, tb, r, units, rep.diagnostics)
                region = None
                if used:
                    qs = [n for n in g.binding_nodes(d.name) if n.kind == "Let" and isinstance(T.strip_ref(n.type), T.QuireT)]
                    if qs and qs[0].escape is not None:
                        region = str(E.allocation_strategy(qs[0].escape, tb).region)
                per.append(
                    TargetResolution(
                        tn, fmt, signature_for(t, fmt, units), _profile(fmt, r),
                        covers(fmt, r) if r is not None else None,
                        quire_line(tb, region), used, _sweet(fmt), _allocations(g, d.name, tb),
                    )
                )
            br = BindingReport(d.name, d.span, T.format_scheme(typed.schemes[d.name], units), t, r,
                               T.format_type(result_type(t), units), per)
            for e in g.edges:
                if e.kind is EdgeKind.TRANSFER and g.nodes[e.src].binding == d.name and e.report is not None:
                    if target is None or target in e.transfer:
                        br.transfers.append(e.report)
            rep.bindings.append(br)
            rep.transfers.extend(br.transfers)
            if r is not None:
                rep.selections.append(_selection_listing(d, t, r, per, units))
            if used:
                rep.quires.extend(_quire_reports(g, typed, cfg, d.name))
        rep.escapes = _escape_reports(g, cfg, visible)
    return rep


# -- text rendering ----------------------------------------------------------------------


def render_resolution(report: DiagnosticsReport, binding: str, mode: str = "resolution") -> str:
    """One binding's cross-target display; mode "selection" gives the per-value precision listing."""
    if mode == "selection":
        for s in report.selections:
            if s.name == binding:
                return render_selection(s)
        return ""
    b = report.binding(binding)
    label_w = max([len(t.target) + 1 for t in b.per_target] + [7])
    width = 6 + label_w + 2
    items = []
    for t in b.per_target:
        lines = [t.signature, f"Precision: {t.precision_text()}", f"Quire: {t.quire_text()}"]
        if isinstance(t.format, _PositBase) and b.range is not None:
            verb = "covers" if t.covers else "does not cover"
            lines.append(f"Dynamic range: {nominal_range(t.format)} {verb} {fmt_range(b.range.lo, b.range.hi)}")
        for name, a in t.allocations:
            lines.append(f"Allocation: {name} -> {a.region} ({STRATEGY_TEXT[a.strategy]})")
        items.append((f"{t.target}:", lines))
    for tr in b.transfers:
        fid = "1.0" if tr.lossless else sci(tr.fidelity, 3)
        how = "lossless" if tr.lossless else "lossy"
        lines = [
            f"{tr.src_format.short_name} -> {tr.dst_format.short_name}",
            f"Protocol: {tr.protocol}",
            f"Fidelity: {fid} ({how}; {tr.reason})",
        ]
        items.append((f"Transfer ({tr.source} -> {tr.dest}):", lines))
    out = [f"{b.name}: {b.scheme}"]
    # transfers put their first line right after the label
    rows = []
    for i, (label, lines) in enumerate(items):
        last = i == len(items) - 1
        head = f"  +-- {label:<{label_w}}  " if not label.startswith("Transfer") else f"  +-- {label} "
        rows.append(head + lines[0])
        rail = "  |" if not last else "   "
        for ln in lines[1:]:
            rows.append(f"{rail:<{width}}{ln}")
    return "\n".join(out + rows) + "\n"


def render_selection(s: SelectionListing) -> str:
    out = [f"{s.name}: {s.type_text}", f"  Dimensional range: {fmt_range(s.range.lo, s.range.hi)} ({s.provenance})"]
    label_w = max([len(t) + 1 for t, *_ in s.rows] + [7])
    fmt_w = max([len(f.long_name) for _, f, _, _ in s.rows] + [0])
    for i, (t, f, p, one) in enumerate(s.rows):
        head = f"  +-- {t + ':':<{label_w}}  {f.long_name:<{fmt_w}} "
        if one is None:
            out.append(f"{head}(worst-case relative error: {sci(p.summary, 3)}, uniform)")
        else:
            out.append(f"{head}(worst-case relative error: {sci(p.summary)} at range extremes,")
            out.append(f"  |{'':<{len(head) - 3}} {sci(one)} near 1.0)")
    if s.note is not None:
        ratio, spot, share = s.note
        lo, hi = 10.0**spot.lo_decade, 10.0**spot.hi_decade
        out.append(f"  +-- Note: posit provides {ratio:.0f}x better precision than float32 in [{plain(lo)}, {plain(hi)}] subrange")
        out.append(f"             where {share:.1%} of the declared range's log-magnitude lies")
    return "\n".join(out) + "\n"


def render_quire(q: QuireReport) -> str:
    out = [f"{q.name}: Quire (exact accumulator)", f"  Dimension: {q.dimension} (inferred from fma operands)"]
    label_w = max([len(x.target) + 1 for x in q.lines] + [7])
    for x in q.lines:
        out.append(f"  +-- {x.target + ':':<{label_w}}  {x.text}")
    out.append(f"  Lifetime: {q.lifetime}")
    return "\n".join(out) + "\n"


def escape_diagnostic(e: EscapeReport) -> Diagnostic:
    notes = [
        f"created by {e.creator}; tentative lifetime: {e.tentative}",
        "escape path: " + " -> ".join(e.path),
        f"required lifetime: {e.required}",
        f"promotion: {e.tentative} -> {e.required}",
    ]
    for i, s in enumerate(e.suggestions, 1):
        notes.append(f"Alternative {i}: {s.title} ({s.cost}): {s.detail}")
    return Diagnostic("warning", "escape", f"{e.name} escapes {e.binding} ({e.record.kind_name})", e.span, tuple(notes))


def render_transfer(tr: TransferReport) -> str:
    fid = "1.0" if tr.lossless else sci(tr.fidelity, 3)
    how = "lossless" if tr.lossless else "lossy"
    lines = [
        f"Transfer ({tr.source} -> {tr.dest}): {tr.src_format.short_name} -> {tr.dst_format.short_name}",
        f"  Protocol: {tr.protocol}",
        f"  Fidelity: {fid} ({how}; {tr.reason})",
    ]
    return "\n".join(lines) + "\n"


def render_text(report: DiagnosticsReport, show: str = "all") -> str:
    """Everything the report holds, as plain text; the graph is read in passive mode."""
    g = report.graph
    blocks: list[str] = []

    def emit():
        if show in ("all",):
            blocks.extend(render_resolution(report, b.name) for b in report.bindings)
            blocks.extend(render_quire(q) for q in report.quires)
        if show == "repr":
            blocks.extend(render_selection(s) for s in report.selections)
        if show == "transfers":
            blocks.extend(render_transfer(t) for t in report.transfers)
        if show in ("all", "escapes"):
            blocks.extend(escape_diagnostic(e).render() + "\n" for e in report.escapes)
        for d in report.diagnostics:
            if d.severity == "error" or show in ("all", "repr"):
                blocks.append(d.render() + "\n")

    if g is not None:
        with g.passive_mode():
            emit()
    else:
        emit()
    return "\n".join(blocks)
