"""Diagnostics shared by the analysis passes."""

from __future__ import annotations

from dataclasses import dataclass, field

from .syntax.ast import Loc


@dataclass(frozen=True)
class Diagnostic:
    severity: str  # "error" | "warning" | "note"
    code: str
    message: str
    span: Loc | None = None
    notes: tuple[str, ...] = field(default=())

    def render(self) -> str:
        head = f"{self.severity.capitalize()}: {self.message}"
        if self.span is not None:
            head = f"{self.span.line}:{self.span.col}: {head}"
        return "\n".join([head, *("  " + n for n in self.notes)])

    def to_json(self) -> dict:
        out = {"severity": self.severity, "code": self.code, "message": self.message, "notes": list(self.notes)}
        if self.span is not None:
            out["span"] = [self.span.line, self.span.col, self.span.end_line, self.span.end_col]
        return out
