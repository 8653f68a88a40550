"""Tokenizer for Clef-lite source text."""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ast import Loc

KEYWORDS = {"let", "mutable", "fun", "for", "in", "do", "arena", "return", "val"}

# longest first
PUNCT = [
    "[<", ">]", "->", "<-", "|>", "..", "(", ")", "[", "]", "{", "}",
    ",", ":", "=", "+", "-", "*", "/", "^", "<", ">", "|", ";", ".",
]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_QUALIFIED = re.compile(r"[A-Z][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)+")
_TYVAR = re.compile(r"'[A-Za-z_][A-Za-z0-9_]*")
_NUMBER = re.compile(r"\d+(?:\.\d+)?(?:[eE][+-]?\d+)?")


class ParseError(Exception):
    def __init__(self, message: str, loc: Loc, expected: frozenset = frozenset()):
        self.message = message
        self.loc = loc
        self.expected = frozenset(expected)
        extra = f" (expected {', '.join(sorted(self.expected))})" if self.expected else ""
        super().__init__(f"{loc}: {message}{extra}")


@dataclass(frozen=True)
class Token:
    kind: str  # IDENT, TYVAR, NUMBER, KW, PUNCT, EOF
    text: str
    loc: Loc
    first_on_line: bool
    adjacent: bool  # no whitespace between this token and the previous one

    @property
    def col(self) -> int:
        return self.loc.col

    def is_(self, text: str) -> bool:
        return self.kind in ("KW", "PUNCT") and self.text == text


def tokenize(source: str) -> list[Token]:
    toks: list[Token] = []
    line, col, i = 1, 1, 0
    n = len(source)
    first = True
    prev_end = -1
    while i < n:
        c = source[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            first = True
            continue
        if c in " \r":
            i += 1
            col += 1
            continue
        if c == "\t":
            raise ParseError("tab characters are not allowed", Loc(line, col, line, col + 1))
        if source.startswith("//", i):
            while i < n and source[i] != "\n":
                i += 1
            continue
        start = i
        kind = None
        text = ""
        if source.startswith("let!", i):
            kind, text = "KW", "let!"
        elif c.isdigit():
            m = _NUMBER.match(source, i)
            kind, text = "NUMBER", m.group()
        elif c == "'":
            m = _TYVAR.match(source, i)
            if not m:
                raise ParseError("malformed type variable", Loc(line, col, line, col + 1))
            kind, text = "TYVAR", m.group()
        elif c.isalpha() or c == "_":
            m = _QUALIFIED.match(source, i)
            if m and not source.startswith(".", m.end()):
                kind, text = "IDENT", m.group()
            else:
                text = _IDENT.match(source, i).group()
                kind = "KW" if text in KEYWORDS else "IDENT"
        else:
            for p in PUNCT:
                if source.startswith(p, i):
                    kind, text = "PUNCT", p
                    break
            if kind is None:
                raise ParseError(f"unexpected character {c!r}", Loc(line, col, line, col + 1))
        end_col = col + len(text)
        toks.append(Token(kind, text, Loc(line, col, line, end_col), first, start == prev_end))
        first = False
        i += len(text)
        col = end_col
        prev_end = i
    toks.append(Token("EOF", "", Loc(line, col, line, col), True, False))
    return toks
