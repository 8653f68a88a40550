"""Recursive-descent parser with an offside layout rule.

A block opened by ``=``, ``->``, ``do`` or ``{`` followed by a line break
takes the column of its first token. Each line starting at that column
begins a new item; a line starting further left ends the block; a line
starting further right continues the current item. Closing brackets are
never offside.
"""

from __future__ import annotations

from . import ast as A
from .lexer import ParseError, Token, tokenize

_CLOSERS = {")", "]", "}", ">]"}
_ATTR_KINDS = ("Target", "Memory", "Inline", "Range", "AD")


def parse(source: str) -> A.Program:
    return _Parser(tokenize(source)).program()


def parse_expr(source: str) -> A.Expr:
    """Parse a standalone expression block (used by tests and tooling)."""
    p = _Parser(tokenize(source))
    e = p.block_at_cursor(top=True)
    p.expect_eof()
    return e


def parse_type(source: str) -> A.TypeExpr:
    p = _Parser(tokenize(source))
    t = p.type_()
    p.expect_eof()
    return t


def _is_int_text(text: str) -> bool:
    return text.isdigit()


class _Parser:
    def __init__(self, toks: list[Token]):
        self.toks = toks
        self.pos = 0
        self.ctx = [0]
        self.item_start = 0
        self.last = toks[0].loc

    # -- token access ----------------------------------------------------

    def raw(self) -> Token:
        return self.toks[self.pos]

    def offside(self, tok: Token) -> bool:
        if tok.kind == "EOF" or (tok.kind == "PUNCT" and tok.text in _CLOSERS):
            return False
        return tok.first_on_line and tok.col <= self.ctx[-1] and self.pos != self.item_start

    def peek(self) -> Token:
        tok = self.raw()
        if self.offside(tok):
            return Token("END", "", tok.loc, True, False)
        return tok

    def at(self, text: str) -> bool:
        return self.peek().is_(text)

    def advance(self) -> Token:
        tok = self.peek()
        if tok.kind in ("END", "EOF"):
            raise ParseError("unexpected end of block", tok.loc)
        self.pos += 1
        self.last = tok.loc
        return tok

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if not tok.is_(text):
            raise ParseError(f"unexpected {_describe(tok)}", tok.loc, frozenset({repr(text)}))
        return self.advance()

    def ident(self, what: str = "identifier") -> Token:
        tok = self.peek()
        if tok.kind != "IDENT":
            raise ParseError(f"unexpected {_describe(tok)}", tok.loc, frozenset({what}))
        return self.advance()

    def span_from(self, start: A.Loc) -> A.Loc:
        return A.Loc(start.line, start.col, self.last.end_line, self.last.end_col)

    def expect_eof(self) -> None:
        tok = self.raw()
        if tok.kind != "EOF":
            raise ParseError(f"unexpected {_describe(tok)}", tok.loc, frozenset({"end of input"}))

    # -- program -----------------------------------------------------------

    def program(self) -> A.Program:
        decls = []
        self.ctx = [1]
        while self.raw().kind != "EOF":
            tok = self.raw()
            if tok.col != 1 or not tok.first_on_line:
                raise ParseError(f"unexpected {_describe(tok)}", tok.loc, frozenset({"declaration at column 1"}))
            decls.append(self.decl())
        return A.Program(decls)

    def decl(self):
        start = self.raw().loc
        attrs = []
        while self.raw().is_("[<"):
            self.item_start = self.pos
            attrs.append(self.attribute())
        self.item_start = self.pos
        tok = self.peek()
        if tok.is_("val"):
            if attrs:
                raise ParseError("attributes are not allowed on val declarations", tok.loc)
            self.advance()
            name = self.ident().text
            self.expect(":")
            ann = self.type_()
            return A.Extern(name, ann, self.span_from(start))
        if not tok.is_("let"):
            raise ParseError(f"unexpected {_describe(tok)}", tok.loc, frozenset({"'let'", "'val'"}))
        self.advance()
        if self.at("mutable"):
            raise ParseError("top-level bindings cannot be mutable", self.peek().loc)
        name = self.ident().text
        attrs.extend(self.attributes())
        params = self.params()
        ret = None
        if self.at(":"):
            self.advance()
            ret = self.type_()
        self.expect("=")
        body = self.body()
        tok = self.raw()
        if tok.kind != "EOF" and not (tok.first_on_line and tok.col == 1):
            raise ParseError(f"unexpected {_describe(tok)}", tok.loc)
        return A.Binding(name, params, body, ret, attrs, self.span_from(start))

    # -- attributes ----------------------------------------------------------

    def attributes(self) -> list:
        out = []
        while self.at("[<"):
            out.append(self.attribute())
        return out

    def attribute(self):
        start = self.expect("[<").loc
        kind_tok = self.ident("attribute name")
        kind = kind_tok.text
        if kind not in _ATTR_KINDS:
            raise ParseError(f"unknown attribute {kind!r}", kind_tok.loc, frozenset(_ATTR_KINDS))
        if kind == "Inline":
            self.expect(">]")
            return A.InlineAttr(self.span_from(start))
        self.expect(":")
        if kind == "Target":
            names = [self.ident("target name").text]
            while self.at("|"):
                self.advance()
                names.append(self.ident("target name").text)
            self.expect(">]")
            return A.TargetAttr(names, self.span_from(start))
        if kind == "Memory":
            if self.at("arena"):
                space = self.advance().text
            else:
                space = self.ident("memory space").text
            self.expect(">]")
            return A.MemoryAttr(space, self.span_from(start))
        if kind == "AD":
            mode_tok = self.ident("'forward' or 'reverse'")
            if mode_tok.text not in ("forward", "reverse"):
                raise ParseError(f"unknown AD mode {mode_tok.text!r}", mode_tok.loc, frozenset({"forward", "reverse"}))
            self.expect(">]")
            return A.ADAttr(mode_tok.text, self.span_from(start))
        lo = self.number_value()
        self.expect("..")
        hi = self.number_value()
        self.expect(">]")
        if not 0 < lo <= hi:
            raise ParseError("range bounds must satisfy 0 < lo <= hi", self.span_from(start))
        return A.RangeAttr(lo, hi, self.span_from(start))

    def number_value(self) -> float:
        tok = self.peek()
        if tok.kind != "NUMBER":
            raise ParseError(f"unexpected {_describe(tok)}", tok.loc, frozenset({"number"}))
        self.advance()
        return float(tok.text)

    # -- parameters ------------------------------------------------------------

    def params(self) -> list:
        out = []
        while True:
            tok = self.peek()
            if tok.kind == "IDENT":
                self.advance()
                out.append(A.Param(tok.text, None, tok.loc))
            elif tok.is_("("):
                start = self.advance().loc
                if self.at(")"):
                    self.advance()
                    out.append(A.Param("()", None, self.span_from(start)))
                    continue
                name = self.ident("parameter name").text
                ann = None
                if self.at(":"):
                    self.advance()
                    ann = self.type_()
                self.expect(")")
                out.append(A.Param(name, ann, self.span_from(start)))
            else:
                return out

    # -- blocks ------------------------------------------------------------------

    def body(self) -> A.Expr:
        """Right-hand side after '=', '->', 'do' or '{'."""
        tok = self.raw()
        if tok.first_on_line and tok.kind != "EOF" and not (tok.kind == "PUNCT" and tok.text in _CLOSERS):
            return self.block_at_cursor()
        return self.statement()

    def block_at_cursor(self, top: bool = False) -> A.Expr:
        tok = self.raw()
        col = tok.col
        if not top and col <= self.ctx[-1]:
            raise ParseError("block must be indented", tok.loc)
        self.ctx.append(col)
        try:
            e = self.items(col)
        finally:
            self.ctx.pop()
        tok = self.raw()
        if tok.first_on_line and tok.col > col and tok.kind != "EOF":
            raise ParseError("unexpected indentation", tok.loc)
        if not tok.first_on_line and tok.kind != "EOF" and not (tok.kind == "PUNCT" and tok.text in _CLOSERS):
            raise ParseError(f"unexpected {_describe(tok)}", tok.loc)
        return e

    def continues(self, col: int) -> bool:
        tok = self.raw()
        return (
            tok.kind != "EOF"
            and tok.first_on_line
            and tok.col == col
            and not (tok.kind == "PUNCT" and tok.text in _CLOSERS)
        )

    def items(self, col: int) -> A.Expr:
        self.item_start = self.pos
        tok = self.peek()
        start = tok.loc
        if tok.is_("let") or tok.is_("let!"):
            self.advance()
            bang = tok.text == "let!"
            mutable = False
            if self.at("mutable"):
                self.advance()
                mutable = True
            name = self.ident().text
            params = self.params()
            ann = None
            if self.at(":"):
                self.advance()
                ann = self.type_()
            self.expect("=")
            value = self.body()
            if params:
                vspan = value.span
                if ann is not None:
                    value = A.Annotated(value, ann, vspan)
                    ann = None
                value = A.Lambda(params, value, params[0].span.merge(vspan))
            if not self.continues(col):
                raise ParseError("a let binding must be followed by an expression", self.raw().loc)
            rest = self.items(col)
            return A.Let(name, value, rest, mutable, bang, ann, span=start.merge(rest.span))
        first = self.statement()
        if self.continues(col):
            rest = self.items(col)
            return A.Seq(first, rest, first.span.merge(rest.span))
        return first

    def statement(self) -> A.Expr:
        tok = self.peek()
        start = tok.loc
        if tok.is_("return"):
            self.advance()
            value = self.expr()
            return A.Return(value, self.span_from(start))
        if tok.is_("for"):
            self.advance()
            var = self.ident("loop variable").text
            self.expect("in")
            lo = self.expr()
            self.expect("..")
            hi = self.expr()
            self.expect("do")
            body = self.body()
            return A.ForRange(var, lo, hi, body, start.merge(body.span))
        e = self.expr()
        if self.at("<-"):
            self.advance()
            if not isinstance(e, (A.Var, A.Index)):
                raise ParseError("only variables and span elements can be assigned", e.span)
            value = self.expr()
            return A.Assign(e, value, e.span.merge(value.span))
        return e

    # -- expressions -------------------------------------------------------------

    def expr(self) -> A.Expr:
        tok = self.peek()
        if tok.is_("fun"):
            start = self.advance().loc
            params = self.params()
            if not params:
                raise ParseError("lambda needs at least one parameter", self.peek().loc, frozenset({"parameter"}))
            self.expect("->")
            body = self.body()
            return A.Lambda(params, body, start.merge(body.span))
        return self.tuple_()

    def tuple_(self) -> A.Expr:
        first = self.pipe()
        if not self.at(","):
            return first
        items = [first]
        while self.at(","):
            self.advance()
            items.append(self.pipe())
        return A.Tuple(items, items[0].span.merge(items[-1].span))

    def pipe(self) -> A.Expr:
        left = self.additive()
        while self.at("|>"):
            self.advance()
            fn = self.additive()
            left = A.Apply(fn, left, left.span.merge(fn.span))
        return left

    def additive(self) -> A.Expr:
        left = self.multiplicative()
        while self.at("+") or self.at("-"):
            op = self.advance().text
            right = self.multiplicative()
            left = A.BinOp(op, left, right, left.span.merge(right.span))
        return left

    def multiplicative(self) -> A.Expr:
        left = self.unary()
        while self.at("*") or self.at("/"):
            op = self.advance().text
            right = self.unary()
            left = A.BinOp(op, left, right, left.span.merge(right.span))
        return left

    def unary(self) -> A.Expr:
        if self.at("-"):
            start = self.advance().loc
            operand = self.unary()
            return A.Neg(operand, start.merge(operand.span))
        return self.application()

    def _atom_start(self, tok: Token) -> bool:
        return tok.kind in ("IDENT", "NUMBER") or tok.is_("(") or tok.is_("arena")

    def application(self) -> A.Expr:
        fn = self.postfix()
        while self._atom_start(self.peek()):
            arg = self.postfix()
            fn = A.Apply(fn, arg, fn.span.merge(arg.span))
        return fn

    def postfix(self) -> A.Expr:
        e = self.atom()
        while self.at(".") and self.peek().adjacent:
            self.advance()
            if self.at("["):
                self.advance()
                idx = self.expr()
                self.expect("]")
                e = A.Index(e, idx, self.span_from(e.span))
                continue
            member = self.ident("member name")
            if member.text != "Length":
                raise ParseError(f"unknown member {member.text!r}", member.loc, frozenset({"Length", "["}))
            e = A.Apply(A.Var("Span.Length", member.loc), e, self.span_from(e.span))
        return e

    def atom(self) -> A.Expr:
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            is_float = not _is_int_text(tok.text)
            value = float(tok.text) if is_float else int(tok.text)
            unit = None
            if self.at("<") and self.peek().adjacent:
                if not is_float:
                    raise ParseError("unit suffixes apply to float literals only", self.peek().loc)
                self.advance()
                unit = self.dim()
                self.expect(">")
            return A.Literal(value, is_float, unit, self.span_from(tok.loc))
        if tok.kind == "IDENT":
            self.advance()
            return A.Var(tok.text, tok.loc)
        if tok.is_("arena"):
            self.advance()
            self.expect("{")
            body = self.body()
            self.expect("}")
            return A.ArenaBlock(body, self.span_from(tok.loc))
        if tok.is_("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return A.unit_value(self.span_from(tok.loc))
            inner = self.expr()
            if self.at(":"):
                self.advance()
                ann = self.type_()
                self.expect(")")
                return A.Annotated(inner, ann, self.span_from(tok.loc))
            self.expect(")")
            if isinstance(inner, A.Tuple):
                inner.span = self.span_from(tok.loc)
            return inner
        raise ParseError(
            f"unexpected {_describe(tok)}",
            tok.loc,
            frozenset({"identifier", "number", "'('", "'fun'", "'arena'"}),
        )

    # -- types -------------------------------------------------------------------

    def type_(self) -> A.TypeExpr:
        start = self.peek().loc
        t = self.tuple_type()
        if self.at("->"):
            self.advance()
            r = self.type_()
            return A.TArrow(t, r, span=self.span_from(start))
        return t

    def tuple_type(self) -> A.TypeExpr:
        start = self.peek().loc
        t = self.atom_type()
        if not self.at("*"):
            return t
        items = [t]
        while self.at("*"):
            self.advance()
            items.append(self.atom_type())
        return A.TTuple(items, span=self.span_from(start))

    def atom_type(self) -> A.TypeExpr:
        tok = self.peek()
        if tok.kind == "TYVAR":
            self.advance()
            return A.TVarE(tok.text[1:], span=tok.loc)
        if tok.is_("("):
            self.advance()
            if self.at(")"):
                self.advance()
                return A.TUnit(span=self.span_from(tok.loc))
            t = self.type_()
            self.expect(")")
            return t
        name = self.ident("type").text
        if name == "float":
            dim = self.opt_dim()
            return A.TFloat(dim, span=self.span_from(tok.loc))
        if name == "Quire":
            dim = self.opt_dim()
            return A.TQuire(dim, span=self.span_from(tok.loc))
        if name == "int":
            return A.TInt(span=tok.loc)
        if name == "unit":
            return A.TUnit(span=tok.loc)
        if name == "Span":
            self.expect("<")
            elem = self.type_()
            self.expect(">")
            return A.TSpan(elem, span=self.span_from(tok.loc))
        return A.TNamed(name, span=tok.loc)

    def opt_dim(self):
        if not self.at("<"):
            return None
        self.advance()
        d = self.dim()
        self.expect(">")
        return d

    def dim(self) -> A.DimExpr:
        left = self.dim_power()
        while self.at("*") or self.at("/"):
            op = self.advance().text
            right = self.dim_power()
            span = left.span.merge(right.span)
            left = A.DMul(left, right, span) if op == "*" else A.DDiv(left, right, span)
        return left

    def dim_power(self) -> A.DimExpr:
        base = self.dim_atom()
        if not self.at("^"):
            return base
        self.advance()
        sign = 1
        if self.at("-"):
            self.advance()
            sign = -1
        tok = self.peek()
        if tok.kind != "NUMBER" or not _is_int_text(tok.text):
            raise ParseError("dimension exponents must be integers", tok.loc, frozenset({"integer exponent"}))
        self.advance()
        return A.DPow(base, sign * int(tok.text), self.span_from(base.span))

    def dim_atom(self) -> A.DimExpr:
        tok = self.peek()
        if tok.kind == "IDENT":
            self.advance()
            return A.DUnit(tok.text, tok.loc)
        if tok.kind == "TYVAR":
            self.advance()
            return A.DVar(tok.text[1:], tok.loc)
        if tok.kind == "NUMBER" and tok.text == "1":
            self.advance()
            return A.DOne(tok.loc)
        if tok.is_("("):
            self.advance()
            d = self.dim()
            self.expect(")")
            return d
        raise ParseError(f"unexpected {_describe(tok)}", tok.loc, frozenset({"unit name", "dimension variable", "1"}))


def _describe(tok: Token) -> str:
    if tok.kind == "EOF":
        return "end of input"
    if tok.kind == "END":
        return "end of block"
    return repr(tok.text)
