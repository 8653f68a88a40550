"""Lexer, parser, pretty-printer and desugaring for Clef-lite."""

from . import ast
from .desugar import desugar
from .lexer import ParseError, tokenize
from .parser import parse, parse_expr, parse_type
from .pretty import pretty, pretty_dim, pretty_expr, pretty_type

__all__ = [
    "ast", "desugar", "ParseError", "tokenize", "parse", "parse_expr",
    "parse_type", "pretty", "pretty_dim", "pretty_expr", "pretty_type",
]
