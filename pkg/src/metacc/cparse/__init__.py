from .ast import AstNode, SourceSpan, print_tree, structurally_equal
from .lexer import Token, tokenize
from .parser import ParseError, parse_unit

__all__ = [
    "AstNode", "SourceSpan", "Token", "ParseError", "parse_unit", "print_tree",
    "structurally_equal", "tokenize",
]
