"""Lexer, parser and printers for the ``.mtt`` surface language."""

from .lexer import Lexer, Token, tokenize
from .parser import iter_commands, parse_commands, parse_term
from .printer import show, show_surface

__all__ = ["Lexer", "Token", "tokenize", "iter_commands", "parse_commands", "parse_term", "show",
           "show_surface"]
