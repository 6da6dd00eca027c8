"""Lexing, parsing and printing of APPL-script source."""

from .lexer import Token, tokenize
from .nodes import Node, ast_size
from .parser import parse, parse_source
from .printer import pretty_print

__all__ = ["Node", "Token", "ast_size", "parse", "parse_source", "pretty_print", "tokenize"]
