"""Pipeline expressions: ``(numf |> pca) + (catf |> ohe) |> rf``.

Grammar::

    expr  := union ("|>" union)*
    union := atom ("+" atom)*
    atom  := IDENT | "(" expr ")"

``+`` (feature union) binds tighter than ``|>`` (sequential pipe), so
``a + b |> c`` feeds the union of ``a`` and ``b`` into ``c``.  Runs of the
same operator flatten into one n-ary node.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from typing import Union as _U


class ParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at byte {position}")
        self.position = position


class TokenKind(Enum):
    IDENT = "IDENT"
    PIPE_OP = "PIPE_OP"
    PLUS_OP = "PLUS_OP"
    LPAREN = "LPAREN"
    RPAREN = "RPAREN"
    END = "END"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    text: str
    position: int


@dataclass(frozen=True)
class Name:
    id: str

    @property
    def children(self) -> tuple:
        return ()


@dataclass(frozen=True)
class Pipe:
    children: tuple

    def __post_init__(self):
        if len(self.children) < 2 or any(isinstance(c, Pipe) for c in self.children):
            raise ValueError("Pipe needs >= 2 non-Pipe children")


@dataclass(frozen=True)
class Union:
    children: tuple

    def __post_init__(self):
        if len(self.children) < 2 or any(isinstance(c, Union) for c in self.children):
            raise ValueError("Union needs >= 2 non-Union children")


ExprAst = _U[Name, Pipe, Union]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


def make_pipe(parts) -> ExprAst:
    """Sequential composition with nested pipes flattened."""
    flat = []
    for p in parts:
        flat.extend(p.children if isinstance(p, Pipe) else (p,))
    return flat[0] if len(flat) == 1 else Pipe(tuple(flat))


def make_union(parts) -> ExprAst:
    flat = []
    for p in parts:
        flat.extend(p.children if isinstance(p, Union) else (p,))
    return flat[0] if len(flat) == 1 else Union(tuple(flat))


def tokenize(source: str) -> list[Token]:
    tokens = []
    raw = source.encode("utf-8")
    i = 0
    while i < len(raw):
        ch = raw[i:i + 1]
        if ch.isspace():
            i += 1
        elif raw.startswith(b"|>", i):
            tokens.append(Token(TokenKind.PIPE_OP, "|>", i))
            i += 2
        elif ch == b"+":
            tokens.append(Token(TokenKind.PLUS_OP, "+", i))
            i += 1
        elif ch == b"(":
            tokens.append(Token(TokenKind.LPAREN, "(", i))
            i += 1
        elif ch == b")":
            tokens.append(Token(TokenKind.RPAREN, ")", i))
            i += 1
        else:
            m = _IDENT.match(raw.decode("latin-1"), i)
            if m is None:
                raise ParseError(f"unexpected character {raw[i:i + 1]!r}", i)
            tokens.append(Token(TokenKind.IDENT, m.group(), i))
            i = m.end()
    tokens.append(Token(TokenKind.END, "", len(raw)))
    return tokens


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.pos = 0

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expr(self) -> ExprAst:
        parts = [self.union()]
        while self.tok.kind is TokenKind.PIPE_OP:
            self.advance()
            parts.append(self.union())
        return make_pipe(parts)

    def union(self) -> ExprAst:
        parts = [self.atom()]
        while self.tok.kind is TokenKind.PLUS_OP:
            self.advance()
            parts.append(self.atom())
        return make_union(parts)

    def atom(self) -> ExprAst:
        tok = self.tok
        if tok.kind is TokenKind.IDENT:
            self.advance()
            return Name(tok.text)
        if tok.kind is TokenKind.LPAREN:
            self.advance()
            if self.tok.kind is TokenKind.RPAREN:
                raise ParseError("empty parentheses", self.tok.position)
            inner = self.expr()
            if self.tok.kind is not TokenKind.RPAREN:
                raise ParseError(f"expected ')' to close '(' at byte {tok.position}", self.tok.position)
            self.advance()
            return inner
        if tok.kind is TokenKind.END:
            raise ParseError("unexpected end of expression", tok.position)
        if tok.kind is TokenKind.RPAREN:
            raise ParseError("unbalanced ')'", tok.position)
        raise ParseError(f"dangling operator {tok.text!r}", tok.position)


def parse(source: str) -> ExprAst:
    """Parse expression text into a flattened AST."""
    tokens = tokenize(source)
    if tokens[0].kind is TokenKind.END:
        raise ParseError("empty expression", 0)
    p = _Parser(tokens)
    ast = p.expr()
    tok = p.tok
    if tok.kind is TokenKind.RPAREN:
        raise ParseError("unbalanced ')'", tok.position)
    if tok.kind is not TokenKind.END:
        raise ParseError(f"unexpected token {tok.text!r}", tok.position)
    return ast


def render(ast: ExprAst) -> str:
    """Canonical text: only Pipe-inside-Union needs parentheses."""
    if isinstance(ast, Name):
        return ast.id
    if isinstance(ast, Pipe):
        return " |> ".join(render(c) for c in ast.children)
    return " + ".join(f"({render(c)})" if isinstance(c, Pipe) else render(c) for c in ast.children)


def leaves(ast: ExprAst) -> list[str]:
    if isinstance(ast, Name):
        return [ast.id]
    out = []
    for c in ast.children:
        out.extend(leaves(c))
    return out


def noop_count(ast: ExprAst) -> int:
    return sum(1 for name in leaves(ast) if name == "noop")
