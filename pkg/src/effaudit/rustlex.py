"""Hand-rolled Rust lexer.

Produces a flat token stream with 1-based line/column positions. Comments
and whitespace are dropped; string/char/lifetime disambiguation, nested
block comments, and raw strings are handled. Numeric literals are consumed
greedily but never interpreted.
"""

from __future__ import annotations

from dataclasses import dataclass


class LexError(Exception):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"{message} at {line}:{col}")
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str  # ident | num | str | char | lifetime | punct
    text: str
    line: int
    col: int
    end_line: int

    def is_punct(self, text: str) -> bool:
        return self.kind == "punct" and self.text == text

    def is_ident(self, text: str) -> bool:
        return self.kind == "ident" and self.text == text


# Maximal-munch multi-character operators. `>>`/`<<` stay fused; group
# nesting only tracks (), [], {} so generics never need token splitting.
_PUNCTS = (
    "<<=", ">>=", "...", "..=",
    "::", "->", "=>", "..", "&&", "||", "<<", ">>",
    "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "^=", "&=", "|=",
)

_IDENT_START = set("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ_")
_IDENT_CONT = _IDENT_START | set("0123456789")


class _Cursor:
    def __init__(self, text: str) -> None:
        self.text = text
        self.i = 0
        self.line = 1
        self.col = 1

    def peek(self, offset: int = 0) -> str:
        j = self.i + offset
        return self.text[j] if j < len(self.text) else ""

    def startswith(self, s: str) -> bool:
        return self.text.startswith(s, self.i)

    def advance(self, n: int = 1) -> None:
        for _ in range(n):
            if self.i >= len(self.text):
                return
            if self.text[self.i] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.i += 1

    @property
    def eof(self) -> bool:
        return self.i >= len(self.text)


def _is_ident_start(ch: str) -> bool:
    return ch in _IDENT_START or (ch and ord(ch) > 127)


def _is_ident_cont(ch: str) -> bool:
    return ch in _IDENT_CONT or (ch and ord(ch) > 127)


def lex(text: str) -> list[Token]:
    cur = _Cursor(text)
    tokens: list[Token] = []

    # Shebang line (not an inner attribute).
    if cur.startswith("#!") and cur.peek(2) != "[":
        while not cur.eof and cur.peek() != "\n":
            cur.advance()

    while not cur.eof:
        ch = cur.peek()
        if ch in " \t\r\n":
            cur.advance()
            continue
        if cur.startswith("//"):
            while not cur.eof and cur.peek() != "\n":
                cur.advance()
            continue
        if cur.startswith("/*"):
            _skip_block_comment(cur)
            continue

        line, col = cur.line, cur.col

        if _is_ident_start(ch):
            tok = _lex_ident_or_prefixed(cur, line, col)
            tokens.append(tok)
            continue
        if ch.isdigit():
            tokens.append(_lex_number(cur, line, col))
            continue
        if ch == '"':
            tokens.append(_lex_string(cur, line, col))
            continue
        if ch == "'":
            tokens.append(_lex_char_or_lifetime(cur, line, col))
            continue

        matched = False
        for op in _PUNCTS:
            if cur.startswith(op):
                cur.advance(len(op))
                tokens.append(Token("punct", op, line, col, line))
                matched = True
                break
        if not matched:
            cur.advance()
            tokens.append(Token("punct", ch, line, col, line))
    return tokens


def _skip_block_comment(cur: _Cursor) -> None:
    line, col = cur.line, cur.col
    cur.advance(2)
    depth = 1
    while depth > 0:
        if cur.eof:
            raise LexError("unterminated block comment", line, col)
        if cur.startswith("/*"):
            depth += 1
            cur.advance(2)
        elif cur.startswith("*/"):
            depth -= 1
            cur.advance(2)
        else:
            cur.advance()


def _lex_ident_or_prefixed(cur: _Cursor, line: int, col: int) -> Token:
    # String-literal prefixes must win over plain identifiers.
    for prefix in ("br", "cr", "b", "c", "r"):
        if cur.startswith(prefix):
            after = cur.peek(len(prefix))
            if after == '"':
                cur.advance(len(prefix))
                return _lex_string(cur, line, col, raw="r" in prefix)
            if after == "#" and "r" in prefix:
                # `r#"` begins a raw string; `r#ident` is a raw identifier.
                j = len(prefix)
                while cur.peek(j) == "#":
                    j += 1
                if cur.peek(j) == '"':
                    cur.advance(len(prefix))
                    return _lex_string(cur, line, col, raw=True)
            if prefix == "b" and after == "'":
                cur.advance(1)
                return _lex_char_or_lifetime(cur, line, col, byte=True)
    raw_ident = cur.startswith("r#") and _is_ident_start(cur.peek(2))
    if raw_ident:
        cur.advance(2)
    start = cur.i
    while not cur.eof and _is_ident_cont(cur.peek()):
        cur.advance()
    return Token("ident", cur.text[start:cur.i], line, col, line)


def _lex_number(cur: _Cursor, line: int, col: int) -> Token:
    start = cur.i
    while not cur.eof:
        ch = cur.peek()
        if _is_ident_cont(ch):
            # Exponent sign belongs to the literal: 1e-5, 2.5E+3.
            if ch in "eE" and cur.peek(1) in "+-" and cur.peek(2).isdigit():
                cur.advance(2)
            cur.advance()
        elif ch == "." and cur.peek(1) != "." and cur.peek(1).isdigit():
            cur.advance()
        else:
            break
    return Token("num", cur.text[start:cur.i], line, col, line)


def _lex_string(cur: _Cursor, line: int, col: int, raw: bool = False) -> Token:
    start = cur.i
    if raw:
        hashes = 0
        while cur.peek() == "#":
            hashes += 1
            cur.advance()
        if cur.peek() != '"':
            raise LexError("malformed raw string", line, col)
        cur.advance()
        close = '"' + "#" * hashes
        while not cur.startswith(close):
            if cur.eof:
                raise LexError("unterminated raw string", line, col)
            cur.advance()
        cur.advance(len(close))
    else:
        cur.advance()  # opening quote
        while True:
            if cur.eof:
                raise LexError("unterminated string", line, col)
            ch = cur.peek()
            if ch == "\\":
                cur.advance(2)
            elif ch == '"':
                cur.advance()
                break
            else:
                cur.advance()
    return Token("str", cur.text[start:cur.i], line, col, cur.line)


def _lex_char_or_lifetime(cur: _Cursor, line: int, col: int, byte: bool = False) -> Token:
    cur.advance()  # opening quote
    ch = cur.peek()
    if not byte and _is_ident_start(ch):
        start = cur.i
        while not cur.eof and _is_ident_cont(cur.peek()):
            cur.advance()
        if cur.peek() == "'":
            cur.advance()
            return Token("char", cur.text[start : cur.i], line, col, cur.line)
        return Token("lifetime", cur.text[start:cur.i], line, col, line)
    start = cur.i
    while True:
        if cur.eof:
            raise LexError("unterminated char literal", line, col)
        c = cur.peek()
        if c == "\\":
            cur.advance(2)
        elif c == "'":
            cur.advance()
            break
        else:
            cur.advance()
    return Token("char", cur.text[start : cur.i], line, col, cur.line)


def token_lines(tokens: list[Token]) -> set[int]:
    """Source lines bearing at least one non-comment token."""
    lines: set[int] = set()
    for tok in tokens:
        lines.update(range(tok.line, tok.end_line + 1))
    return lines
