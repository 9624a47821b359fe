"""Tokenizer for the query language."""

from __future__ import annotations

from typing import NamedTuple

from ..errors import QuerySyntaxError

KEYWORDS = frozenset(
    """SELECT FROM WHERE ORDER BY ASC DESC INSERT INTO VALUES DELETE UPDATE SET
    CREATE TABLE DROP GRID INTEGER CHAR AND OR NOT""".split()
)

_TWO_CHAR = {"<=", ">=", "<>", "!="}
_ONE_CHAR = set("=<>+-*(),.;")


class Token(NamedTuple):
    kind: str  # KEYWORD IDENT INT STRING OP EOF
    value: object
    pos: int

    def describe(self) -> str:
        if self.kind == "EOF":
            return "end of input"
        if self.kind == "STRING":
            return "'" + self.value.replace("'", "''") + "'"
        return str(self.value)


def tokenize(text: str) -> list:
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if text.startswith("--", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start = i
        if ch.isalpha() or ch == "_":
            while i < n and (text[i].isalnum() or text[i] == "_"):
                i += 1
            word = text[start:i].upper()
            tokens.append(Token("KEYWORD" if word in KEYWORDS else "IDENT", word, start))
        elif ch.isdigit():
            while i < n and text[i].isdigit():
                i += 1
            if i < n and (text[i].isalpha() or text[i] == "_"):
                raise QuerySyntaxError("malformed number", start, ("number",), text[start : i + 1])
            tokens.append(Token("INT", int(text[start:i]), start))
        elif ch == "'":
            i += 1
            parts = []
            while True:
                if i >= n:
                    raise QuerySyntaxError("unterminated string literal", start, ("'",), None)
                if text[i] == "'":
                    if text.startswith("''", i):
                        parts.append("'")
                        i += 2
                        continue
                    i += 1
                    break
                parts.append(text[i])
                i += 1
            tokens.append(Token("STRING", "".join(parts), start))
        elif text[i : i + 2] in _TWO_CHAR:
            op = text[i : i + 2]
            tokens.append(Token("OP", "<>" if op == "!=" else op, start))
            i += 2
        elif ch in _ONE_CHAR:
            tokens.append(Token("OP", ch, start))
            i += 1
        else:
            raise QuerySyntaxError(f"unexpected character {ch!r}", start, (), ch)
    tokens.append(Token("EOF", None, n))
    return tokens


def split_statements(text: str) -> list:
    """Split on ``;`` outside string literals; returns ``(offset, statement)`` pairs.

    Segments holding nothing but whitespace and comments are dropped.
    """
    out, start, i, quoted, content = [], 0, 0, False, False
    while i < len(text):
        ch = text[i]
        if quoted:
            if ch == "'":
                quoted = False
        elif ch == "'":
            quoted = content = True
        elif text.startswith("--", i):
            nl = text.find("\n", i)
            i = len(text) if nl < 0 else nl
            continue
        elif ch == ";":
            if content:
                out.append((start, text[start:i]))
            start, content = i + 1, False
        elif not ch.isspace():
            content = True
        i += 1
    if content:
        out.append((start, text[start:]))
    return out


def is_complete(text: str) -> bool:
    """True when ``text`` ends with a ``;`` outside any string literal."""
    quoted = False
    last = None
    i = 0
    while i < len(text):
        ch = text[i]
        if quoted:
            if ch == "'":
                quoted = False
        elif ch == "'":
            quoted = True
        elif text.startswith("--", i):
            nl = text.find("\n", i)
            if nl < 0:
                break
            i = nl
            continue
        elif not ch.isspace():
            last = ch
        i += 1
    return not quoted and last == ";"
