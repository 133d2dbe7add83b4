"""Query-string parsing: ``P(L=1 | A=0, do(E=1))``.

Values may be indices or declared labels; labels resolve against the
model.  Disjointness of the target / observed / do sections is enforced.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .docalc import QueryExpr
from .errors import ParseError
from .modelfile import BuiltModel
from .space import Assignment

_QUERY_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<int>\d+)
  | (?P<sym>[(),=|])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class RawQuery:
    """Parsed but unresolved query: values are still raw strings."""

    target: tuple  # ((name, raw_value), ...)
    observed: tuple
    intervened: tuple


class _QParser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = []
        pos = 0
        while pos < len(text):
            m = _QUERY_TOKEN.match(text, pos)
            if m is None:
                raise ParseError("unexpected character %r in query" % text[pos], 1, pos + 1)
            if m.lastgroup != "ws":
                kind = m.group() if m.lastgroup == "sym" else m.lastgroup
                self.tokens.append((kind, m.group(), pos + 1))
            pos = m.end()
        self.tokens.append(("eof", "", len(text) + 1))
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def next(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind, what=None):
        tok = self.peek()
        if tok[0] != kind:
            raise ParseError(
                "unexpected %r in query" % (tok[1] or "end of input"),
                1,
                tok[2],
                (what or kind,),
            )
        return self.next()

    def bindings(self) -> list:
        out = []
        while True:
            name = self.expect("name", "variable name")
            self.expect("=", "=")
            tok = self.peek()
            if tok[0] not in ("int", "name"):
                raise ParseError("expected a value after '='", 1, tok[2], ("value",))
            self.next()
            out.append((name[1], tok[1], tok[2]))
            if self.peek()[0] == ",":
                save = self.pos
                self.next()
                # a comma may also separate conditions; only continue if a
                # binding follows immediately
                if self.peek()[0] == "name" and self.tokens[self.pos + 1][0] == "=":
                    continue
                self.pos = save
            return out


def parse_query(text: str) -> RawQuery:
    p = _QParser(text)
    head = p.expect("name", "P")
    if head[1] != "P":
        raise ParseError("queries start with 'P('", 1, head[2], ("P",))
    p.expect("(", "(")
    target = p.bindings()
    observed: list = []
    intervened: list = []
    if p.peek()[0] == "|":
        p.next()
        while True:
            tok = p.peek()
            if tok[0] == "name" and tok[1] == "do":
                p.next()
                p.expect("(", "(")
                intervened.extend(p.bindings())
                p.expect(")", ")")
            elif tok[0] == "name":
                observed.extend(p.bindings())
            else:
                raise ParseError(
                    "expected a condition or do(...)", 1, tok[2], ("binding", "do(")
                )
            if p.peek()[0] == ",":
                p.next()
                continue
            break
    p.expect(")", ")")
    p.expect("eof", "end of query")

    seen = {}
    for section, items in (("target", target), ("observed", observed), ("do", intervened)):
        for name, _, col in items:
            if name in seen:
                raise ParseError(
                    "variable %r appears in both %s and %s sections"
                    % (name, seen[name], section),
                    1,
                    col,
                )
            seen[name] = section
    strip = lambda items: tuple((n, v) for n, v, _ in items)
    return RawQuery(strip(target), strip(observed), strip(intervened))


def resolve_query(raw: RawQuery, built: BuiltModel) -> QueryExpr:
    """Bind raw values (indices or labels) against a model."""
    sp = built.space

    def to_assignment(pairs):
        resolved = []
        for name, value in pairs:
            if name not in sp:
                raise ParseError("query references undeclared variable %r" % name, 1, 1)
            resolved.append((name, built.resolve_value(name, value)))
        return Assignment(sp, resolved)

    return QueryExpr(
        target=to_assignment(raw.target),
        observed=to_assignment(raw.observed),
        intervened=to_assignment(raw.intervened),
    )
