"""SELECT query subset: BGP, DISTINCT, VALUES, LIMIT, OFFSET.

This is exactly the query shape the codec generates; anything outside it is
rejected loudly rather than mis-evaluated. Prefixed names resolve against
the built-in namespace table.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from ..namespaces import WIKIDATA, XSD_DECIMAL, XSD_INTEGER, NamespaceError
from .ntriples import write_term
from .terms import IriTerm, Literal, Term


class SparqlError(ValueError):
    """Syntax error or out-of-subset construct, with character position."""

    def __init__(self, message: str, pos: int = 0) -> None:
        super().__init__(f"at offset {pos}: {message}")
        self.pos = pos


_UNSUPPORTED = (
    "PREFIX", "BASE", "ASK", "CONSTRUCT", "DESCRIBE", "OPTIONAL", "FILTER",
    "UNION", "GRAPH", "SERVICE", "BIND", "MINUS", "EXISTS", "ORDER",
    "GROUP", "HAVING", "REDUCED", "FROM", "INSERT", "DELETE", "WITH",
)


@dataclass(frozen=True, slots=True)
class Var:
    name: str

    def __repr__(self) -> str:
        return f"?{self.name}"


PatternTerm = Union[Term, Var]


@dataclass(frozen=True, slots=True)
class TriplePattern:
    subject: PatternTerm
    predicate: PatternTerm
    object: PatternTerm

    def __post_init__(self) -> None:
        if isinstance(self.subject, Literal):
            raise SparqlError("literal subjects are not allowed")
        if isinstance(self.predicate, Literal):
            raise SparqlError("literal predicates are not allowed")

    def variables(self) -> set[str]:
        return {t.name for t in (self.subject, self.predicate, self.object)
                if isinstance(t, Var)}


@dataclass(frozen=True, slots=True)
class ValuesBlock:
    variable: str
    terms: tuple[Term, ...]


@dataclass(frozen=True, slots=True)
class SelectQuery:
    variables: tuple[str, ...]
    patterns: tuple[TriplePattern, ...]
    distinct: bool = False
    values: ValuesBlock | None = None
    limit: int | None = None
    offset: int | None = None

    def __post_init__(self) -> None:
        if not self.variables:
            raise SparqlError("projection must name at least one variable")
        in_scope: set[str] = set()
        for p in self.patterns:
            in_scope |= p.variables()
        if self.values:
            in_scope.add(self.values.variable)
        missing = [v for v in self.variables if v not in in_scope]
        if missing:
            raise SparqlError(
                f"projected variable ?{missing[0]} does not occur in the pattern")

    def with_page(self, limit: int, offset: int) -> "SelectQuery":
        return SelectQuery(self.variables, self.patterns, self.distinct,
                           self.values, limit, offset)


def _write_pattern_term(t: PatternTerm) -> str:
    if isinstance(t, Var):
        return f"?{t.name}"
    return write_term(t)


def serialize_query(q: SelectQuery) -> str:
    """Render with full IRIs; the output is endpoint-portable SPARQL."""
    parts = ["SELECT"]
    if q.distinct:
        parts.append("DISTINCT")
    parts.extend(f"?{v}" for v in q.variables)
    parts.append("WHERE {")
    for p in q.patterns:
        parts.append(" ".join((_write_pattern_term(p.subject),
                               _write_pattern_term(p.predicate),
                               _write_pattern_term(p.object), ".")))
    if q.values:
        terms = " ".join(write_term(t) for t in q.values.terms)
        parts.append(f"VALUES ?{q.values.variable} {{ {terms} }}")
    parts.append("}")
    if q.limit is not None:
        parts.append(f"LIMIT {q.limit}")
    if q.offset is not None:
        parts.append(f"OFFSET {q.offset}")
    return " ".join(parts)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<iri><[^<>\s]*>)
  | (?P<var>[?$][A-Za-z_][A-Za-z0-9_]*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<number>[+-]?[0-9]+(?:\.[0-9]+)?)
  | (?P<punct>\{|\}|\.|\*|\^\^|@[a-zA-Z]+(?:-[a-zA-Z0-9]+)*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_-]*(?::[A-Za-z0-9_.-]*)?)
""", re.VERBOSE)

_STR_UNESC = {"t": "\t", "n": "\n", "r": "\r", '"': '"', "\\": "\\", "'": "'"}


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise SparqlError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup or ""
        if kind == "name" and ":" not in m.group(0) \
                and m.group(0).upper() in _UNSUPPORTED:
            raise SparqlError(
                f"{m.group(0).upper()} is unsupported in this subset", pos)
        if kind not in ("ws", "comment"):
            toks.append(_Tok(kind, m.group(0), pos))
        pos = m.end()
    toks.append(_Tok("eof", "", pos))
    return toks


class _QueryParser:
    def __init__(self, text: str, namespaces=WIKIDATA) -> None:
        self._toks = _tokenize(text)
        self._i = 0
        self._ns = namespaces

    def _peek(self) -> _Tok:
        return self._toks[self._i]

    def _next(self) -> _Tok:
        t = self._toks[self._i]
        if t.kind != "eof":
            self._i += 1
        return t

    def _expect_word(self, word: str) -> None:
        t = self._next()
        if t.kind != "name" or t.text.upper() != word:
            raise SparqlError(f"expected {word}, got {t.text!r}", t.pos)

    def _expect_punct(self, punct: str) -> _Tok:
        t = self._next()
        if t.kind != "punct" or t.text != punct:
            raise SparqlError(f"expected {punct!r}, got {t.text!r}", t.pos)
        return t

    def _check_supported(self, t: _Tok) -> None:
        if t.kind == "name" and t.text.upper() in _UNSUPPORTED:
            raise SparqlError(f"{t.text.upper()} is unsupported in this subset", t.pos)

    def _iri(self, t: _Tok) -> IriTerm:
        if t.kind == "iri":
            return IriTerm(t.text[1:-1])
        if t.kind == "name" and ":" in t.text:
            try:
                return IriTerm(self._ns.expand(t.text))
            except NamespaceError as e:
                raise SparqlError(str(e), t.pos) from None
        if t.kind == "name" and t.text == "a":
            return IriTerm("http://www.w3.org/1999/02/22-rdf-syntax-ns#type")
        raise SparqlError(f"expected an IRI, got {t.text!r}", t.pos)

    def _string_literal(self, t: _Tok) -> Literal:
        raw = t.text[1:-1]
        out = []
        i = 0
        while i < len(raw):
            c = raw[i]
            if c == "\\" and i + 1 < len(raw):
                e = raw[i + 1]
                if e in _STR_UNESC:
                    out.append(_STR_UNESC[e])
                    i += 2
                    continue
                if e == "u":
                    out.append(chr(int(raw[i + 2:i + 6], 16)))
                    i += 6
                    continue
                raise SparqlError(f"unknown escape \\{e} in literal", t.pos)
            out.append(c)
            i += 1
        lexical = "".join(out)
        nxt = self._peek()
        if nxt.kind == "punct" and nxt.text == "^^":
            self._next()
            dt = self._iri(self._next())
            return Literal(lexical, dt.value)
        if nxt.kind == "punct" and nxt.text.startswith("@"):
            self._next()
            return Literal(lexical, language=nxt.text[1:])
        return Literal(lexical)

    def _term(self, t: _Tok, allow_var: bool = True) -> PatternTerm:
        self._check_supported(t)
        if t.kind == "var":
            if not allow_var:
                raise SparqlError("variable not allowed here", t.pos)
            return Var(t.text[1:])
        if t.kind == "string":
            return self._string_literal(t)
        if t.kind == "number":
            dt = XSD_DECIMAL if "." in t.text else XSD_INTEGER
            return Literal(t.text, dt)
        return self._iri(t)

    def parse(self) -> SelectQuery:
        self._expect_word("SELECT")
        distinct = False
        t = self._peek()
        if t.kind == "name" and t.text.upper() == "DISTINCT":
            self._next()
            distinct = True
        variables: list[str] = []
        while True:
            t = self._peek()
            if t.kind == "var":
                variables.append(self._next().text[1:])
            elif t.kind == "punct" and t.text == "*":
                raise SparqlError("star projection is unsupported in this subset", t.pos)
            else:
                break
        if not variables:
            raise SparqlError("SELECT needs at least one variable", t.pos)
        self._expect_word("WHERE")
        self._expect_punct("{")
        patterns: list[TriplePattern] = []
        values: ValuesBlock | None = None
        while True:
            t = self._peek()
            if t.kind == "punct" and t.text == "}":
                self._next()
                break
            if t.kind == "eof":
                raise SparqlError("missing }", t.pos)
            if t.kind == "name" and t.text.upper() == "VALUES":
                if values is not None:
                    raise SparqlError("only one VALUES block is supported", t.pos)
                values = self._parse_values()
                continue
            self._check_supported(t)
            s = self._term(self._next())
            p = self._term(self._next())
            o = self._term(self._next())
            try:
                patterns.append(TriplePattern(s, p, o))
            except SparqlError as e:
                raise SparqlError(str(e).split(": ", 1)[-1], t.pos) from None
            nxt = self._peek()
            if nxt.kind == "punct" and nxt.text == ".":
                self._next()
        limit = offset = None
        while True:
            t = self._peek()
            if t.kind == "name" and t.text.upper() == "LIMIT":
                self._next()
                limit = self._int()
            elif t.kind == "name" and t.text.upper() == "OFFSET":
                self._next()
                offset = self._int()
            elif t.kind == "eof":
                break
            else:
                self._check_supported(t)
                raise SparqlError(f"unexpected trailing {t.text!r}", t.pos)
        try:
            return SelectQuery(tuple(variables), tuple(patterns), distinct,
                               values, limit, offset)
        except SparqlError as e:
            raise SparqlError(str(e).split(": ", 1)[-1], 0) from None

    def _parse_values(self) -> ValuesBlock:
        self._expect_word("VALUES")
        t = self._next()
        if t.kind != "var":
            raise SparqlError("VALUES supports a single variable in this subset", t.pos)
        var = t.text[1:]
        self._expect_punct("{")
        terms: list[Term] = []
        while True:
            t = self._peek()
            if t.kind == "punct" and t.text == "}":
                self._next()
                break
            if t.kind == "eof":
                raise SparqlError("missing } in VALUES", t.pos)
            term = self._term(self._next(), allow_var=False)
            terms.append(term)  # type: ignore[arg-type]
        return ValuesBlock(var, tuple(terms))

    def _int(self) -> int:
        t = self._next()
        if t.kind != "number" or "." in t.text or t.text.startswith("-"):
            raise SparqlError(f"expected a non-negative integer, got {t.text!r}", t.pos)
        return int(t.text)


def parse_query(text: str, namespaces=WIKIDATA) -> SelectQuery:
    return _QueryParser(text, namespaces).parse()
