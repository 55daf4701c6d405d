"""N-Triples reader and writer.

Blank node labels are accepted on input and skolemized into deterministic
``urn:skolem:{document-digest}:{label}`` IRIs, so parsing the same document
twice yields identical graphs and reified nodes stay comparable.
"""

from __future__ import annotations

import hashlib
import re
from typing import IO, Iterable

from ..namespaces import RDF_LANG_STRING, XSD_STRING
from .terms import Graph, IriTerm, Literal, Term, Triple, triple_key

SKOLEM_PREFIX = "urn:skolem:"


class NTriplesError(ValueError):
    def __init__(self, message: str, line: int) -> None:
        super().__init__(f"line {line}: {message}")
        self.line = line


_IRI_RE = re.compile(r"<([^<>\"{}|^`\\\x00-\x20]*)>")
_BNODE_RE = re.compile(r"_:([A-Za-z0-9][A-Za-z0-9._-]*)")
_STRING_RE = re.compile(r'"((?:[^"\\\n\r]|\\.)*)"')
_LANG_RE = re.compile(r"@([a-zA-Z]+(?:-[a-zA-Z0-9]+)*)")

_UNESC = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f",
          '"': '"', "'": "'", "\\": "\\"}


def _unescape(s: str, line: int) -> str:
    out = []
    i, n = 0, len(s)
    while i < n:
        c = s[i]
        if c != "\\":
            out.append(c)
            i += 1
            continue
        if i + 1 >= n:
            raise NTriplesError("dangling escape", line)
        e = s[i + 1]
        if e in _UNESC:
            out.append(_UNESC[e])
            i += 2
        elif e == "u":
            out.append(chr(int(s[i + 2:i + 6], 16)))
            i += 6
        elif e == "U":
            out.append(chr(int(s[i + 2:i + 10], 16)))
            i += 10
        else:
            raise NTriplesError(f"unknown escape \\{e}", line)
    return "".join(out)


class _LineParser:
    def __init__(self, text: str, line_no: int, skolem_base: str) -> None:
        self.text = text
        self.pos = 0
        self.line_no = line_no
        self.skolem_base = skolem_base

    def fail(self, message: str) -> NTriplesError:
        return NTriplesError(message, self.line_no)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def resource(self) -> IriTerm:
        m = _IRI_RE.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            iri = _unescape(m.group(1), self.line_no)
            if not iri or ":" not in iri:
                raise self.fail(f"invalid IRI <{iri}>")
            return IriTerm(iri)
        m = _BNODE_RE.match(self.text, self.pos)
        if m:
            self.pos = m.end()
            return IriTerm(f"{self.skolem_base}{m.group(1)}")
        raise self.fail(f"expected IRI or blank node at column {self.pos + 1}")

    def obj(self) -> Term:
        if self.text[self.pos:self.pos + 1] != '"':
            return self.resource()
        m = _STRING_RE.match(self.text, self.pos)
        if not m:
            raise self.fail("unterminated literal")
        self.pos = m.end()
        lexical = _unescape(m.group(1), self.line_no)
        if self.text[self.pos:self.pos + 2] == "^^":
            self.pos += 2
            dt = _IRI_RE.match(self.text, self.pos)
            if not dt:
                raise self.fail("expected datatype IRI after ^^")
            self.pos = dt.end()
            return Literal(lexical, _unescape(dt.group(1), self.line_no))
        lang = _LANG_RE.match(self.text, self.pos)
        if lang:
            self.pos = lang.end()
            return Literal(lexical, RDF_LANG_STRING, lang.group(1))
        return Literal(lexical, XSD_STRING)

    def end(self) -> None:
        self.skip_ws()
        if self.text[self.pos:self.pos + 1] != ".":
            raise self.fail("expected terminating '.'")
        self.pos += 1
        self.skip_ws()
        if self.pos != len(self.text):
            raise self.fail("trailing content after '.'")


def parse_ntriples(source: str | IO[str]) -> Graph:
    """Parse N-Triples text (or a text stream) into a graph."""
    text = source if isinstance(source, str) else source.read()
    doc_digest = hashlib.sha256(text.encode("utf-8")).hexdigest()[:32]
    skolem_base = f"{SKOLEM_PREFIX}{doc_digest}:"
    graph = Graph()
    for line_no, raw in enumerate(text.split("\n"), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        lp = _LineParser(line, line_no, skolem_base)
        s = lp.resource()
        lp.skip_ws()
        p = lp.resource()
        if not isinstance(p, IriTerm) or p.value.startswith(SKOLEM_PREFIX):
            raise lp.fail("predicate must be an IRI")
        lp.skip_ws()
        o = lp.obj()
        lp.end()
        graph.add(Triple(s, p, o))
    return graph


def _escape(s: str) -> str:
    out = []
    for c in s:
        if c == "\\":
            out.append("\\\\")
        elif c == '"':
            out.append('\\"')
        elif c == "\n":
            out.append("\\n")
        elif c == "\r":
            out.append("\\r")
        elif c == "\t":
            out.append("\\t")
        elif ord(c) < 0x20:
            out.append(f"\\u{ord(c):04X}")
        else:
            out.append(c)
    return "".join(out)


def write_term(t: Term) -> str:
    if isinstance(t, IriTerm):
        return f"<{t.value}>"
    if t.language:
        return f'"{_escape(t.lexical)}"@{t.language}'
    if t.datatype == XSD_STRING:
        return f'"{_escape(t.lexical)}"'
    return f'"{_escape(t.lexical)}"^^<{t.datatype}>'


def serialize_ntriples(triples: Graph | Iterable[Triple]) -> str:
    """Serialize to N-Triples, one line per triple, in canonical order."""
    lines = [
        f"{write_term(t.subject)} {write_term(t.predicate)} {write_term(t.object)} ."
        for t in sorted(triples, key=triple_key)
    ]
    return "\n".join(lines) + ("\n" if lines else "")
