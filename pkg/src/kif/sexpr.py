"""S-expression reader and printer for the statement model.

The textual grammar (documented in docs/sexpr-grammar.md) covers values,
snaks, statements, reference/annotation records, descriptors, fingerprints,
and filter patterns. ``parse`` accepts both full IRI forms like
``(Item (IRI "http://..."))`` and compact prefixed tokens like ``wd:Q2270``;
``dumps`` produces canonical text whose re-parse yields an equal object.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Iterator

from . import model as m
from .namespaces import WIKIDATA, NamespaceError

LPAREN = "lparen"
RPAREN = "rparen"
SYMBOL = "symbol"
STRING = "string"
NUMBER = "number"
_EOF = "eof"


class SexprError(ValueError):
    """Syntax or structure error with a 1-based line/column position."""

    def __init__(self, message: str, line: int, column: int) -> None:
        super().__init__(f"{line}:{column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True, slots=True)
class SexprToken:
    kind: str
    lexeme: str
    line: int
    column: int


_DELIMS = set(' \t\r\n()"')
_ESCAPES = {"n": "\n", "t": "\t", "r": "\r", '"': '"', "\\": "\\"}
_UNESCAPES = {"\n": "\\n", "\t": "\\t", "\r": "\\r", '"': '\\"', "\\": "\\\\"}


def tokenize(text: str) -> Iterator[SexprToken]:
    i, line, col = 0, 1, 1
    n = len(text)
    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if c == "(":
            yield SexprToken(LPAREN, "(", line, col)
            i += 1
            col += 1
            continue
        if c == ")":
            yield SexprToken(RPAREN, ")", line, col)
            i += 1
            col += 1
            continue
        if c == '"':
            start_line, start_col = line, col
            i += 1
            col += 1
            out: list[str] = []
            while True:
                if i >= n:
                    raise SexprError("unterminated string", start_line, start_col)
                c = text[i]
                if c == '"':
                    i += 1
                    col += 1
                    break
                if c == "\\":
                    if i + 1 >= n:
                        raise SexprError("unterminated escape", line, col)
                    e = text[i + 1]
                    if e in _ESCAPES:
                        out.append(_ESCAPES[e])
                        i += 2
                        col += 2
                    elif e == "u":
                        hexs = text[i + 2:i + 6]
                        if len(hexs) != 4 or any(h not in "0123456789abcdefABCDEF" for h in hexs):
                            raise SexprError("bad \\u escape", line, col)
                        out.append(chr(int(hexs, 16)))
                        i += 6
                        col += 6
                    else:
                        raise SexprError(f"unknown escape \\{e}", line, col)
                elif c == "\n":
                    out.append(c)
                    i += 1
                    line += 1
                    col = 1
                else:
                    out.append(c)
                    i += 1
                    col += 1
            yield SexprToken(STRING, "".join(out), start_line, start_col)
            continue
        start_line, start_col = line, col
        j = i
        while j < n and text[j] not in _DELIMS:
            j += 1
        lexeme = text[i:j]
        col += j - i
        i = j
        if m._DECIMAL_RE.match(lexeme):
            yield SexprToken(NUMBER, lexeme, start_line, start_col)
        else:
            yield SexprToken(SYMBOL, lexeme, start_line, start_col)
    yield SexprToken(_EOF, "", line, col)


_RANK_SYMBOLS = {
    "Preferred": m.Rank.PREFERRED, "PreferredRank": m.Rank.PREFERRED,
    "Normal": m.Rank.NORMAL, "NormalRank": m.Rank.NORMAL,
    "Deprecated": m.Rank.DEPRECATED, "DeprecatedRank": m.Rank.DEPRECATED,
}

_KIND_SYMBOLS = {
    "ValueSnak": m.SnakKind.VALUE,
    "SomeValueSnak": m.SnakKind.SOME_VALUE,
    "NoValueSnak": m.SnakKind.NO_VALUE,
}


class _Parser:
    def __init__(self, text: str, namespaces=WIKIDATA) -> None:
        self._tokens = list(tokenize(text))
        self._pos = 0
        self._ns = namespaces

    def _peek(self) -> SexprToken:
        return self._tokens[self._pos]

    def _next(self) -> SexprToken:
        tok = self._tokens[self._pos]
        if tok.kind != _EOF:
            self._pos += 1
        return tok

    def _fail(self, message: str, tok: SexprToken) -> SexprError:
        return SexprError(message, tok.line, tok.column)

    def at_eof(self) -> bool:
        return self._peek().kind == _EOF

    # A prefixed token is an entity when its local name starts with Q or P;
    # any other prefixed token denotes a plain IRI. Timestamps and the bare
    # snak-kind symbols used inside (SnakMask ...) are resolved here too.
    def _expand_symbol(self, tok: SexprToken) -> object:
        if tok.lexeme == "*":
            return None
        if tok.lexeme in _RANK_SYMBOLS:
            return _RANK_SYMBOLS[tok.lexeme]
        if tok.lexeme in _KIND_SYMBOLS:
            return _KindSymbol(_KIND_SYMBOLS[tok.lexeme])
        if m._TS_RE.match(tok.lexeme):
            return tok.lexeme
        if ":" in tok.lexeme:
            try:
                iri = self._ns.expand(tok.lexeme)
            except NamespaceError as e:
                raise self._fail(str(e), tok) from None
            local = tok.lexeme.split(":", 1)[1]
            try:
                if local.startswith("Q"):
                    return m.Item(iri)
                if local.startswith("P"):
                    return m.Property(iri)
                return m.Iri(iri)
            except m.ModelError as e:
                raise self._fail(str(e), tok) from None
        raise self._fail(f"unexpected symbol {tok.lexeme!r}", tok)

    def parse_object(self) -> object:
        tok = self._next()
        if tok.kind == SYMBOL:
            return self._expand_symbol(tok)
        if tok.kind == LPAREN:
            return self._parse_form(tok)
        if tok.kind == _EOF:
            raise self._fail("unexpected end of input", tok)
        if tok.kind == RPAREN:
            raise self._fail("unexpected )", tok)
        raise self._fail(f"unexpected {tok.kind} {tok.lexeme!r}", tok)

    def _collect_args(self, open_tok: SexprToken) -> list[tuple[object, SexprToken]]:
        args = []
        while True:
            tok = self._peek()
            if tok.kind == RPAREN:
                self._next()
                return args
            if tok.kind == _EOF:
                raise self._fail("missing ) for form opened here", open_tok)
            if tok.kind == NUMBER:
                self._next()
                args.append((Decimal(tok.lexeme), tok))
            elif tok.kind == STRING:
                self._next()
                args.append((tok.lexeme, tok))
            else:
                args.append((self.parse_object(), tok))
        # not reached

    def _parse_form(self, open_tok: SexprToken) -> object:
        head = self._next()
        if head.kind != SYMBOL:
            raise self._fail("form must start with a head symbol", head)
        args = self._collect_args(open_tok)
        try:
            return self._build(head, args, open_tok)
        except m.ModelError as e:
            raise self._fail(str(e), open_tok) from None

    # -- per-head builders --------------------------------------------------

    def _arity(self, head: SexprToken, args: list, lo: int, hi: int | None) -> None:
        if len(args) < lo or (hi is not None and len(args) > hi):
            want = f"{lo}" if hi == lo else (f"{lo}+" if hi is None else f"{lo}..{hi}")
            raise self._fail(
                f"({head.lexeme} ...) takes {want} arguments, got {len(args)}", head)

    def _want(self, typ, val, tok: SexprToken, what: str):
        if not isinstance(val, typ):
            raise self._fail(f"expected {what}, got {val!r}", tok)
        return val

    def _want_int(self, val, tok: SexprToken, what: str) -> int:
        d = self._want(Decimal, val, tok, what)
        if d != d.to_integral_value():
            raise self._fail(f"expected integer {what}, got {d}", tok)
        return int(d)

    def _build(self, head: SexprToken, args: list, open_tok: SexprToken) -> object:
        name = head.lexeme
        build = getattr(self, "_build_" + name, None)
        if build is None:
            raise self._fail(f"unknown head symbol {name!r}", head)
        return build(head, args)

    def _build_IRI(self, head, args):
        self._arity(head, args, 1, 1)
        val, tok = args[0]
        if isinstance(val, m.Iri):
            return val
        return m.Iri(self._want(str, val, tok, "an IRI string"))

    def _entity_iri(self, head, args) -> m.Iri:
        self._arity(head, args, 1, 1)
        val, tok = args[0]
        if isinstance(val, m.Iri):
            return val
        if isinstance(val, m.Entity):
            return val.iri
        raise self._fail("expected an (IRI ...) form or prefixed name", tok)

    def _build_Item(self, head, args):
        return m.Item(self._entity_iri(head, args))

    def _build_Property(self, head, args):
        return m.Property(self._entity_iri(head, args))

    def _build_Text(self, head, args):
        self._arity(head, args, 1, 2)
        content = self._want(str, args[0][0], args[0][1], "a string")
        if len(args) == 2:
            lang, tok = args[1]
            if not isinstance(lang, str):
                raise self._fail("language tag must be a string", tok)
            return m.TextValue(content, lang)
        return m.TextValue(content)

    def _build_String(self, head, args):
        self._arity(head, args, 1, 1)
        return m.StringValue(self._want(str, args[0][0], args[0][1], "a string"))

    def _build_Quantity(self, head, args):
        self._arity(head, args, 1, 4)
        amount = self._want(Decimal, args[0][0], args[0][1], "a decimal amount")
        rest = args[1:]
        unit = None
        if rest and (rest[0][0] is None or isinstance(rest[0][0], m.Item)):
            unit = rest[0][0]
            rest = rest[1:]
        bounds: list[Decimal | None] = []
        for val, tok in rest:
            if val is not None and not isinstance(val, Decimal):
                raise self._fail(f"expected a decimal bound or *, got {val!r}", tok)
            bounds.append(val)
        if len(bounds) > 2:
            raise self._fail("too many quantity bounds", head)
        bounds += [None] * (2 - len(bounds))
        return m.Quantity(amount, unit, bounds[0], bounds[1])

    def _build_Time(self, head, args):
        self._arity(head, args, 1, 4)
        ts_raw, ts_tok = args[0]
        if isinstance(ts_raw, Decimal):
            raise self._fail("timestamp must be a date like 1903-01-01", ts_tok)
        if isinstance(ts_raw, str):
            ts = m.Timestamp.parse(ts_raw)
        else:
            raise self._fail(f"expected a timestamp, got {ts_raw!r}", ts_tok)
        rest = args[1:]
        ints: list[int | None] = []
        while rest and (rest[0][0] is None or isinstance(rest[0][0], Decimal)):
            val, tok = rest.pop(0)
            ints.append(None if val is None else self._want_int(val, tok, "field"))
            if len(ints) > 2:
                raise self._fail("too many integer fields in (Time ...)", head)
        calendar = None
        if rest:
            val, tok = rest.pop(0)
            if val is not None and not isinstance(val, m.Item):
                raise self._fail(f"calendar must be an item, got {val!r}", tok)
            calendar = val
        if rest:
            raise self._fail("trailing arguments in (Time ...)", head)
        ints += [None] * (2 - len(ints))
        precision = m.PRECISION_DAY if ints[0] is None else ints[0]
        timezone = 0 if ints[1] is None else ints[1]
        return m.TimeValue(ts, precision, timezone, calendar)

    def _snak_property(self, args, idx=0) -> m.Property:
        val, tok = args[idx]
        if not isinstance(val, m.Property):
            raise self._fail(f"expected a property, got {val!r}", tok)
        return val

    def _build_ValueSnak(self, head, args):
        self._arity(head, args, 2, 2)
        prop = self._snak_property(args)
        val, tok = args[1]
        if isinstance(val, Decimal):
            val = m.Quantity(val)
        elif isinstance(val, str):
            val = m.StringValue(val)
        if not isinstance(val, m.Value):
            raise self._fail(f"expected a value, got {val!r}", tok)
        return m.ValueSnak(prop, val)

    def _build_SomeValueSnak(self, head, args):
        self._arity(head, args, 1, 1)
        return m.SomeValueSnak(self._snak_property(args))

    def _build_NoValueSnak(self, head, args):
        self._arity(head, args, 1, 1)
        return m.NoValueSnak(self._snak_property(args))

    def _build_Statement(self, head, args):
        self._arity(head, args, 2, 2)
        subj, stok = args[0]
        snak, ktok = args[1]
        if not isinstance(subj, m.Entity):
            raise self._fail(f"expected an entity subject, got {subj!r}", stok)
        if not isinstance(snak, m.Snak):
            raise self._fail(f"expected a snak, got {snak!r}", ktok)
        return m.Statement(subj, snak)

    def _snaks(self, args, what) -> list[m.Snak]:
        out = []
        for val, tok in args:
            if not isinstance(val, m.Snak):
                raise self._fail(f"expected a snak in {what}, got {val!r}", tok)
            out.append(val)
        return out

    def _build_ReferenceRecord(self, head, args):
        self._arity(head, args, 1, None)
        return m.ReferenceRecord(self._snaks(args, "(ReferenceRecord ...)"))

    def _build_SnakSet(self, head, args):
        return _SnakSetForm(tuple(self._snaks(args, "(SnakSet ...)")))

    def _build_ReferenceRecordSet(self, head, args):
        out = []
        for val, tok in args:
            if not isinstance(val, m.ReferenceRecord):
                raise self._fail(f"expected a reference record, got {val!r}", tok)
            out.append(val)
        return _ReferenceRecordSetForm(tuple(out))

    def _build_AnnotationRecord(self, head, args):
        self._arity(head, args, 3, 3)
        snakset, stok = args[0]
        refset, rtok = args[1]
        rank, ktok = args[2]
        if not isinstance(snakset, _SnakSetForm):
            raise self._fail("expected a (SnakSet ...) of qualifiers", stok)
        if not isinstance(refset, _ReferenceRecordSetForm):
            raise self._fail("expected a (ReferenceRecordSet ...)", rtok)
        if not isinstance(rank, m.Rank):
            raise self._fail(f"expected a rank, got {rank!r}", ktok)
        return m.AnnotationRecord(snakset.snaks, refset.records, rank)

    def _build_AnnotationRecordSet(self, head, args):
        out = []
        for val, tok in args:
            if not isinstance(val, m.AnnotationRecord):
                raise self._fail(f"expected an annotation record, got {val!r}", tok)
            out.append(val)
        return _AnnotationRecordSetForm(tuple(out))

    def _build_AnnotatedStatement(self, head, args):
        self._arity(head, args, 1, None)
        stmt, stok = args[0]
        if not isinstance(stmt, m.Statement):
            raise self._fail(f"expected a statement, got {stmt!r}", stok)
        anns: list[m.AnnotationRecord] = []
        for val, tok in args[1:]:
            if isinstance(val, m.AnnotationRecord):
                anns.append(val)
            elif isinstance(val, _AnnotationRecordSetForm):
                anns.extend(val.records)
            else:
                raise self._fail(f"expected annotation records, got {val!r}", tok)
        return m.AnnotatedStatement(stmt, anns)

    def _opt_text(self, val, tok) -> m.TextValue | None:
        if val is None:
            return None
        if not isinstance(val, m.TextValue):
            raise self._fail(f"expected (Text ...) or *, got {val!r}", tok)
        return val

    def _build_Descriptor(self, head, args):
        self._arity(head, args, 2, None)
        label = self._opt_text(*args[0])
        description = self._opt_text(*args[1])
        aliases = []
        for val, tok in args[2:]:
            if not isinstance(val, m.TextValue):
                raise self._fail(f"expected a (Text ...) alias, got {val!r}", tok)
            aliases.append(val)
        return m.Descriptor(label, description, tuple(aliases))

    def _build_EntityDescriptor(self, head, args):
        self._arity(head, args, 2, 2)
        ent, etok = args[0]
        desc, dtok = args[1]
        if not isinstance(ent, m.Entity):
            raise self._fail(f"expected an entity, got {ent!r}", etok)
        if not isinstance(desc, m.Descriptor):
            raise self._fail(f"expected a descriptor, got {desc!r}", dtok)
        return m.EntityDescriptor(ent, desc)

    def _fingerprint(self, val, tok) -> m.Fingerprint | None:
        if val is None:
            return None
        if isinstance(val, m.Entity):
            return m.EntityFp(val)
        if isinstance(val, m.Snak):
            return m.SnakFp(val)
        if isinstance(val, _SnakSetForm):
            return m.SnakSetFp(val.snaks)
        raise self._fail(f"expected a fingerprint or *, got {val!r}", tok)

    def _build_SnakMask(self, head, args):
        kinds = set()
        for val, tok in args:
            if isinstance(val, _KindSymbol):
                kinds.add(val.kind)
            else:
                raise self._fail(f"expected a snak kind symbol, got {val!r}", tok)
        return _SnakMaskForm(frozenset(kinds))

    def _build_FilterPattern(self, head, args):
        self._arity(head, args, 3, 4)
        subject = self._fingerprint(*args[0])
        prop = self._fingerprint(*args[1])
        value = self._fingerprint(*args[2])
        kinds = m.ALL_SNAK_KINDS
        if len(args) == 4:
            mask, tok = args[3]
            if not isinstance(mask, _SnakMaskForm):
                raise self._fail("expected a (SnakMask ...)", tok)
            kinds = mask.kinds
        return m.FilterPattern(subject, prop, value, kinds)


# Snak-kind symbols inside (SnakMask ...) collide with snak head symbols, so
# the mask builder parses them specially through a token-level hook.
@dataclass(frozen=True)
class _KindSymbol:
    kind: m.SnakKind


@dataclass(frozen=True)
class _SnakMaskForm:
    kinds: frozenset[m.SnakKind]


@dataclass(frozen=True)
class _SnakSetForm:
    snaks: tuple[m.Snak, ...]


@dataclass(frozen=True)
class _ReferenceRecordSetForm:
    records: tuple[m.ReferenceRecord, ...]


@dataclass(frozen=True)
class _AnnotationRecordSetForm:
    records: tuple[m.AnnotationRecord, ...]


def parse(text: str, namespaces=WIKIDATA) -> object:
    """Parse exactly one object from *text*."""
    parser = _Parser(text, namespaces)
    obj = _parse_top(parser)
    if not parser.at_eof():
        tok = parser._peek()
        raise SexprError("trailing content after object", tok.line, tok.column)
    return obj


def parse_many(text: str, namespaces=WIKIDATA) -> list[object]:
    """Parse a whole stream of objects (fixture files)."""
    parser = _Parser(text, namespaces)
    out = []
    while not parser.at_eof():
        out.append(_parse_top(parser))
    return out


def _parse_top(parser: _Parser) -> object:
    obj = parser.parse_object()
    if isinstance(obj, _SnakSetForm):
        return m.SnakSetFp(obj.snaks)
    if isinstance(obj, _ReferenceRecordSetForm):
        return tuple(obj.records)
    if isinstance(obj, _AnnotationRecordSetForm):
        return tuple(obj.records)
    if obj is None:
        raise SexprError("* is not an object", 1, 1)
    return obj


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------

def _escape(s: str) -> str:
    out = []
    for c in s:
        if c in _UNESCAPES:
            out.append(_UNESCAPES[c])
        elif ord(c) < 0x20:
            out.append(f"\\u{ord(c):04x}")
        else:
            out.append(c)
    return '"' + "".join(out) + '"'


_COMPACT_LOCAL_OK = frozenset(
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789_-.")


def _compact_entity(e: m.Entity, ns) -> str | None:
    local = ns.local(e.iri.value, "wd")
    if local is None or not set(local) <= _COMPACT_LOCAL_OK:
        return None
    want = "Q" if isinstance(e, m.Item) else "P"
    if not local.startswith(want):
        return None
    return f"wd:{local}"


def dumps(x: object, compact: bool = False, namespaces=WIKIDATA) -> str:
    """Canonical single-line serialization; sets print in canonical order.

    Compact mode abbreviates wd-namespace entities to prefixed tokens.
    """
    ns = namespaces

    def go(x: object) -> str:
        if isinstance(x, m.Iri):
            return f'(IRI {_escape(x.value)})'
        if isinstance(x, m.Entity):
            if compact:
                short = _compact_entity(x, ns)
                if short:
                    return short
            head = "Item" if isinstance(x, m.Item) else "Property"
            return f'({head} (IRI {_escape(x.iri.value)}))'
        if isinstance(x, m.TextValue):
            return f'(Text {_escape(x.content)} {_escape(x.language)})'
        if isinstance(x, m.StringValue):
            return f'(String {_escape(x.content)})'
        if isinstance(x, m.Quantity):
            parts = ["Quantity", m.decimal_lexical(x.amount)]
            if x.unit is not None:
                parts.append(go(x.unit))
            elif x.upper is not None and x.lower is None:
                parts.append("*")
            if x.lower is not None:
                parts.append(m.decimal_lexical(x.lower))
            elif x.upper is not None:
                parts.append("*")
            if x.upper is not None:
                parts.append(m.decimal_lexical(x.upper))
            return "(" + " ".join(parts) + ")"
        if isinstance(x, m.TimeValue):
            ts = (x.timestamp.date_lexical() if x.precision <= m.PRECISION_DAY
                  else x.timestamp.lexical())
            parts = ["Time", ts, str(x.precision), str(x.timezone)]
            if x.calendar is not None:
                parts.append(go(x.calendar))
            return "(" + " ".join(parts) + ")"
        if isinstance(x, m.ValueSnak):
            return f'(ValueSnak {go(x.property)} {go(x.value)})'
        if isinstance(x, m.SomeValueSnak):
            return f'(SomeValueSnak {go(x.property)})'
        if isinstance(x, m.NoValueSnak):
            return f'(NoValueSnak {go(x.property)})'
        if isinstance(x, m.Statement):
            return f'(Statement {go(x.subject)} {go(x.snak)})'
        if isinstance(x, m.ReferenceRecord):
            inner = " ".join(go(s) for s in x.snaks)
            return f'(ReferenceRecord {inner})'
        if isinstance(x, m.Rank):
            return {m.Rank.PREFERRED: "PreferredRank", m.Rank.NORMAL: "NormalRank",
                    m.Rank.DEPRECATED: "DeprecatedRank"}[x]
        if isinstance(x, m.AnnotationRecord):
            quals = " ".join(go(q) for q in x.qualifiers)
            refs = " ".join(go(r) for r in x.references)
            qs = f"(SnakSet {quals})" if quals else "(SnakSet)"
            rs = f"(ReferenceRecordSet {refs})" if refs else "(ReferenceRecordSet)"
            return f'(AnnotationRecord {qs} {rs} {go(x.rank)})'
        if isinstance(x, m.AnnotatedStatement):
            parts = ["AnnotatedStatement", go(x.statement)]
            parts.extend(go(a) for a in x.annotations)
            return "(" + " ".join(parts) + ")"
        if isinstance(x, m.Descriptor):
            parts = ["Descriptor",
                     go(x.label) if x.label else "*",
                     go(x.description) if x.description else "*"]
            parts.extend(go(a) for a in x.aliases)
            return "(" + " ".join(parts) + ")"
        if isinstance(x, m.EntityDescriptor):
            return f'(EntityDescriptor {go(x.entity)} {go(x.descriptor)})'
        if isinstance(x, m.EntityFp):
            return go(x.entity)
        if isinstance(x, m.SnakFp):
            return go(x.snak)
        if isinstance(x, m.SnakSetFp):
            return "(SnakSet " + " ".join(go(s) for s in x.snaks) + ")"
        if isinstance(x, m.FilterPattern):
            kinds = sorted(x.snak_kinds, key=lambda k: k.value)
            names = {m.SnakKind.VALUE: "ValueSnak", m.SnakKind.SOME_VALUE: "SomeValueSnak",
                     m.SnakKind.NO_VALUE: "NoValueSnak"}
            mask = "(SnakMask " + " ".join(names[k] for k in kinds) + ")"
            return ("(FilterPattern "
                    + (go(x.subject) if x.subject else "*") + " "
                    + (go(x.property) if x.property else "*") + " "
                    + (go(x.value) if x.value else "*") + " "
                    + mask + ")")
        raise m.ModelError(f"cannot serialize {x!r}")

    return go(x)
