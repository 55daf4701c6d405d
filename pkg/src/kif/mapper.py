"""Query-time vocabulary mapping over non-Wikidata-shaped SPARQL sources.

A MappingSpec declares how source entities and predicates correspond to
target (Wikidata-style) entities and properties. The mapper store rewrites
filter patterns source-ward, runs them against the raw source, and rewrites
the results target-ward, so the source looks like one more statement store.
Patterns that mention unmapped properties are unsupported and yield empty
results without touching the source.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Iterator

from . import model as m
from .codec import property_local
from .rdf.ntriples import parse_ntriples
from .rdf.sparql import SelectQuery, TriplePattern, ValuesBlock, Var
from .rdf.terms import Graph, IriTerm, Literal, Term
from .stores.backed import GraphBackend, HttpBackend, Row
from .stores.base import Store, StoreOptions

logger = logging.getLogger(__name__)


class MappingError(ValueError):
    pass


_CAPTURE = "{n}"


@dataclass(frozen=True)
class EntityRule:
    """Bijective IRI rewrite between one source and one target template.

    Each template contains exactly one ``{n}`` capture.
    """

    source_template: str
    target_template: str

    def __post_init__(self) -> None:
        for tpl in (self.source_template, self.target_template):
            if tpl.count(_CAPTURE) != 1:
                raise MappingError(f"template needs exactly one {{n}} capture: {tpl!r}")

    @staticmethod
    def _compile(tpl: str) -> re.Pattern:
        head, tail = tpl.split(_CAPTURE)
        return re.compile(re.escape(head) + "(.+)" + re.escape(tail) + "$")

    def _rewrite(self, iri: str, src: str, dst: str) -> str | None:
        match = self._compile(src).match(iri)
        if not match:
            return None
        return dst.replace(_CAPTURE, match.group(1))

    def to_source(self, iri: str) -> str | None:
        return self._rewrite(iri, self.target_template, self.source_template)

    def to_target(self, iri: str) -> str | None:
        return self._rewrite(iri, self.source_template, self.target_template)


class ValueCodec:
    """Closed family of literal<->value transcoders used by property rules."""

    kind: str

    def encode(self, value: m.Value) -> Term | None:
        raise NotImplementedError

    def decode(self, term: Term) -> m.Value | None:
        raise NotImplementedError

    def spec(self) -> dict:
        return {"kind": self.kind}


@dataclass(frozen=True)
class StringCodec(ValueCodec):
    kind = "string"

    def encode(self, value: m.Value) -> Term | None:
        if isinstance(value, m.StringValue):
            return Literal(value.content)
        return None

    def decode(self, term: Term) -> m.Value | None:
        if isinstance(term, Literal) and not term.language:
            return m.StringValue(term.lexical)
        return None


@dataclass(frozen=True)
class IriCodec(ValueCodec):
    kind = "iri"

    def encode(self, value: m.Value) -> Term | None:
        if isinstance(value, m.Iri):
            return IriTerm(value.value)
        return None

    def decode(self, term: Term) -> m.Value | None:
        if isinstance(term, IriTerm):
            return m.Iri(term.value)
        return None


@dataclass(frozen=True)
class DecimalQuantityCodec(ValueCodec):
    unit: m.Item | None = None
    kind = "decimal-quantity"

    def encode(self, value: m.Value) -> Term | None:
        if isinstance(value, m.Quantity) and value.unit == self.unit \
                and value.lower is None and value.upper is None:
            return Literal(m.decimal_lexical(value.amount),
                           "http://www.w3.org/2001/XMLSchema#decimal")
        return None

    def decode(self, term: Term) -> m.Value | None:
        if not isinstance(term, Literal) or term.language:
            return None
        try:
            return m.Quantity(Decimal(term.lexical), self.unit)
        except (InvalidOperation, m.ModelError, ValueError):
            return None

    def spec(self) -> dict:
        out = {"kind": self.kind}
        if self.unit is not None:
            out["unit"] = self.unit.iri.value
        return out


@dataclass(frozen=True)
class TextCodec(ValueCodec):
    language: str = "en"
    kind = "text"

    def encode(self, value: m.Value) -> Term | None:
        if isinstance(value, m.TextValue) and value.language == self.language:
            return Literal(value.content, language=value.language)
        return None

    def decode(self, term: Term) -> m.Value | None:
        if isinstance(term, Literal):
            return m.TextValue(term.lexical, term.language or self.language)
        return None

    def spec(self) -> dict:
        return {"kind": self.kind, "language": self.language}


def _codec_from_spec(spec: dict) -> ValueCodec:
    kind = spec.get("kind")
    if kind == "string":
        return StringCodec()
    if kind == "iri":
        return IriCodec()
    if kind == "decimal-quantity":
        unit = spec.get("unit")
        return DecimalQuantityCodec(m.Item(unit) if unit else None)
    if kind == "text":
        return TextCodec(spec.get("language", "en"))
    raise MappingError(f"unknown value codec kind {kind!r}")


@dataclass(frozen=True)
class PropertyRule:
    property: m.Property
    source_predicate: str
    codec: ValueCodec

    def __post_init__(self) -> None:
        property_local(self.property)  # must be an encodable target property


@dataclass(frozen=True)
class MappingSpec:
    name: str
    entity_rules: tuple[EntityRule, ...] = ()
    property_rules: tuple[PropertyRule, ...] = ()
    label_predicate: str | None = None

    def __post_init__(self) -> None:
        seen = set()
        for rule in self.property_rules:
            key = rule.property.iri.value
            if key in seen:
                raise MappingError(f"duplicate rule for target property {key}")
            seen.add(key)

    def rule_for(self, prop: m.Property) -> PropertyRule | None:
        for rule in self.property_rules:
            if rule.property == prop:
                return rule
        return None

    def rule_for_predicate(self, predicate: str) -> PropertyRule | None:
        for rule in self.property_rules:
            if rule.source_predicate == predicate:
                return rule
        return None

    def entity_to_source(self, iri: str) -> str | None:
        for rule in self.entity_rules:
            out = rule.to_source(iri)
            if out is not None:
                return out
        return None

    def entity_to_target(self, iri: str) -> str:
        for rule in self.entity_rules:
            out = rule.to_target(iri)
            if out is not None:
                return out
        return iri

    # -- JSON form ------------------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "MappingSpec":
        entity_rules = tuple(
            EntityRule(r["source"], r["target"])
            for r in data.get("entity_rules", []))
        property_rules = tuple(
            PropertyRule(m.Property(r["property"]), r["source_predicate"],
                         _codec_from_spec(r.get("codec", {"kind": "string"})))
            for r in data.get("property_rules", []))
        return cls(data.get("name", "mapping"), entity_rules, property_rules,
                   data.get("label_predicate"))

    @classmethod
    def load(cls, path: str) -> "MappingSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out: dict = {
            "name": self.name,
            "entity_rules": [{"source": r.source_template, "target": r.target_template}
                             for r in self.entity_rules],
            "property_rules": [{"property": r.property.iri.value,
                                "source_predicate": r.source_predicate,
                                "codec": r.codec.spec()}
                               for r in self.property_rules],
        }
        if self.label_predicate:
            out["label_predicate"] = self.label_predicate
        return out


# ---------------------------------------------------------------------------
# Pattern translation
# ---------------------------------------------------------------------------

_SUBJECT = Var("s")
_PREDICATE = Var("p")
_OBJECT = Var("v")


def _source_entity_term(spec: MappingSpec, entity: m.Entity) -> IriTerm | None:
    rewritten = spec.entity_to_source(entity.iri.value)
    return IriTerm(rewritten) if rewritten is not None else None


def _fingerprint_patterns(spec: MappingSpec, fp: m.Fingerprint, var: Var,
                          patterns: list[TriplePattern]) -> bool:
    """Append source patterns expressing *fp* on *var*; False if unmappable."""
    snaks = (fp.snak,) if isinstance(fp, m.SnakFp) else fp.snaks
    for snak in snaks:
        if not isinstance(snak, m.ValueSnak):
            return False
        rule = spec.rule_for(snak.property)
        if rule is None:
            return False
        encoded = rule.codec.encode(snak.value)
        if encoded is None:
            return False
        patterns.append(TriplePattern(var, IriTerm(rule.source_predicate), encoded))
    return True


def translate_pattern(spec: MappingSpec,
                      pattern: m.FilterPattern) -> SelectQuery | None:
    """Compile *pattern* to one source query, or None when unsupported."""
    if m.SnakKind.VALUE not in pattern.snak_kinds:
        return None  # plain sources carry value claims only

    patterns: list[TriplePattern] = []
    if isinstance(pattern.subject, m.EntityFp):
        subject_slot: IriTerm | Var = (
            _source_entity_term(spec, pattern.subject.entity) or _UNMAPPED)
        if subject_slot is _UNMAPPED:
            return None
    else:
        subject_slot = _SUBJECT
        if pattern.subject is not None:
            if not _fingerprint_patterns(spec, pattern.subject, _SUBJECT, patterns):
                return None

    values: ValuesBlock | None = None
    if pattern.property is not None:
        assert isinstance(pattern.property, m.EntityFp)
        prop = pattern.property.entity
        if not isinstance(prop, m.Property):
            return None
        rule = spec.rule_for(prop)
        if rule is None:
            return None
        predicate_slot: IriTerm | Var = IriTerm(rule.source_predicate)
        rules = [rule]
    else:
        if not spec.property_rules:
            return None
        predicate_slot = _PREDICATE
        preds = sorted(r.source_predicate for r in spec.property_rules)
        values = ValuesBlock("p", tuple(IriTerm(p) for p in preds))
        rules = list(spec.property_rules)

    if isinstance(pattern.value, m.EntityFp):
        # Entity values reach the source as IRIs; only iri-coded rules can
        # carry them. With a wildcard property the other rules simply never
        # match the constant.
        if not any(isinstance(rule.codec, IriCodec) for rule in rules):
            return None
        src = (spec.entity_to_source(pattern.value.entity.iri.value)
               or pattern.value.entity.iri.value)
        object_slot: Term | Var = IriTerm(src)
    else:
        object_slot = _OBJECT
        if pattern.value is not None:
            if not _fingerprint_patterns(spec, pattern.value, _OBJECT, patterns):
                return None

    patterns.insert(0, TriplePattern(subject_slot, predicate_slot, object_slot))
    projected = []
    for slot, name in ((subject_slot, "s"), (predicate_slot, "p"), (object_slot, "v")):
        if isinstance(slot, Var):
            projected.append(slot.name)
    if not projected:
        # All constants: project the subject through VALUES so row count
        # signals presence.
        assert isinstance(subject_slot, IriTerm)
        return SelectQuery(("s",), tuple(patterns),
                           values=ValuesBlock("s", (subject_slot,)))
    return SelectQuery(tuple(projected), tuple(patterns), values=values)


_UNMAPPED = IriTerm("urn:x-unmapped:sentinel")


def translate_results(spec: MappingSpec, rows: list[Row],
                      fixed_subject: IriTerm | None = None,
                      fixed_rule: PropertyRule | None = None,
                      fixed_value: m.Value | None = None) -> Iterator[m.Statement]:
    """Rewrite source rows to target statements; malformed rows are skipped.

    Slots that were compiled to constants do not come back in the bindings,
    so the caller passes them in as fixed values.
    """
    for row in rows:
        subject_term = fixed_subject if fixed_subject is not None else row.get("s")
        if not isinstance(subject_term, IriTerm):
            continue
        if fixed_rule is not None:
            rule = fixed_rule
        else:
            pred = row.get("p")
            rule = (spec.rule_for_predicate(pred.value)
                    if isinstance(pred, IriTerm) else None)
            if rule is None:
                continue
        if fixed_value is not None:
            value: m.Value | None = fixed_value
        else:
            obj = row.get("v")
            if obj is None:
                continue
            value = rule.codec.decode(obj)
            if value is None:
                logger.warning("mapping %s: cannot decode %r via %s codec; row skipped",
                               spec.name, obj, rule.codec.kind)
                continue
        subject = m.Item(spec.entity_to_target(subject_term.value))
        yield m.Statement(subject, m.ValueSnak(rule.property, value))


class MapperStore(Store):
    """Present a raw SPARQL source as a Wikidata-shaped store via a mapping."""

    def __init__(self, source, spec: MappingSpec,
                 options: StoreOptions | None = None) -> None:
        super().__init__(options)
        self.spec = spec
        if isinstance(source, (GraphBackend, HttpBackend)):
            self._backend = source
        elif isinstance(source, Graph):
            self._backend = GraphBackend(source)
        elif isinstance(source, str) and source.startswith(("http://", "https://")):
            self._backend = HttpBackend(source, self.options.request_timeout)
        elif isinstance(source, str):
            with open(source, "r", encoding="utf-8") as fh:
                self._backend = GraphBackend(parse_ntriples(fh))
        else:
            raise MappingError(f"cannot build a source backend from {source!r}")

    @property
    def request_count(self) -> int:
        return self._backend.request_count

    def _paged(self, query: SelectQuery) -> Iterator[Row]:
        size = self.options.page_size
        offset = 0
        while True:
            page = self._backend.select(query.with_page(size, offset))
            yield from page
            if len(page) < size:
                return
            offset += size

    def _filter(self, pattern: m.FilterPattern,
                limit: int | None) -> Iterator[m.Statement]:
        query = translate_pattern(self.spec, pattern)
        if query is None:
            return
        fixed_subject = None
        if isinstance(pattern.subject, m.EntityFp):
            src = self.spec.entity_to_source(pattern.subject.entity.iri.value)
            fixed_subject = IriTerm(src) if src else None
        fixed_rule = None
        if pattern.property is not None:
            assert isinstance(pattern.property, m.EntityFp)
            fixed_rule = self.spec.rule_for(pattern.property.entity)
        fixed_value = (pattern.value.entity
                       if isinstance(pattern.value, m.EntityFp) else None)
        seen: set[m.Statement] = set()
        emitted = 0
        rows = list(self._paged(query))
        for stmt in translate_results(self.spec, rows, fixed_subject,
                                      fixed_rule, fixed_value):
            if stmt in seen:
                continue
            seen.add(stmt)
            emitted += 1
            yield stmt
            if limit is not None and emitted >= limit:
                return

    def _contains(self, stmt: m.Statement) -> bool:
        if not isinstance(stmt.snak, m.ValueSnak):
            return False
        rule = self.spec.rule_for(stmt.snak.property)
        if rule is None:
            return False
        pattern = m.FilterPattern(subject=m.EntityFp(stmt.subject),
                                  property=m.EntityFp(stmt.snak.property))
        return any(s == stmt for s in self._filter(pattern, None))

    def _annotations(self, stmts):
        for stmt in stmts:
            if self._contains(stmt):
                yield stmt, frozenset({m.AnnotationRecord()})
            else:
                yield stmt, frozenset()

    def _descriptors(self, entities, language):
        found: dict[str, list[m.TextValue]] = {}
        if self.spec.label_predicate:
            sources = {}
            for entity in entities:
                src = self.spec.entity_to_source(entity.iri.value)
                if src:
                    sources.setdefault(src, entity.iri.value)
            if sources:
                terms = tuple(IriTerm(s) for s in sorted(sources))
                query = SelectQuery(
                    ("e", "x"),
                    (TriplePattern(Var("e"), IriTerm(self.spec.label_predicate),
                                   Var("x")),),
                    values=ValuesBlock("e", terms))
                for row in self._paged(query):
                    e, x = row.get("e"), row.get("x")
                    if not isinstance(e, IriTerm) or not isinstance(x, Literal):
                        continue
                    text = m.TextValue(x.lexical, x.language or language)
                    if text.language != language:
                        continue
                    found.setdefault(sources[e.value], []).append(text)
        for entity in entities:
            labels = found.get(entity.iri.value, [])
            yield entity, m.Descriptor(
                label=min(labels, key=m.canonical_key, default=None))
