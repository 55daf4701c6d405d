"""Bidirectional codec between statements and the Wikidata RDF dialect.

Encoding emits the two-level representation: a shallow truthy triple per
non-deprecated statement, and a reified statement node carrying the full
content (deep values, qualifiers, references, rank, best-rank marker).
Reified node IRIs are content digests, so encoding is deterministic and
stable across runs.

The module also compiles filter patterns and the annotation/descriptor
protocols into the SPARQL subset understood by the embedded evaluator and
by Wikidata-compatible endpoints.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Mapping

from . import model as m
from . import namespaces as ns
from . import sexpr
from .namespaces import WIKIDATA
from .rdf.sparql import SelectQuery, TriplePattern, ValuesBlock, Var
from .rdf.terms import Graph, IriTerm, Literal, Term, term_key

logger = logging.getLogger(__name__)


class CodecError(ValueError):
    pass


# ---------------------------------------------------------------------------
# IRI helpers
# ---------------------------------------------------------------------------

def property_local(prop: m.Property) -> str:
    """Local name of a property under the entity namespace (e.g. 'P166')."""
    local = WIKIDATA.local(prop.iri.value, "wd")
    if not local or not local.startswith("P"):
        raise CodecError(
            f"property {prop.iri.value!r} cannot be encoded: property IRIs must "
            f"live in the wd: namespace with a local name starting with 'P'")
    return local


def entity_from_iri(iri: str) -> m.Entity:
    """Entity for an IRI occurring in subject position."""
    local = WIKIDATA.local(iri, "wd")
    if local and local.startswith("P"):
        return m.Property(iri)
    return m.Item(iri)


def _lift_iri_value(iri: str) -> m.Value:
    local = WIKIDATA.local(iri, "wd")
    if local:
        if local.startswith("Q"):
            return m.Item(iri)
        if local.startswith("P"):
            return m.Property(iri)
    return m.Iri(iri)


def lift_value(term: Term) -> m.Value:
    """Lift a simple RDF term to a value (the documented lifting table).

    Decimal/integer literals become unit-less quantities; dateTime literals
    become day-precision times (second precision when a time of day is
    present, so that re-simplifying is idempotent); language-tagged literals
    become texts; anything else becomes a string.
    """
    if isinstance(term, IriTerm):
        return _lift_iri_value(term.value)
    if term.language:
        return m.TextValue(term.lexical, term.language)
    if term.datatype in (ns.XSD_DECIMAL, ns.XSD_INTEGER):
        try:
            return m.Quantity(Decimal(term.lexical))
        except Exception:
            return m.StringValue(term.lexical)
    if term.datatype == ns.XSD_DATE_TIME:
        try:
            ts = m.Timestamp.parse(term.lexical)
        except m.ModelError:
            return m.StringValue(term.lexical)
        precision = (m.PRECISION_SECOND if (ts.hour, ts.minute, ts.second) != (0, 0, 0)
                     else m.PRECISION_DAY)
        return m.TimeValue(ts, precision, 0, None)
    return m.StringValue(term.lexical)


def canonical_object_term(term: Term) -> Term:
    """Canonicalize a value-slot term so equivalent lexical forms compare equal."""
    if isinstance(term, IriTerm):
        return term
    if term.datatype in (ns.XSD_DECIMAL, ns.XSD_INTEGER):
        try:
            return Literal(m.decimal_lexical(Decimal(term.lexical)), ns.XSD_DECIMAL)
        except Exception:
            return term
    if term.datatype == ns.XSD_DATE_TIME:
        try:
            return Literal(m.Timestamp.parse(term.lexical).lexical(), ns.XSD_DATE_TIME)
        except m.ModelError:
            return term
    return term


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def statement_genid(stmt: m.Statement) -> IriTerm:
    """Deterministic unknown-value node for a statement's main snak."""
    return IriTerm(ns.WDGENID + _digest(sexpr.dumps(stmt)))


def _snak_genid(snak: m.Snak) -> IriTerm:
    return IriTerm(ns.WDGENID + _digest(sexpr.dumps(snak)))


def statement_node(stmt: m.Statement, ann: m.AnnotationRecord) -> IriTerm:
    combined = sexpr.dumps(m.AnnotatedStatement(stmt, (ann,)))
    return IriTerm(ns.WDS + _digest(combined))


def value_node(value: m.Value) -> IriTerm:
    return IriTerm(ns.WDV + _digest(sexpr.dumps(value)))


def reference_node(ref: m.ReferenceRecord) -> IriTerm:
    return IriTerm(ns.WDREF + _digest(sexpr.dumps(ref)))


# ---------------------------------------------------------------------------
# Encoding
# ---------------------------------------------------------------------------

@dataclass(frozen=True, slots=True)
class EncodedStatement:
    """A statement with one annotation record and its best-rank flag."""

    statement: m.Statement
    annotation: m.AnnotationRecord = field(default_factory=m.AnnotationRecord)
    best: bool = True


_RESERVED_VALUE_BASES = (ns.WDGENID, ns.WDNO)


def _check_value_encodable(v: m.Value) -> None:
    if isinstance(v, m.Entity):
        local = WIKIDATA.local(v.iri.value, "wd")
        want = "Q" if isinstance(v, m.Item) else "P"
        if not local or not local.startswith(want):
            raise CodecError(
                f"entity value {v.iri.value!r} cannot be encoded: entity values "
                f"must live in the wd: namespace with a local name starting "
                f"with {want!r}")
    elif isinstance(v, m.Iri):
        for base in _RESERVED_VALUE_BASES:
            if v.value.startswith(base):
                raise CodecError(f"IRI value {v.value!r} is in a reserved namespace")
        local = WIKIDATA.local(v.value, "wd")
        if local and local[:1] in ("Q", "P"):
            raise CodecError(
                f"IRI value {v.value!r} is ambiguous with an entity; use an "
                f"Item or Property value instead")


def _check_subject_encodable(e: m.Entity) -> None:
    local = WIKIDATA.local(e.iri.value, "wd")
    if local:
        want = "Q" if isinstance(e, m.Item) else "P"
        if not local.startswith(want):
            raise CodecError(
                f"subject {e.iri.value!r} conflicts with its entity kind; "
                f"wd-namespace locals must start with {want!r}")
    elif not isinstance(e, m.Item):
        raise CodecError(
            f"property subject {e.iri.value!r} must live in the wd: namespace")


def _check_snak_encodable(snak: m.Snak) -> None:
    property_local(snak.property)
    if isinstance(snak, m.ValueSnak):
        _check_value_encodable(snak.value)


def _deep_value_triples(node: IriTerm, v: m.Value) -> list:
    from .rdf.terms import Triple

    out = []
    if isinstance(v, m.Quantity):
        out.append(Triple(node, IriTerm(ns.WIKIBASE_QUANTITY_AMOUNT),
                          Literal(m.decimal_lexical(v.amount), ns.XSD_DECIMAL)))
        if v.unit is not None:
            out.append(Triple(node, IriTerm(ns.WIKIBASE_QUANTITY_UNIT),
                              IriTerm(v.unit.iri.value)))
        if v.lower is not None:
            out.append(Triple(node, IriTerm(ns.WIKIBASE_QUANTITY_LOWER),
                              Literal(m.decimal_lexical(v.lower), ns.XSD_DECIMAL)))
        if v.upper is not None:
            out.append(Triple(node, IriTerm(ns.WIKIBASE_QUANTITY_UPPER),
                              Literal(m.decimal_lexical(v.upper), ns.XSD_DECIMAL)))
    elif isinstance(v, m.TimeValue):
        out.append(Triple(node, IriTerm(ns.WIKIBASE_TIME_VALUE),
                          Literal(v.timestamp.lexical(), ns.XSD_DATE_TIME)))
        out.append(Triple(node, IriTerm(ns.WIKIBASE_TIME_PRECISION),
                          Literal(str(v.precision), ns.XSD_INTEGER)))
        out.append(Triple(node, IriTerm(ns.WIKIBASE_TIME_TIMEZONE),
                          Literal(str(v.timezone), ns.XSD_INTEGER)))
        if v.calendar is not None:
            out.append(Triple(node, IriTerm(ns.WIKIBASE_TIME_CALENDAR),
                              IriTerm(v.calendar.iri.value)))
    else:
        raise CodecError(f"not a deep value: {v!r}")
    return out


_RANK_IRI = {
    m.Rank.PREFERRED: ns.WIKIBASE_PREFERRED_RANK,
    m.Rank.NORMAL: ns.WIKIBASE_NORMAL_RANK,
    m.Rank.DEPRECATED: ns.WIKIBASE_DEPRECATED_RANK,
}
_IRI_RANK = {v: k for k, v in _RANK_IRI.items()}


def _encode_snak_at(subject: IriTerm, snak: m.Snak, simple_base: str,
                    deep_base: str, triples: list) -> None:
    """Emit *snak* on *subject* using a qualifier/reference predicate family."""
    from .rdf.terms import Triple

    local = property_local(snak.property)
    pred = IriTerm(simple_base + local)
    if isinstance(snak, m.ValueSnak):
        triples.append(Triple(subject, pred, m.simple_value(snak.value)))
        if m.is_deep(snak.value):
            node = value_node(snak.value)
            triples.append(Triple(subject, IriTerm(deep_base + local), node))
            triples.extend(_deep_value_triples(node, snak.value))
    elif isinstance(snak, m.SomeValueSnak):
        triples.append(Triple(subject, pred, _snak_genid(snak)))
    else:
        triples.append(Triple(subject, pred, IriTerm(ns.WDNO + local)))


def encode(es: EncodedStatement) -> set:
    """Encode one statement (with its annotation) into RDF triples."""
    from .rdf.terms import Triple

    stmt, ann = es.statement, es.annotation
    _check_subject_encodable(stmt.subject)
    _check_snak_encodable(stmt.snak)
    for q in ann.qualifiers:
        _check_snak_encodable(q)
    for ref in ann.references:
        for s in ref.snaks:
            _check_snak_encodable(s)

    subj = IriTerm(stmt.subject.iri.value)
    local = property_local(stmt.snak.property)
    wds = statement_node(stmt, ann)
    triples: list = [Triple(subj, IriTerm(ns.P + local), wds)]

    truthy = ann.rank is not m.Rank.DEPRECATED
    if isinstance(stmt.snak, m.ValueSnak):
        sv = m.simple_value(stmt.snak.value)
        triples.append(Triple(wds, IriTerm(ns.PS + local), sv))
        if truthy:
            triples.append(Triple(subj, IriTerm(ns.WDT + local), sv))
        if m.is_deep(stmt.snak.value):
            node = value_node(stmt.snak.value)
            triples.append(Triple(wds, IriTerm(ns.PSV + local), node))
            triples.extend(_deep_value_triples(node, stmt.snak.value))
    elif isinstance(stmt.snak, m.SomeValueSnak):
        genid = statement_genid(stmt)
        triples.append(Triple(wds, IriTerm(ns.PS + local), genid))
        if truthy:
            triples.append(Triple(subj, IriTerm(ns.WDT + local), genid))
    else:
        triples.append(Triple(wds, IriTerm(ns.RDF_TYPE), IriTerm(ns.WDNO + local)))

    for q in ann.qualifiers:
        _encode_snak_at(wds, q, ns.PQ, ns.PQV, triples)
    for ref in ann.references:
        node = reference_node(ref)
        triples.append(Triple(wds, IriTerm(ns.PROV_WAS_DERIVED_FROM), node))
        for s in ref.snaks:
            _encode_snak_at(node, s, ns.PR, ns.PRV, triples)

    triples.append(Triple(wds, IriTerm(ns.WIKIBASE_RANK), IriTerm(_RANK_IRI[ann.rank])))
    if es.best:
        if ann.rank is m.Rank.DEPRECATED:
            raise CodecError("a deprecated statement cannot carry the best-rank marker")
        triples.append(Triple(wds, IriTerm(ns.RDF_TYPE), IriTerm(ns.WIKIBASE_BEST_RANK)))
    return set(triples)


Pair = tuple[m.Statement, m.AnnotationRecord]


def best_flags(pairs: Iterable[Pair]) -> list[EncodedStatement]:
    """Attach best-rank flags: a statement is best when it is not deprecated
    and no co-(subject, property) statement in the batch outranks it."""
    pairs = list(pairs)
    top: dict[tuple, int] = {}
    for stmt, ann in pairs:
        key = (m.canonical_key(stmt.subject), m.canonical_key(stmt.snak.property))
        top[key] = max(top.get(key, -1), ann.rank.priority)
    out = []
    for stmt, ann in pairs:
        key = (m.canonical_key(stmt.subject), m.canonical_key(stmt.snak.property))
        best = ann.rank is not m.Rank.DEPRECATED and ann.rank.priority >= top[key]
        out.append(EncodedStatement(stmt, ann, best))
    return out


def encode_statements(pairs: Iterable[Pair]) -> Graph:
    graph = Graph()
    for es in best_flags(pairs):
        graph.update(encode(es))
    return graph


def encode_descriptors(descriptors: Mapping[m.Entity, m.Descriptor]) -> Graph:
    from .rdf.terms import Triple

    graph = Graph()
    for entity, desc in descriptors.items():
        subj = IriTerm(entity.iri.value)
        if desc.label is not None:
            graph.add(Triple(subj, IriTerm(ns.RDFS_LABEL),
                             Literal(desc.label.content, language=desc.label.language)))
        if desc.description is not None:
            graph.add(Triple(subj, IriTerm(ns.SCHEMA_DESCRIPTION),
                             Literal(desc.description.content,
                                     language=desc.description.language)))
        for alias in desc.aliases:
            graph.add(Triple(subj, IriTerm(ns.SKOS_ALT_LABEL),
                             Literal(alias.content, language=alias.language)))
    return graph


def encode_dataset(pairs: Iterable[Pair],
                   descriptors: Mapping[m.Entity, m.Descriptor] | None = None) -> Graph:
    graph = encode_statements(pairs)
    if descriptors:
        graph.update(encode_descriptors(descriptors))
    return graph


def truthy_graph(pairs: Iterable[Pair]) -> Graph:
    """Only the shallow level: one direct-property triple per visible claim."""
    from .rdf.terms import Triple

    graph = Graph()
    for stmt, ann in pairs:
        if ann.rank is m.Rank.DEPRECATED:
            continue
        local = property_local(stmt.snak.property)
        subj = IriTerm(stmt.subject.iri.value)
        if isinstance(stmt.snak, m.ValueSnak):
            graph.add(Triple(subj, IriTerm(ns.WDT + local), m.simple_value(stmt.snak.value)))
        elif isinstance(stmt.snak, m.SomeValueSnak):
            graph.add(Triple(subj, IriTerm(ns.WDT + local), statement_genid(stmt)))
    return graph


# ---------------------------------------------------------------------------
# Decoding (assembly shared by decode() and the query-backed stores)
# ---------------------------------------------------------------------------

def read_deep_value(g: Graph, node: IriTerm, diagnostics: list[str]) -> m.Value | None:
    amounts = g.objects(node, IriTerm(ns.WIKIBASE_QUANTITY_AMOUNT))
    times = g.objects(node, IriTerm(ns.WIKIBASE_TIME_VALUE))
    try:
        if amounts:
            lex = min((a for a in amounts if isinstance(a, Literal)),
                      key=term_key, default=None)
            if lex is None:
                raise m.ModelError("quantity amount is not a literal")
            unit_t = next(iter(g.objects(node, IriTerm(ns.WIKIBASE_QUANTITY_UNIT))), None)
            lower_t = next(iter(g.objects(node, IriTerm(ns.WIKIBASE_QUANTITY_LOWER))), None)
            upper_t = next(iter(g.objects(node, IriTerm(ns.WIKIBASE_QUANTITY_UPPER))), None)
            return m.Quantity(
                Decimal(lex.lexical),
                m.Item(unit_t.value) if isinstance(unit_t, IriTerm) else None,
                Decimal(lower_t.lexical) if isinstance(lower_t, Literal) else None,
                Decimal(upper_t.lexical) if isinstance(upper_t, Literal) else None)
        if times:
            lex = min((t for t in times if isinstance(t, Literal)),
                      key=term_key, default=None)
            if lex is None:
                raise m.ModelError("time value is not a literal")
            prec_t = next(iter(g.objects(node, IriTerm(ns.WIKIBASE_TIME_PRECISION))), None)
            tz_t = next(iter(g.objects(node, IriTerm(ns.WIKIBASE_TIME_TIMEZONE))), None)
            cal_t = next(iter(g.objects(node, IriTerm(ns.WIKIBASE_TIME_CALENDAR))), None)
            return m.TimeValue(
                m.Timestamp.parse(lex.lexical),
                int(prec_t.lexical) if isinstance(prec_t, Literal) else m.PRECISION_DAY,
                int(tz_t.lexical) if isinstance(tz_t, Literal) else 0,
                m.Item(cal_t.value) if isinstance(cal_t, IriTerm) else None)
    except (m.ModelError, ValueError, ArithmeticError) as e:
        diagnostics.append(f"malformed deep value node {node.value}: {e}")
        return None
    diagnostics.append(f"deep value node {node.value} has no amount or time value")
    return None


def _snak_from_object(prop: m.Property, obj: Term, g: Graph,
                      deep_node: IriTerm | None, diagnostics: list[str]) -> m.Snak | None:
    if isinstance(obj, IriTerm):
        if obj.value.startswith(ns.WDGENID):
            return m.SomeValueSnak(prop)
        if obj.value.startswith(ns.WDNO):
            return m.NoValueSnak(prop)
    if deep_node is not None:
        value = read_deep_value(g, deep_node, diagnostics)
        if value is None:
            return None
        return m.ValueSnak(prop, value)
    return m.ValueSnak(prop, lift_value(obj))


def _assemble_snak_family(g: Graph, node: IriTerm, simple_base: str, deep_base: str,
                          diagnostics: list[str]) -> list[m.Snak]:
    simple: dict[str, list[Term]] = {}
    deep: dict[str, list[IriTerm]] = {}
    for t in g.match(s=node):
        pred = t.predicate.value
        if pred.startswith(deep_base):
            local = pred[len(deep_base):]
            if local and "/" not in local and isinstance(t.object, IriTerm):
                deep.setdefault(local, []).append(t.object)
        elif pred.startswith(simple_base):
            local = pred[len(simple_base):]
            if local and "/" not in local:
                simple.setdefault(local, []).append(t.object)
    snaks: list[m.Snak] = []
    for local in sorted(set(simple) | set(deep)):
        prop = m.Property(ns.WD + local)
        covered: set[tuple] = set()
        for node_t in sorted(deep.get(local, []), key=term_key):
            value = read_deep_value(g, node_t, diagnostics)
            if value is None:
                continue
            covered.add(term_key(m.simple_value(value)))
            snaks.append(m.ValueSnak(prop, value))
        for obj in sorted(simple.get(local, []), key=term_key):
            if term_key(canonical_object_term(obj)) in covered:
                continue
            snak = _snak_from_object(prop, obj, g, None, diagnostics)
            if snak is not None:
                snaks.append(snak)
    return snaks


def assemble_main_snak(g: Graph, wds: IriTerm, plocal: str,
                       diagnostics: list[str]) -> m.Snak | None:
    prop = m.Property(ns.WD + plocal)
    for obj in g.objects(wds, IriTerm(ns.RDF_TYPE)):
        if isinstance(obj, IriTerm) and obj.value == ns.WDNO + plocal:
            return m.NoValueSnak(prop)
    ps_objects = sorted(g.objects(wds, IriTerm(ns.PS + plocal)), key=term_key)
    if not ps_objects:
        diagnostics.append(
            f"statement node {wds.value} has a p:{plocal} link but no ps:{plocal} value")
        return None
    if len(ps_objects) > 1:
        diagnostics.append(f"statement node {wds.value} has multiple ps:{plocal} values")
    obj = ps_objects[0]
    deep_nodes = [o for o in g.objects(wds, IriTerm(ns.PSV + plocal))
                  if isinstance(o, IriTerm)]
    deep_node = min(deep_nodes, key=term_key) if deep_nodes else None
    return _snak_from_object(prop, obj, g, deep_node, diagnostics)


def assemble_annotation(g: Graph, wds: IriTerm,
                        diagnostics: list[str]) -> m.AnnotationRecord:
    qualifiers = _assemble_snak_family(g, wds, ns.PQ, ns.PQV, diagnostics)
    references = []
    for obj in sorted(g.objects(wds, IriTerm(ns.PROV_WAS_DERIVED_FROM)), key=term_key):
        if not isinstance(obj, IriTerm):
            diagnostics.append(f"reference of {wds.value} is not a node: {obj!r}")
            continue
        snaks = _assemble_snak_family(g, obj, ns.PR, ns.PRV, diagnostics)
        if not snaks:
            diagnostics.append(f"reference node {obj.value} is empty; skipped")
            continue
        references.append(m.ReferenceRecord(snaks))
    rank = m.Rank.NORMAL
    for obj in g.objects(wds, IriTerm(ns.WIKIBASE_RANK)):
        if isinstance(obj, IriTerm) and obj.value in _IRI_RANK:
            rank = _IRI_RANK[obj.value]
            break
    return m.AnnotationRecord(qualifiers, references, rank)


def is_best(g: Graph, wds: IriTerm) -> bool:
    return any(isinstance(o, IriTerm) and o.value == ns.WIKIBASE_BEST_RANK
               for o in g.objects(wds, IriTerm(ns.RDF_TYPE)))


@dataclass
class DecodeResult:
    statements: list[EncodedStatement]
    descriptors: dict[m.Entity, m.Descriptor]
    diagnostics: list[str] = field(default_factory=list)


def decode(g: Graph) -> DecodeResult:
    """Inverse of encoding on well-formed graphs.

    Statements carried only by a truthy triple decode with a default-Normal
    annotation; malformed reification fragments are skipped and reported in
    the diagnostics.
    """
    diagnostics: list[str] = []
    statements: list[EncodedStatement] = []
    covered_truthy: set[tuple] = set()

    for t in g:
        plocal = WIKIDATA.local(t.predicate.value, "p")
        if plocal is None or not isinstance(t.object, IriTerm):
            continue
        wds = t.object
        snak = assemble_main_snak(g, wds, plocal, diagnostics)
        if snak is None:
            continue
        subject = entity_from_iri(t.subject.value)
        stmt = m.Statement(subject, snak)
        ann = assemble_annotation(g, wds, diagnostics)
        statements.append(EncodedStatement(stmt, ann, is_best(g, wds)))
        for obj in g.objects(wds, IriTerm(ns.PS + plocal)):
            covered_truthy.add((t.subject.value, plocal,
                                term_key(canonical_object_term(obj))))

    for t in g:
        plocal = WIKIDATA.local(t.predicate.value, "wdt")
        if plocal is None:
            continue
        key = (t.subject.value, plocal, term_key(canonical_object_term(t.object)))
        if key in covered_truthy:
            continue
        prop = m.Property(ns.WD + plocal)
        snak = _snak_from_object(prop, t.object, g, None, diagnostics)
        if snak is None:
            continue
        stmt = m.Statement(entity_from_iri(t.subject.value), snak)
        statements.append(EncodedStatement(stmt, m.AnnotationRecord(), True))

    statements.sort(key=lambda es: (m.canonical_key(es.statement),
                                    m.canonical_key(es.annotation)))

    labels: dict[str, list[m.TextValue]] = {}
    descs: dict[str, list[m.TextValue]] = {}
    aliases: dict[str, list[m.TextValue]] = {}
    for t in g:
        pred = t.predicate.value
        target = (labels if pred == ns.RDFS_LABEL
                  else descs if pred == ns.SCHEMA_DESCRIPTION
                  else aliases if pred == ns.SKOS_ALT_LABEL else None)
        if target is None or not isinstance(t.object, Literal):
            continue
        text = m.TextValue(t.object.lexical, t.object.language or "en")
        target.setdefault(t.subject.value, []).append(text)

    descriptors: dict[m.Entity, m.Descriptor] = {}
    for iri in sorted(set(labels) | set(descs) | set(aliases)):
        entity = entity_from_iri(iri)
        descriptors[entity] = m.Descriptor(
            label=min(labels.get(iri, []), key=m.canonical_key, default=None),
            description=min(descs.get(iri, []), key=m.canonical_key, default=None),
            aliases=tuple(sorted(aliases.get(iri, []), key=m.canonical_key)))
    return DecodeResult(statements, descriptors, diagnostics)


# ---------------------------------------------------------------------------
# Query compilation
# ---------------------------------------------------------------------------

def _fp_snaks(fp: m.Fingerprint) -> tuple[m.Snak, ...]:
    if isinstance(fp, m.SnakFp):
        return (fp.snak,)
    if isinstance(fp, m.SnakSetFp):
        return fp.snaks
    raise m.FingerprintError(f"unsupported fingerprint: {fp!r}")


def _aux_patterns(fp: m.Fingerprint, var: Var, counter: list[int]) -> list[TriplePattern]:
    """Fingerprint snaks become truthy-level auxiliary patterns on *var*."""
    patterns = []
    for snak in _fp_snaks(fp):
        if not isinstance(snak, m.ValueSnak):
            raise m.FingerprintError(
                "fingerprint snaks must be value snaks; cannot compile "
                f"{type(snak).__name__}")
        local = property_local(snak.property)
        patterns.append(TriplePattern(var, IriTerm(ns.WDT + local),
                                      m.simple_value(snak.value)))
        counter[0] += 1
    return patterns


@dataclass(frozen=True)
class FilterPlan:
    """One compiled query plus how to read its rows.

    shape: 'full' rows carry statement nodes; 'novalue' rows carry
    no-value statement nodes; 'truthy' rows carry direct triples.
    """

    shape: str
    query: SelectQuery
    subject_term: IriTerm | None
    property_local: str | None
    object_term: Term | None = None


def _subject_slot(pattern: m.FilterPattern, patterns: list, counter: list[int]):
    if isinstance(pattern.subject, m.EntityFp):
        return IriTerm(pattern.subject.entity.iri.value), None
    svar = Var("s")
    if pattern.subject is not None:
        patterns.extend(_aux_patterns(pattern.subject, svar, counter))
    return None, svar


def _value_slot(pattern: m.FilterPattern, patterns: list, counter: list[int],
                object_term: Term | None):
    if object_term is not None:
        return object_term, None
    if isinstance(pattern.value, m.EntityFp):
        return IriTerm(pattern.value.entity.iri.value), None
    vvar = Var("v")
    if pattern.value is not None:
        patterns.extend(_aux_patterns(pattern.value, vvar, counter))
    return None, vvar


def _property_local_of(pattern: m.FilterPattern) -> str | None:
    if pattern.property is None:
        return None
    assert isinstance(pattern.property, m.EntityFp)
    entity = pattern.property.entity
    if not isinstance(entity, m.Property):
        raise m.FingerprintError("property fingerprint must hold a Property entity")
    return property_local(entity)


def _finish(patterns: list[TriplePattern], projected: list[Var],
            subject_const: IriTerm | None, limit, offset) -> SelectQuery:
    names = []
    seen = set()
    for var in projected:
        if var is not None and var.name not in seen:
            names.append(var.name)
            seen.add(var.name)
    values = None
    if not names:
        # All slots constant: bind the subject through VALUES so the
        # projection is non-empty and the row count signals presence.
        values = ValuesBlock("s", (subject_const,))
        names = ["s"]
    return SelectQuery(tuple(names), tuple(patterns), distinct=False,
                       values=values, limit=limit, offset=offset)


def compile_truthy_plan(pattern: m.FilterPattern, object_term: Term | None = None,
                        limit: int | None = None, offset: int | None = None) -> FilterPlan:
    patterns: list[TriplePattern] = []
    counter = [0]
    s_const, s_var = _subject_slot(pattern, patterns, counter)
    o_const, o_var = _value_slot(pattern, patterns, counter, object_term)
    plocal = _property_local_of(pattern)
    p_slot = IriTerm(ns.WDT + plocal) if plocal else Var("p")
    main = TriplePattern(s_const or s_var, p_slot, o_const if o_const is not None else o_var)
    patterns.insert(0, main)
    p_var = None if plocal else Var("p")
    query = _finish(patterns, [s_var, p_var, o_var], s_const, limit, offset)
    return FilterPlan("truthy", query, s_const, plocal, o_const)


def compile_full_plan(pattern: m.FilterPattern, object_term: Term | None = None,
                      limit: int | None = None, offset: int | None = None) -> FilterPlan:
    patterns: list[TriplePattern] = []
    counter = [0]
    s_const, s_var = _subject_slot(pattern, patterns, counter)
    o_const, o_var = _value_slot(pattern, patterns, counter, object_term)
    plocal = _property_local_of(pattern)
    wvar = Var("w")
    link = IriTerm(ns.P + plocal) if plocal else Var("p")
    value_pred = IriTerm(ns.PS + plocal) if plocal else Var("q")
    patterns.insert(0, TriplePattern(wvar, value_pred,
                                     o_const if o_const is not None else o_var))
    patterns.insert(0, TriplePattern(s_const or s_var, link, wvar))
    p_var = None if plocal else Var("p")
    q_var = None if plocal else Var("q")
    query = _finish(patterns, [s_var, p_var, wvar, q_var, o_var], s_const, limit, offset)
    return FilterPlan("full", query, s_const, plocal, o_const)


def compile_novalue_plan(pattern: m.FilterPattern,
                         limit: int | None = None, offset: int | None = None) -> FilterPlan:
    patterns: list[TriplePattern] = []
    counter = [0]
    s_const, s_var = _subject_slot(pattern, patterns, counter)
    plocal = _property_local_of(pattern)
    wvar = Var("w")
    link = IriTerm(ns.P + plocal) if plocal else Var("p")
    marker = IriTerm(ns.WDNO + plocal) if plocal else Var("n")
    patterns.insert(0, TriplePattern(wvar, IriTerm(ns.RDF_TYPE), marker))
    patterns.insert(0, TriplePattern(s_const or s_var, link, wvar))
    p_var = None if plocal else Var("p")
    n_var = None if plocal else Var("n")
    query = _finish(patterns, [s_var, p_var, wvar, n_var], s_const, limit, offset)
    return FilterPlan("novalue", query, s_const, plocal)


def compile_filter(pattern: m.FilterPattern, level: str = "truthy",
                   limit: int | None = None, offset: int | None = None) -> SelectQuery:
    """Compile a filter pattern to one SELECT query at the given level.

    The truthy level targets direct-property triples; the full level targets
    the reified statement shape. No-value claims need the companion query
    from compile_novalue_plan, which keeps each query inside the subset.
    """
    if level == "truthy":
        return compile_truthy_plan(pattern, None, limit, offset).query
    if level == "full":
        return compile_full_plan(pattern, None, limit, offset).query
    raise ValueError(f"unknown compilation level {level!r}")


def statement_resolution_plan(stmt: m.Statement) -> FilterPlan:
    """Query resolving the statement nodes that carry *stmt* (protocol step 1)."""
    local = property_local(stmt.snak.property)
    subj = IriTerm(stmt.subject.iri.value)
    wvar = Var("w")
    patterns = [TriplePattern(subj, IriTerm(ns.P + local), wvar)]
    if isinstance(stmt.snak, m.ValueSnak):
        patterns.append(TriplePattern(wvar, IriTerm(ns.PS + local),
                                      m.simple_value(stmt.snak.value)))
    elif isinstance(stmt.snak, m.SomeValueSnak):
        patterns.append(TriplePattern(wvar, IriTerm(ns.PS + local),
                                      statement_genid(stmt)))
    else:
        patterns.append(TriplePattern(wvar, IriTerm(ns.RDF_TYPE),
                                      IriTerm(ns.WDNO + local)))
    query = SelectQuery(("w",), tuple(patterns))
    return FilterPlan("resolve", query, subj, local)


def compile_annotations(stmts: Iterable[m.Statement]) -> list[SelectQuery]:
    """Step-1 queries of the annotation protocol, one per statement.

    Follow-up node-fetch queries (node_fetch_query) depend on the resolved
    statement nodes, which keeps every query inside the SPARQL subset.
    """
    return [statement_resolution_plan(s).query for s in stmts]


def node_fetch_query(nodes: Iterable[IriTerm]) -> SelectQuery:
    """Fetch all triples of the given nodes in one query via VALUES."""
    terms = tuple(sorted(nodes, key=term_key))
    return SelectQuery(
        ("w", "p", "o"),
        (TriplePattern(Var("w"), Var("p"), Var("o")),),
        values=ValuesBlock("w", terms))


_DESCRIPTOR_PREDICATES = {
    "label": ns.RDFS_LABEL,
    "description": ns.SCHEMA_DESCRIPTION,
    "alias": ns.SKOS_ALT_LABEL,
}


def descriptor_query(entities: Iterable[m.Entity], which: str) -> SelectQuery:
    pred = _DESCRIPTOR_PREDICATES[which]
    terms = tuple(IriTerm(e.iri.value) for e in entities)
    return SelectQuery(
        ("e", "x"),
        (TriplePattern(Var("e"), IriTerm(pred), Var("x")),),
        values=ValuesBlock("e", terms))
