"""Minimal RDF machinery: terms, graphs, N-Triples, a SPARQL subset, and
an HTTP endpoint server."""

from .terms import Graph, IriTerm, Literal, Term, Triple, term_key, triple_key

__all__ = [
    "Graph", "IriTerm", "Literal", "Term", "Triple", "term_key", "triple_key",
]
