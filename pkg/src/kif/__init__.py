"""Virtual knowledge integration over Wikidata-shaped statement stores.

The package exposes a faithful statement data model, an S-expression
syntax for it, a codec for the Wikidata RDF dialect, composable stores
(memory, embedded graph, SPARQL endpoint, mapper, mixer), a SPARQL-to-
filter decoder, and a CLI with an offline-testable endpoint server.
"""

from .codec import EncodedStatement, decode as decode_rdf, encode, encode_dataset
from .mapper import EntityRule, MapperStore, MappingSpec, PropertyRule
from .mixer import MixerStore
from .model import (AnnotationRecord, Descriptor, EntityFp, FilterPattern, Iri,
                    Item, Property, Quantity, Rank, ReferenceRecord, SnakFp,
                    SnakKind, SnakSetFp, SomeValueSnak, Statement, StringValue,
                    TextValue, TimeValue, NoValueSnak, ValueSnak)
from .stores import (MemoryStore, RdfStore, SparqlStore, Store, StoreOptions,
                     TransportError)

__version__ = "0.1.0"

__all__ = [
    "AnnotationRecord", "Descriptor", "EncodedStatement", "EntityFp",
    "EntityRule", "FilterPattern", "Iri", "Item", "MapperStore", "MappingSpec",
    "MemoryStore", "MixerStore", "NoValueSnak", "Property", "PropertyRule",
    "Quantity", "Rank", "RdfStore", "ReferenceRecord", "SnakFp", "SnakKind",
    "SnakSetFp", "SomeValueSnak", "SparqlStore", "Statement", "Store",
    "StoreOptions", "StringValue", "TextValue", "TimeValue", "TransportError",
    "ValueSnak", "decode_rdf", "encode", "encode_dataset",
]
