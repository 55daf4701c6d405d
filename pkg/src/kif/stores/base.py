"""Store interface: the five query operations over a statement repository.

A store handle may be shared across threads; every operation is safe to
call concurrently, and each returned iterator is single-consumer.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .. import model as m

DEFAULT_PAGE_SIZE = 100
PAGE_SIZE_ENV = "KIF_PAGE_SIZE"


class StoreError(Exception):
    pass


class TransportError(StoreError):
    """Endpoint unreachable or HTTP-level failure."""

    def __init__(self, url: str, detail: str) -> None:
        super().__init__(f"{url}: {detail}")
        self.url = url
        self.detail = detail


def _default_page_size() -> int:
    raw = os.environ.get(PAGE_SIZE_ENV)
    if raw:
        try:
            size = int(raw)
            if size >= 1:
                return size
        except ValueError:
            pass
    return DEFAULT_PAGE_SIZE


@dataclass(frozen=True)
class StoreOptions:
    page_size: int = field(default_factory=_default_page_size)
    cache_enabled: bool = True
    extra_references: tuple[m.ReferenceRecord, ...] = ()
    request_timeout: float = 30.0

    def __post_init__(self) -> None:
        if self.page_size < 1:
            raise ValueError("page_size must be at least 1")
        object.__setattr__(self, "extra_references",
                           tuple(self.extra_references))


class Store:
    """Base store; backends implement the underscored hooks."""

    def __init__(self, options: StoreOptions | None = None) -> None:
        self.options = options or StoreOptions()

    # -- public operations ---------------------------------------------------

    def filter(self, pattern: m.FilterPattern | None = None,
               limit: int | None = None) -> Iterator[m.Statement]:
        """Distinct statements matching *pattern*, at most *limit* of them."""
        if limit is not None and limit < 0:
            raise ValueError("limit must be non-negative")
        if limit == 0:
            return iter(())
        return self._filter(pattern or m.FilterPattern(), limit)

    def count(self, pattern: m.FilterPattern | None = None) -> int:
        """Number of distinct statements matching *pattern*."""
        return sum(1 for _ in self.filter(pattern))

    def contains(self, stmt: m.Statement) -> bool:
        """Whether *stmt* occurs in the store (by content)."""
        return self._contains(stmt)

    def get_annotations(
        self, stmts: Iterable[m.Statement],
    ) -> Iterator[tuple[m.Statement, frozenset[m.AnnotationRecord]]]:
        """Annotation record sets, paired with the statements in input order.

        Configured extra references are appended into each record.
        """
        extra = self.options.extra_references
        for stmt, records in self._annotations(list(stmts)):
            if extra:
                records = frozenset(r.with_extra_references(extra) for r in records)
            yield stmt, records

    def get_descriptor(self, entities: Iterable[m.Entity],
                       language: str = "en") -> Iterator[tuple[m.Entity, m.Descriptor]]:
        """Descriptors restricted to *language*, in input order."""
        return self._descriptors(list(entities), language.lower())

    # -- backend hooks ---------------------------------------------------------

    def _filter(self, pattern: m.FilterPattern,
                limit: int | None) -> Iterator[m.Statement]:
        raise NotImplementedError

    def _contains(self, stmt: m.Statement) -> bool:
        kind = m.snak_kind(stmt.snak)
        pattern = m.FilterPattern(
            subject=m.EntityFp(stmt.subject),
            property=m.EntityFp(stmt.snak.property),
            snak_kinds=frozenset({kind}))
        return any(s == stmt for s in self._filter(pattern, None))

    def _annotations(
        self, stmts: list[m.Statement],
    ) -> Iterator[tuple[m.Statement, frozenset[m.AnnotationRecord]]]:
        raise NotImplementedError

    def _descriptors(self, entities: list[m.Entity],
                     language: str) -> Iterator[tuple[m.Entity, m.Descriptor]]:
        raise NotImplementedError
