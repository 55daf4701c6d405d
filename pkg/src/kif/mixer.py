"""Virtual union of stores.

The mixer fans every operation out to its children and merges the results:
filter results are deduplicated by statement content in child order,
annotation sets are unioned per statement, and descriptors come from the
first child that knows the entity. With parallel=True the child calls run
concurrently but the merged stream is identical to the sequential one.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Iterator, Sequence

from . import model as m
from .stores.base import Store, StoreError, StoreOptions

logger = logging.getLogger(__name__)


class MixerChildError(StoreError):
    """A child store failed; carries the child's index and error."""

    def __init__(self, index: int, error: Exception) -> None:
        super().__init__(f"child store #{index}: {error}")
        self.index = index
        self.error = error


class MixerStore(Store):
    def __init__(self, children: Sequence[Store], parallel: bool = False,
                 lenient: bool = False, options: StoreOptions | None = None) -> None:
        super().__init__(options)
        if not children:
            raise ValueError("a mixer needs at least one child store")
        self.children = list(children)
        self.parallel = parallel
        self.lenient = lenient

    # -- child dispatch -------------------------------------------------------

    def _child_results(self, op):
        """Run op(child) for every child, in child order.

        Sequential mode calls children one by one; parallel mode dispatches
        them concurrently and still yields in child order, so both modes
        produce identical streams.
        """
        if self.parallel and len(self.children) > 1:
            with ThreadPoolExecutor(max_workers=len(self.children)) as pool:
                futures = [pool.submit(self._guarded, op, i)
                           for i in range(len(self.children))]
                for future in futures:
                    yield future.result()
        else:
            for i in range(len(self.children)):
                yield self._guarded(op, i)

    def _guarded(self, op, index: int):
        try:
            return op(self.children[index])
        except Exception as e:  # noqa: BLE001 - child failure policy
            if self.lenient:
                logger.warning("mixer: skipping failed child #%d: %s", index, e)
                return None
            raise MixerChildError(index, e) from e

    # -- operations ---------------------------------------------------------------

    def _filter(self, pattern: m.FilterPattern,
                limit: int | None) -> Iterator[m.Statement]:
        seen: set[m.Statement] = set()
        emitted = 0
        # Children resolve fingerprints independently, so each child gets the
        # full pattern; the merge deduplicates by content and applies the
        # limit afterwards.
        for result in self._child_results(lambda c: list(c.filter(pattern))):
            if result is None:
                continue
            for stmt in result:
                if stmt in seen:
                    continue
                seen.add(stmt)
                emitted += 1
                yield stmt
                if limit is not None and emitted >= limit:
                    return

    def _contains(self, stmt: m.Statement) -> bool:
        if self.parallel:
            return any(ok for ok in self._child_results(lambda c: c.contains(stmt)))
        for i in range(len(self.children)):
            if self._guarded(lambda c: c.contains(stmt), i):
                return True
        return False

    def _annotations(self, stmts):
        all_results = list(self._child_results(
            lambda c: [records for _, records in c.get_annotations(stmts)]))
        for pos, stmt in enumerate(stmts):
            merged: set[m.AnnotationRecord] = set()
            for child_records in all_results:
                if child_records is not None:
                    merged |= child_records[pos]
            yield stmt, frozenset(merged)

    def _descriptors(self, entities, language):
        all_results = list(self._child_results(
            lambda c: [desc for _, desc in c.get_descriptor(entities, language)]))
        for pos, entity in enumerate(entities):
            chosen = m.Descriptor()
            for child_descriptors in all_results:
                if child_descriptors is None:
                    continue
                if not child_descriptors[pos].is_empty():
                    chosen = child_descriptors[pos]
                    break
            yield entity, chosen
