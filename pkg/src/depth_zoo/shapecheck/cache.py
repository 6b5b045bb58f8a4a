"""Per-resolution cache of relative position index tables.

Encoders with relative position biases build an index table for every patch grid
they see. The cache stands in for that table: it stores the table size for each
``(width, height)`` and counts hits and misses.
"""

from __future__ import annotations

import logging
import threading
from typing import NamedTuple

logger = logging.getLogger(__name__)


class CacheStats(NamedTuple):
    entries: int
    hits: int
    misses: int


def position_index_size(grid_h: int, grid_w: int) -> int:
    """Entries of the relative position index for a ``grid_h x grid_w`` patch grid.

    Three extra slots cover class-to-token, token-to-class and class-to-class.

    >>> position_index_size(24, 24)
    2212
    """
    return (2 * grid_h - 1) * (2 * grid_w - 1) + 3


class ResolutionCache:
    """Thread-safe insert-if-absent cache keyed by input resolution."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._tables: dict[tuple[int, int], int] = {}
        self._hits = 0
        self._misses = 0

    def lookup(self, width: int, height: int, grid_h: int, grid_w: int) -> tuple[int, bool]:
        """Return ``(payload, missed)`` for the resolution, building the entry on a miss."""
        key = (width, height)
        with self._lock:
            payload = self._tables.get(key)
            if payload is not None:
                self._hits += 1
                return payload, False
            payload = position_index_size(grid_h, grid_w)
            self._tables[key] = payload
            self._misses += 1
        logger.debug("Position index built for %dx%d (%d entries)", width, height, payload)
        return payload, True

    def __contains__(self, key: object) -> bool:
        with self._lock:
            return key in self._tables

    def stats(self) -> CacheStats:
        with self._lock:
            return CacheStats(len(self._tables), self._hits, self._misses)


def cache_stats(cache: ResolutionCache) -> CacheStats:
    """Current ``(entries, hits, misses)`` of *cache*."""
    return cache.stats()
