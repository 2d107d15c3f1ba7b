"""Single-level object cache simulation under LFU and LRU eviction.

Objects are unit-sized, so capacity is an object count.  LFU evicts the
object with the fewest accesses since it was inserted, breaking ties by
least recent access; counts are forgotten on eviction.
"""
from __future__ import annotations

import csv
import enum
from collections import OrderedDict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exceptions import NonPositiveCapacity

DEFAULT_GRID_POINTS = 16


class CachePolicy(str, enum.Enum):
    LFU = "LFU"
    LRU = "LRU"


class LRUCache:
    def __init__(self, capacity: int):
        if capacity < 1:
            raise NonPositiveCapacity(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._items = OrderedDict()

    def access(self, key) -> bool:
        """Record an access; return True on a hit."""
        items = self._items
        if key in items:
            items.move_to_end(key)
            return True
        if len(items) >= self.capacity:
            items.popitem(last=False)
        items[key] = None
        return False

    def __contains__(self, key):
        return key in self._items

    def __len__(self):
        return len(self._items)

    def keys(self) -> set:
        return set(self._items)


class LFUCache:
    """O(1) LFU: one recency-ordered bucket per access count."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise NonPositiveCapacity(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._freq = {}
        self._buckets = {}
        self._min_freq = 0

    def access(self, key) -> bool:
        f = self._freq.get(key)
        if f is not None:
            bucket = self._buckets[f]
            del bucket[key]
            if not bucket:
                del self._buckets[f]
                if self._min_freq == f:
                    self._min_freq = f + 1
            self._freq[key] = f + 1
            self._buckets.setdefault(f + 1, OrderedDict())[key] = None
            return True
        if len(self._freq) >= self.capacity:
            bucket = self._buckets[self._min_freq]
            victim, _ = bucket.popitem(last=False)
            if not bucket:
                del self._buckets[self._min_freq]
            del self._freq[victim]
        self._freq[key] = 1
        self._buckets.setdefault(1, OrderedDict())[key] = None
        self._min_freq = 1
        return False

    def __contains__(self, key):
        return key in self._freq

    def __len__(self):
        return len(self._freq)

    def keys(self) -> set:
        return set(self._freq)


def make_cache(policy, capacity):
    policy = CachePolicy(policy)
    return LRUCache(capacity) if policy is CachePolicy.LRU else LFUCache(capacity)


@dataclass(frozen=True)
class CacheStats:
    hits: int
    misses: int

    @property
    def hit_rate(self) -> float:
        total = self.hits + self.misses
        return self.hits / total if total else 0.0


@dataclass(frozen=True)
class HitRateCurve:
    policy: CachePolicy
    capacities: tuple
    hit_rates: tuple
    label: str = ""

    @property
    def points(self) -> list:
        return list(zip(self.capacities, self.hit_rates))


def hit_sequence(paths: Sequence, capacity: int, policy=CachePolicy.LRU) -> np.ndarray:
    """Boolean hit/miss outcome of every access."""
    cache = make_cache(policy, capacity)
    access = cache.access
    return np.fromiter((access(p) for p in paths), dtype=bool, count=len(paths))


def simulate(paths: Sequence, capacity: int, policy=CachePolicy.LRU) -> CacheStats:
    hits = int(hit_sequence(paths, capacity, policy).sum())
    return CacheStats(hits, len(paths) - hits)


def default_capacity_grid(paths: Sequence, points=DEFAULT_GRID_POINTS) -> list:
    """Log-spaced capacities from 1 to the number of distinct paths."""
    distinct = len(set(paths))
    if distinct < 1:
        raise ValueError("empty trace has no capacity grid")
    grid = np.unique(np.round(np.geomspace(1, distinct, points)).astype(int))
    return [int(c) for c in grid]


def sweep(paths: Sequence, capacities: Sequence[int], policy=CachePolicy.LRU, *, label="",
          n_jobs=None) -> HitRateCurve:
    """Hit rate at each capacity, each simulated from a cold cache."""
    capacities = [int(c) for c in capacities]
    if not capacities:
        raise ValueError("no capacities given")
    if any(b <= a for a, b in zip(capacities, capacities[1:])):
        raise ValueError("capacities must be strictly increasing")
    if capacities[0] < 1:
        raise NonPositiveCapacity(f"capacity must be >= 1, got {capacities[0]}")
    paths = list(paths)
    policy = CachePolicy(policy)
    if n_jobs is not None and n_jobs != 1:
        from joblib import Parallel, delayed

        stats = Parallel(n_jobs=n_jobs)(delayed(simulate)(paths, c, policy) for c in capacities)
    else:
        stats = [simulate(paths, c, policy) for c in capacities]
    return HitRateCurve(policy, tuple(capacities), tuple(s.hit_rate for s in stats), label)


CURVE_HEADER = ["capacity", "hit_rate", "policy", "trace_label"]


def write_curves_csv(curves, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CURVE_HEADER)
        for c in curves:
            for cap, rate in c.points:
                w.writerow([cap, repr(float(rate)), c.policy.value, c.label])
