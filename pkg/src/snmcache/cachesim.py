"""Trace-driven LRU cache evaluation.

Besides a direct LRU simulation, the module computes per-request reuse
distances (the number of distinct contents referenced since the previous
request for the same content, counting the content itself).  A request
is an LRU hit at capacity C iff its distance is <= C, so one distance
pass yields the exact hit probability at every capacity at once.  The
distance kernel maintains last-occurrence marks in a Fenwick tree
(logarithmic updates/queries per request) and is JIT-compiled when
numba is available.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

import numpy as np

from .trace import Trace

__all__ = [
    "LruResult",
    "simulate_lru",
    "reuse_distances",
    "hit_curve",
    "size_for_hit_prob",
    "compare_required_sizes",
    "write_hit_curve_csv",
    "write_required_sizes_csv",
]


@dataclass(frozen=True)
class LruResult:
    """Outcome of one LRU simulation.

    ``mean_eviction_time`` is the mean, over eviction events, of the
    evicting request's timestamp minus the victim's last-access
    timestamp (NaN when nothing was evicted).
    """

    capacity: int
    requests: int
    hits: int
    evictions: int
    mean_eviction_time: float  # days

    @property
    def hit_prob(self) -> float:
        return self.hits / self.requests if self.requests else 0.0


def simulate_lru(trace: Trace, capacity: int) -> LruResult:
    """Run a unit-size-object LRU cache over the trace.

    Every access (hit or miss) makes the content most recently used; a
    miss inserts it and evicts the least recently used content when the
    cache exceeds its capacity.
    """
    if capacity < 1:
        raise ValueError(f"capacity must be >= 1, got {capacity}")
    cache: OrderedDict[str, None] = OrderedDict()
    last_access: dict[str, float] = {}
    hits = 0
    evictions = 0
    eviction_gap_total = 0.0
    for ev in trace.events:
        cid = ev.content_id
        if cid in cache:
            hits += 1
            cache.move_to_end(cid)
        else:
            cache[cid] = None
            if len(cache) > capacity:
                victim, _ = cache.popitem(last=False)
                evictions += 1
                eviction_gap_total += ev.timestamp - last_access[victim]
        last_access[cid] = ev.timestamp
    return LruResult(
        capacity=capacity,
        requests=len(trace.events),
        hits=hits,
        evictions=evictions,
        mean_eviction_time=eviction_gap_total / evictions if evictions else math.nan,
    )


def _distance_kernel(prev: np.ndarray) -> np.ndarray:
    # Fenwick tree over request positions (1-based); a mark sits at the
    # latest occurrence of every content seen so far, so the number of
    # marks strictly between two occurrences of a content counts the
    # distinct other contents referenced in between.
    n = prev.shape[0]
    out = np.empty(n, np.float64)
    tree = np.zeros(n + 1, np.int64)
    for i in range(n):
        p = prev[i]
        if p < 0:
            out[i] = np.inf
        else:
            s = 0
            k = i
            while k > 0:
                s += tree[k]
                k -= k & (-k)
            k = p + 1
            while k > 0:
                s -= tree[k]
                k -= k & (-k)
            out[i] = s + 1
            k = p + 1
            while k <= n:
                tree[k] -= 1
                k += k & (-k)
        k = i + 1
        while k <= n:
            tree[k] += 1
            k += k & (-k)
    return out


_compiled_kernel = None


def _get_kernel():
    global _compiled_kernel
    if _compiled_kernel is None:
        try:
            from numba import njit

            _compiled_kernel = njit(cache=True)(_distance_kernel)
        except ImportError:  # pragma: no cover - numba is a declared dep
            _compiled_kernel = _distance_kernel
    return _compiled_kernel


def reuse_distances(trace: Trace) -> np.ndarray:
    """Reuse (stack) distance of every request, in request order.

    First references get infinity.  A request is an LRU hit at capacity
    C iff its distance is <= C.
    """
    ids = trace.content_ids()
    n = len(ids)
    if n == 0:
        return np.empty(0, np.float64)
    _, codes = np.unique(ids, return_inverse=True)
    order = np.argsort(codes, kind="stable")
    sorted_codes = codes[order]
    prev = np.full(n, -1, dtype=np.int64)
    same = sorted_codes[1:] == sorted_codes[:-1]
    prev[order[1:][same]] = order[:-1][same]
    return _get_kernel()(prev)


def hit_curve(distances: Iterable[float], capacities: Sequence[int]) -> list[tuple[int, float]]:
    """Hit probability at each capacity from precomputed reuse distances."""
    d = np.asarray(list(distances) if not isinstance(distances, np.ndarray) else distances, float)
    if d.size == 0:
        raise ValueError("no requests")
    caps = [int(c) for c in capacities]
    if any(c < 1 for c in caps):
        raise ValueError(f"capacities must be positive, got {caps}")
    if any(a > b for a, b in zip(caps, caps[1:])):
        raise ValueError("capacities must be sorted")
    finite = np.sort(d[np.isfinite(d)])
    counts = np.searchsorted(finite, caps, side="right")
    return [(c, int(k) / d.size) for c, k in zip(caps, counts)]


def size_for_hit_prob(distances: Iterable[float], target: float) -> int | None:
    """Minimal LRU capacity reaching the target hit probability.

    Returns None when the target exceeds the compulsory-miss ceiling
    (unattainable even with a cache holding every distinct content).
    """
    if not 0.0 < target < 1.0:
        raise ValueError(f"target must be in (0, 1), got {target!r}")
    d = np.asarray(list(distances) if not isinstance(distances, np.ndarray) else distances, float)
    if d.size == 0:
        raise ValueError("no requests")
    total = d.size
    finite = np.sort(d[np.isfinite(d)])
    # smallest hit count k with k/total >= target, under float comparison
    k = math.ceil(target * total)
    while k > 1 and (k - 1) / total >= target:
        k -= 1
    while k / total < target:
        k += 1
    if k > finite.size:
        return None
    return int(finite[k - 1])


def compare_required_sizes(
    traces: Sequence[tuple[str, Trace]],
    targets: Sequence[float],
) -> list[tuple[str, float, int | None]]:
    """Required cache size per (trace, target hit probability) pair."""
    rows: list[tuple[str, float, int | None]] = []
    for label, trace in traces:
        if not trace.events:
            raise ValueError(f"trace {label!r} is empty")
        d = reuse_distances(trace)
        rows.extend((label, t, size_for_hit_prob(d, t)) for t in targets)
    return rows


def write_hit_curve_csv(curve: Sequence[tuple[int, float]], stream: IO[str]) -> None:
    stream.write("capacity,hit_prob\n")
    for capacity, prob in curve:
        stream.write(f"{capacity},{prob!r}\n")


def write_required_sizes_csv(
    rows: Sequence[tuple[str, float, int | None]], stream: IO[str]
) -> None:
    stream.write("trace_label,target,required_size\n")
    for label, target, size in rows:
        cell = "unattainable" if size is None else str(size)
        stream.write(f"{label},{target!r},{cell}\n")
