"""Shared test fixtures: toy traces, reference configs, naive oracles."""

from __future__ import annotations

import math

import numpy as np

from snmcache.generators import SnmClassConfig
from snmcache.trace import RequestEvent, Trace

# Reference per-class parameters (share of contents, mean life-span in
# days, mean request volume) mirroring a measured residential-ISP
# workload: a small population of short-lived bursty videos plus a large
# slowly-consumed catalogue.  Class 5 is treated as stationary.
REFERENCE_CLASS_ROWS = [
    (1, 0.0317, 1.14, 86.4),
    (2, 0.0490, 3.36, 41.9),
    (3, 0.0295, 6.40, 59.5),
    (4, 0.0445, 10.53, 36.9),
    (5, 0.8458, 24.61, 25.7),
]


def reference_classes(
    n_videos: float = 6682.0, horizon: float = 30.0, shape: str = "exponential"
) -> list[SnmClassConfig]:
    """Reference 5-class config scaled to ~2e5 requests at the default size."""
    return [
        SnmClassConfig(
            class_id=cid,
            arrival_rate=n_videos * pct_videos / horizon,
            lifespan=lifespan,
            shape_kind="stationary" if cid == 5 else shape,
            volumes=volume,
        )
        for cid, pct_videos, lifespan, volume in REFERENCE_CLASS_ROWS
    ]


def make_trace(ids, times=None, horizon=None) -> Trace:
    """Trace from a plain id sequence; timestamps default to 0, 1, 2, ..."""
    ids = [str(x) for x in ids]
    if times is None:
        times = [float(i) for i in range(len(ids))]
    events = [RequestEvent(float(t), cid) for t, cid in zip(times, ids)]
    return Trace.from_events(events, horizon)


def random_trace(rng: np.random.Generator, n_requests: int, n_ids: int, horizon: float = 10.0) -> Trace:
    ids = rng.integers(0, n_ids, n_requests)
    times = np.sort(rng.uniform(0.0, horizon, n_requests))
    events = [RequestEvent(float(t), f"id{x}") for t, x in zip(times, ids)]
    return Trace(events, horizon)


def naive_reuse_distances(ids) -> list[float]:
    """O(D) rescan oracle for reuse distances."""
    out: list[float] = []
    last: dict = {}
    for i, x in enumerate(ids):
        if x in last:
            out.append(len(set(ids[last[x] + 1 : i])) + 1)
        else:
            out.append(math.inf)
        last[x] = i
    return out
