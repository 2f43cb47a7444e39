"""Canonical request-trace representation and file I/O.

A trace is a time-sorted sequence of (timestamp, content_id) request
events plus an observation horizon.  Timestamps are real-valued days
since the trace origin; content ids are opaque tokens.  The on-disk
format is line-oriented text:

    # trace-v1 horizon=<real>
    <timestamp_days>,<content_id>
    ...

Timestamps are written with ``repr`` so a read/write cycle is lossless.
"""

from __future__ import annotations

import math
from typing import IO, Iterable, NamedTuple

__all__ = [
    "RequestEvent",
    "Trace",
    "TraceFormatError",
    "Violation",
    "read_trace",
    "write_trace",
    "validate",
]

HEADER_MAGIC = "# trace-v1"
MAX_ID_LEN = 64


class TraceFormatError(ValueError):
    """Raised on malformed or out-of-order trace input.

    ``line`` is the 1-based line number of the first offending line.
    """

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class RequestEvent(NamedTuple):
    timestamp: float  # days since trace origin
    content_id: str


class Violation(NamedTuple):
    invariant: str  # "timestamp" | "content_id" | "sorted" | "horizon"
    index: int  # first offending event index
    message: str


def _valid_content_id(cid: str) -> bool:
    # non-empty, at most 64 visible ASCII chars, no comma (the field
    # separator) and no whitespace
    if not cid or len(cid) > MAX_ID_LEN:
        return False
    return all(33 <= ord(c) <= 126 and c != "," for c in cid)


class Trace:
    """Immutable-by-convention sequence of request events.

    ``events`` must be sorted by non-decreasing timestamp and every
    timestamp must lie in ``[0, horizon]``; :func:`validate` reports
    violations without raising.
    """

    __slots__ = ("events", "horizon")

    def __init__(self, events: Iterable[RequestEvent], horizon: float):
        self.events = list(events)
        self.horizon = float(horizon)

    @classmethod
    def from_events(cls, events: Iterable[RequestEvent], horizon: float | None = None) -> "Trace":
        """Build a trace, defaulting the horizon to the last timestamp."""
        events = list(events)
        if horizon is None:
            horizon = events[-1].timestamp if events else 0.0
        return cls(events, horizon)

    def __len__(self) -> int:
        return len(self.events)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Trace):
            return NotImplemented
        return self.horizon == other.horizon and self.events == other.events

    def __repr__(self) -> str:
        return f"Trace({len(self.events)} events, horizon={self.horizon!r})"

    def content_ids(self) -> list[str]:
        return [e.content_id for e in self.events]

    def timestamps(self) -> list[float]:
        return [e.timestamp for e in self.events]


def read_trace(stream: IO[str]) -> Trace:
    """Parse the trace file format from a text stream.

    The horizon defaults to the last timestamp unless the header carries
    an explicit ``horizon=`` field.  Raises :class:`TraceFormatError`
    (with the offending line number) on malformed rows, unsorted
    timestamps, or timestamps beyond the declared horizon.
    """
    header = stream.readline()
    if not header.startswith(HEADER_MAGIC):
        raise TraceFormatError(f"expected header starting with {HEADER_MAGIC!r}", line=1)
    horizon: float | None = None
    for token in header[len(HEADER_MAGIC):].split():
        if token.startswith("horizon="):
            try:
                horizon = float(token[len("horizon="):])
            except ValueError:
                raise TraceFormatError(f"unparsable horizon {token!r}", line=1) from None
            if not math.isfinite(horizon) or horizon < 0:
                raise TraceFormatError(f"horizon must be finite and >= 0, got {horizon}", line=1)
        else:
            raise TraceFormatError(f"unrecognized header field {token!r}", line=1)

    events: list[RequestEvent] = []
    prev_ts = -math.inf
    for lineno, raw in enumerate(stream, start=2):
        line = raw.rstrip("\n")
        parts = line.split(",")
        if len(parts) != 2:
            raise TraceFormatError(
                f"expected 2 comma-separated columns, got {len(parts)}", line=lineno
            )
        try:
            ts = float(parts[0])
        except ValueError:
            raise TraceFormatError(f"unparsable timestamp {parts[0]!r}", line=lineno) from None
        if not math.isfinite(ts) or ts < 0:
            raise TraceFormatError(f"timestamp must be finite and >= 0, got {parts[0]}", line=lineno)
        cid = parts[1]
        if not _valid_content_id(cid):
            raise TraceFormatError(f"invalid content id {cid!r}", line=lineno)
        if ts < prev_ts:
            raise TraceFormatError(
                f"timestamps not sorted: {ts!r} after {prev_ts!r}", line=lineno
            )
        if horizon is not None and ts > horizon:
            raise TraceFormatError(f"timestamp {ts!r} beyond horizon {horizon!r}", line=lineno)
        events.append(RequestEvent(ts, cid))
        prev_ts = ts

    if horizon is None:
        horizon = events[-1].timestamp if events else 0.0
    return Trace(events, horizon)


def write_trace(trace: Trace, stream: IO[str]) -> None:
    """Emit the trace file format.

    Timestamps are rendered with ``repr`` (shortest round-tripping
    decimal), so ``read_trace`` recovers the exact float values.
    """
    stream.write(f"{HEADER_MAGIC} horizon={trace.horizon!r}\n")
    for ev in trace.events:
        stream.write(f"{ev.timestamp!r},{ev.content_id}\n")


def validate(trace: Trace) -> list[Violation]:
    """Check the trace invariants, reporting the first offender of each.

    Returns an empty list iff the trace is valid.
    """
    violations: list[Violation] = []
    bad_ts = bad_id = unsorted = beyond = None
    prev_ts = -math.inf
    for i, ev in enumerate(trace.events):
        if bad_ts is None and not (math.isfinite(ev.timestamp) and ev.timestamp >= 0):
            bad_ts = (i, ev.timestamp)
        if bad_id is None and not _valid_content_id(ev.content_id):
            bad_id = (i, ev.content_id)
        if unsorted is None and ev.timestamp < prev_ts:
            unsorted = (i, ev.timestamp)
        if beyond is None and ev.timestamp > trace.horizon:
            beyond = (i, ev.timestamp)
        prev_ts = ev.timestamp
    if bad_ts is not None:
        violations.append(
            Violation("timestamp", bad_ts[0], f"timestamp {bad_ts[1]!r} not finite and >= 0")
        )
    if bad_id is not None:
        violations.append(Violation("content_id", bad_id[0], f"invalid content id {bad_id[1]!r}"))
    if unsorted is not None:
        violations.append(
            Violation("sorted", unsorted[0], f"timestamp {unsorted[1]!r} breaks sort order")
        )
    if beyond is not None:
        violations.append(
            Violation("horizon", beyond[0], f"timestamp {beyond[1]!r} beyond horizon {trace.horizon!r}")
        )
    return violations
