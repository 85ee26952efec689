"""Append-only telemetry journal and the aggregates built over it.

Persistence is newline-delimited JSON with a byte-length prefix per line
(`<len>\\t<json>`), human-inspectable and replayable. A single writer
serializes appends; readers and live streams see events in seq order
with no gaps.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator

from .errors import SequenceRangeError, TelemetryError


class EventKind(Enum):
    DECISION = "decision"
    UPSTREAM = "upstream"
    ADMIN = "admin"
    HEALTH = "health"


@dataclass(frozen=True)
class TelemetryEvent:
    seq: int
    timestamp: float
    kind: EventKind
    payload: dict

    def to_json(self) -> dict:
        return {
            "seq": self.seq,
            "timestamp": self.timestamp,
            "kind": self.kind.value,
            "payload": self.payload,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TelemetryEvent":
        return cls(
            seq=int(obj["seq"]),
            timestamp=float(obj["timestamp"]),
            kind=EventKind(obj["kind"]),
            payload=obj["payload"],
        )


def _encode_line(event: TelemetryEvent) -> bytes:
    body = json.dumps(event.to_json(), separators=(",", ":"), sort_keys=True).encode()
    return str(len(body)).encode() + b"\t" + body + b"\n"


def _decode_lines(raw: bytes) -> list[TelemetryEvent]:
    events = []
    for line in raw.splitlines():
        if not line.strip():
            continue
        prefix, _, body = line.partition(b"\t")
        try:
            expected = int(prefix)
        except ValueError:
            continue  # corrupt line: skip, never fail replay
        if len(body) != expected:
            continue
        try:
            events.append(TelemetryEvent.from_json(json.loads(body.decode())))
        except (ValueError, KeyError):
            continue
    return events


class Journal:
    """Durable append-only event log with live tailing.

    Size-bounded rotation: when the active file exceeds max_bytes it is
    renamed to `<path>.<n>` and appends continue in a fresh file; readers
    iterate rotated segments in order.
    """

    def __init__(self, path: str | Path | None = None, max_bytes: int | None = None):
        self.path = Path(path) if path else None
        self.max_bytes = max_bytes
        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._events: list[TelemetryEvent] = []
        self._next_seq = 0
        self._fh = None
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            for segment in self._segments():
                self._events.extend(_decode_lines(segment.read_bytes()))
            self._events.sort(key=lambda e: e.seq)
            if self._events:
                self._next_seq = self._events[-1].seq + 1
            self._fh = open(self.path, "ab")

    def _segments(self) -> list[Path]:
        assert self.path is not None
        rotated = sorted(
            self.path.parent.glob(self.path.name + ".*"),
            key=lambda p: int(p.suffix[1:]) if p.suffix[1:].isdigit() else 0,
        )
        return [p for p in rotated if p.suffix[1:].isdigit()] + (
            [self.path] if self.path.exists() else []
        )

    def _rotate_locked(self) -> None:
        assert self.path is not None and self._fh is not None
        self._fh.close()
        n = 1
        while (self.path.parent / f"{self.path.name}.{n}").exists():
            n += 1
        self.path.rename(self.path.parent / f"{self.path.name}.{n}")
        self._fh = open(self.path, "ab")

    @property
    def max_seq(self) -> int:
        with self._lock:
            return self._next_seq - 1

    def append(self, kind: EventKind, payload: dict, timestamp: float | None = None) -> int:
        with self._cond:
            event = TelemetryEvent(
                seq=self._next_seq,
                timestamp=timestamp if timestamp is not None else time.time(),
                kind=kind,
                payload=payload,
            )
            if self._fh is not None:
                try:
                    line = _encode_line(event)
                    self._fh.write(line)
                    self._fh.flush()
                    if self.max_bytes and self.path.stat().st_size > self.max_bytes:
                        self._rotate_locked()
                except OSError as e:
                    raise TelemetryError(f"journal append failed: {e}")
            self._events.append(event)
            self._next_seq += 1
            self._cond.notify_all()
            return event.seq

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None

    def events(self, from_seq: int = 0, to_seq: int | None = None) -> list[TelemetryEvent]:
        with self._lock:
            return [
                e
                for e in self._events
                if e.seq >= from_seq and (to_seq is None or e.seq <= to_seq)
            ]

    def stream(
        self, from_seq: int = 0, follow: bool = False, poll_s: float = 0.1
    ) -> Iterator[TelemetryEvent]:
        """Yield events in seq order starting at from_seq; optionally tail."""
        with self._lock:
            head = self._next_seq
        if from_seq > head:
            raise SequenceRangeError(f"from_seq {from_seq} is beyond head {head}")
        cursor = from_seq
        while True:
            batch = self.events(from_seq=cursor)
            for event in batch:
                yield event
                cursor = event.seq + 1
            if not follow:
                return
            with self._cond:
                if self._next_seq <= cursor:
                    self._cond.wait(timeout=poll_s)


@dataclass
class AggregateSnapshot:
    """Mergeable fold over decision + upstream events in a seq window."""

    from_seq: int = 0
    to_seq: int = -1
    requests: int = 0
    per_category: dict[str, dict[str, int]] = field(default_factory=dict)
    cost_usd: float = 0.0
    baseline_cost_usd: float = 0.0
    latency_s: float = 0.0
    baseline_latency_s: float = 0.0
    tokens_in: int = 0
    tokens_out: int = 0

    @property
    def savings_fraction(self) -> float | None:
        if self.baseline_cost_usd <= 0:
            return None
        return (self.baseline_cost_usd - self.cost_usd) / self.baseline_cost_usd

    @property
    def latency_savings_fraction(self) -> float | None:
        if self.baseline_latency_s <= 0:
            return None
        return (self.baseline_latency_s - self.latency_s) / self.baseline_latency_s

    def combine(self, other: "AggregateSnapshot") -> "AggregateSnapshot":
        merged = {
            cat: dict(counts) for cat, counts in self.per_category.items()
        }
        for cat, counts in other.per_category.items():
            row = merged.setdefault(cat, {})
            for precision, n in counts.items():
                row[precision] = row.get(precision, 0) + n
        return AggregateSnapshot(
            from_seq=min(self.from_seq, other.from_seq),
            to_seq=max(self.to_seq, other.to_seq),
            requests=self.requests + other.requests,
            per_category=merged,
            cost_usd=self.cost_usd + other.cost_usd,
            baseline_cost_usd=self.baseline_cost_usd + other.baseline_cost_usd,
            latency_s=self.latency_s + other.latency_s,
            baseline_latency_s=self.baseline_latency_s + other.baseline_latency_s,
            tokens_in=self.tokens_in + other.tokens_in,
            tokens_out=self.tokens_out + other.tokens_out,
        )

    def to_json(self) -> dict:
        return {
            "window": {"from_seq": self.from_seq, "to_seq": self.to_seq},
            "requests": self.requests,
            "per_category": self.per_category,
            "totals": {
                "cost_usd": self.cost_usd,
                "latency_s": self.latency_s,
                "tokens_in": self.tokens_in,
                "tokens_out": self.tokens_out,
            },
            "baseline_cost_usd": self.baseline_cost_usd,
            "baseline_latency_s": self.baseline_latency_s,
            "savings_fraction": self.savings_fraction,
            "latency_savings_fraction": self.latency_savings_fraction,
        }


def aggregate(
    events: list[TelemetryEvent], from_seq: int = 0, to_seq: int | None = None
) -> AggregateSnapshot:
    """Single-pass fold; the baseline cost/latency were fixed at append time
    from the highest-precision variant's prices and the actual token counts."""
    window = [
        e for e in events if e.seq >= from_seq and (to_seq is None or e.seq <= to_seq)
    ]
    snap = AggregateSnapshot(
        from_seq=from_seq,
        to_seq=to_seq if to_seq is not None else (window[-1].seq if window else from_seq - 1),
    )
    for e in window:
        if e.kind is EventKind.DECISION:
            p = e.payload
            row = snap.per_category.setdefault(p["task_category"], {})
            precision = p["precision"]
            row[precision] = row.get(precision, 0) + 1
            snap.requests += 1
        elif e.kind is EventKind.UPSTREAM:
            p = e.payload
            snap.cost_usd += p.get("cost_usd", 0.0)
            snap.baseline_cost_usd += p.get("baseline_cost_usd", 0.0)
            snap.latency_s += p.get("latency_s", 0.0)
            snap.baseline_latency_s += p.get("baseline_latency_s", 0.0)
            snap.tokens_in += p.get("tokens_in", 0)
            snap.tokens_out += p.get("tokens_out", 0)
    return snap
