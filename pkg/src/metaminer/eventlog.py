"""
Event logs: data model, XES/CSV ingestion, canonical CSV output, and the
variant / directly-follows primitives every other module builds on.
"""
from __future__ import annotations

import csv
import gzip
import io
import xml.etree.ElementTree as ET
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from dateutil import parser as dtparser

from .errors import DataError, EmptyLogError, LogParseError

CASE_COLUMN = "case:concept:name"
ACTIVITY_COLUMN = "concept:name"
TIMESTAMP_COLUMN = "time:timestamp"
DEFAULT_MAPPING = (CASE_COLUMN, ACTIVITY_COLUMN, TIMESTAMP_COLUMN)


@dataclass(frozen=True)
class Event:
    activity: str
    timestamp: Optional[datetime] = None

    def __post_init__(self):
        name = self.activity.strip() if isinstance(self.activity, str) else ""
        if not name:
            raise DataError("event activity must be a non-empty string")
        object.__setattr__(self, "activity", name)


@dataclass(frozen=True)
class Trace:
    case_id: str
    events: Tuple[Event, ...]

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if not self.events:
            raise DataError(f"trace {self.case_id!r} has no events")
        stamps = [e.timestamp for e in self.events if e.timestamp is not None]
        if len(stamps) == len(self.events):
            for earlier, later in zip(stamps, stamps[1:]):
                if later < earlier:
                    raise DataError(f"trace {self.case_id!r} has decreasing timestamps")

    @property
    def activities(self) -> Tuple[str, ...]:
        return tuple(e.activity for e in self.events)

    def __len__(self):
        return len(self.events)


@dataclass(frozen=True)
class EventLog:
    traces: Tuple[Trace, ...]
    name: str = field(default="log", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "traces", tuple(self.traces))

    @classmethod
    def from_sequences(cls, sequences: Iterable[Sequence[str]], name: str = "log") -> "EventLog":
        """Build a timestamp-free log from plain activity sequences (cases numbered from 0)."""
        traces = [
            Trace(str(i), tuple(Event(a) for a in seq)) for i, seq in enumerate(sequences)
        ]
        return cls(tuple(traces), name=name)

    @property
    def activity_alphabet(self) -> Tuple[str, ...]:
        seen = {}
        for t in self.traces:
            for e in t.events:
                seen.setdefault(e.activity, None)
        return tuple(seen)

    @property
    def sequences(self) -> List[Tuple[str, ...]]:
        return [t.activities for t in self.traces]

    @property
    def n_events(self) -> int:
        return sum(len(t) for t in self.traces)

    def __len__(self):
        return len(self.traces)

    def require_nonempty(self) -> "EventLog":
        if not self.traces:
            raise EmptyLogError(f"event log {self.name!r} contains no traces")
        return self


@dataclass(frozen=True)
class VariantTable:
    entries: Dict[Tuple[str, ...], int]
    total: int

    def most_common(self) -> List[Tuple[Tuple[str, ...], int]]:
        """Variants sorted by descending count, ties by activity sequence."""
        return sorted(self.entries.items(), key=lambda kv: (-kv[1], kv[0]))

    def __len__(self):
        return len(self.entries)


@dataclass(frozen=True)
class DirectlyFollowsGraph:
    nodes: Tuple[str, ...]
    edge_counts: Dict[Tuple[str, str], int]
    start_counts: Dict[str, int]
    end_counts: Dict[str, int]

    def successors(self, a):
        return [b for (x, b) in self.edge_counts if x == a]

    def predecessors(self, b):
        return [a for (a, y) in self.edge_counts if y == b]


def variants(log: EventLog) -> VariantTable:
    log.require_nonempty()
    counts = Counter(t.activities for t in log.traces)
    return VariantTable(dict(counts), len(log.traces))


def dfg_from_variants(entries: Dict[Tuple[str, ...], int]) -> DirectlyFollowsGraph:
    edges: Counter = Counter()
    starts: Counter = Counter()
    ends: Counter = Counter()
    nodes = {}
    for seq, n in entries.items():
        if not seq:
            continue
        for a in seq:
            nodes.setdefault(a, None)
        starts[seq[0]] += n
        ends[seq[-1]] += n
        for a, b in zip(seq, seq[1:]):
            edges[(a, b)] += n
    return DirectlyFollowsGraph(tuple(sorted(nodes)), dict(edges), dict(starts), dict(ends))


def build_dfg(log: EventLog) -> DirectlyFollowsGraph:
    return dfg_from_variants(variants(log).entries)


# --------------------------------------------------------------------------- parsing

def _read_bytes(source) -> bytes:
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, (str, Path)):
        data = Path(source).read_bytes()
    else:
        data = source.read()
    if data[:2] == b"\x1f\x8b":
        data = gzip.decompress(data)
    return data


def parse_timestamp(value: str) -> datetime:
    stamp = dtparser.isoparse(value.strip())
    if stamp.tzinfo is None:
        return stamp.replace(tzinfo=timezone.utc)
    return stamp.astimezone(timezone.utc)


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def parse_xes(source, name: str = "log") -> EventLog:
    """Parse an XES document (optionally gzip-compressed) from bytes, a path or a binary stream."""
    data = _read_bytes(source)
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, col = exc.position
        raise LogParseError("malformed XES document", line=line, column=col) from None

    traces = []
    for ti, trace_el in enumerate(el for el in root if _local(el.tag) == "trace"):
        case_id = str(ti)
        events = []
        for child in trace_el:
            tag = _local(child.tag)
            if tag == "string" and child.get("key") == "concept:name":
                case_id = child.get("value", case_id)
            elif tag == "event":
                activity = None
                stamp = None
                for attr in child:
                    key = attr.get("key")
                    atag = _local(attr.tag)
                    if key == "concept:name" and atag == "string":
                        activity = attr.get("value")
                    elif key == "time:timestamp" and atag == "date":
                        try:
                            stamp = parse_timestamp(attr.get("value", ""))
                        except (ValueError, OverflowError):
                            raise LogParseError(
                                f"unparseable timestamp {attr.get('value')!r}", trace_index=ti
                            ) from None
                if activity is None or not activity.strip():
                    raise LogParseError("event lacks a concept:name attribute", trace_index=ti)
                events.append(Event(activity, stamp))
        if not events:
            raise LogParseError("trace has no events", trace_index=ti)
        try:
            traces.append(Trace(case_id, tuple(events)))
        except DataError as exc:
            raise LogParseError(str(exc), trace_index=ti) from None
    if not traces:
        raise EmptyLogError("XES document contains no traces")
    return EventLog(tuple(traces), name=name)


def parse_csv(source, mapping: Sequence[Optional[str]] = DEFAULT_MAPPING, name: str = "log") -> EventLog:
    """
    Parse a CSV event table.

    ``mapping`` is the (case, activity, timestamp) column-name triple; the
    timestamp entry may be None. Rows are grouped by case in first-appearance
    order; within a case rows keep file order unless a timestamp column is
    mapped, in which case they are stably sorted by timestamp.
    """
    case_col, act_col, ts_col = (list(mapping) + [None, None, None])[:3]
    text = _read_bytes(source).decode("utf-8-sig")
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyLogError("CSV input is empty") from None
    index = {col: i for i, col in enumerate(header)}
    for col in (case_col, act_col):
        if col not in index:
            raise LogParseError(f"missing mapped column {col!r}")
    if ts_col is not None and ts_col not in index:
        # the canonical timestamp column is optional in files written without timestamps
        if tuple(mapping) == DEFAULT_MAPPING or len(mapping) < 3:
            ts_col = None
        else:
            raise LogParseError(f"missing mapped column {ts_col!r}")

    cases: Dict[str, list] = {}
    ci, ai = index[case_col], index[act_col]
    ti = index[ts_col] if ts_col is not None else None
    for rowno, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < len(header):
            raise LogParseError("row has fewer cells than the header", row=rowno)
        stamp = None
        if ti is not None and row[ti].strip():
            try:
                stamp = parse_timestamp(row[ti])
            except (ValueError, OverflowError):
                raise LogParseError(f"unparseable timestamp {row[ti]!r}", row=rowno) from None
        activity = row[ai]
        if not activity.strip():
            raise LogParseError("empty activity", row=rowno)
        cases.setdefault(row[ci], []).append((stamp, Event(activity, stamp)))

    traces = []
    for case_id, rows in cases.items():
        if ti is not None and all(s is not None for s, _ in rows):
            rows = sorted(rows, key=lambda r: r[0])
        traces.append(Trace(case_id, tuple(e for _, e in rows)))
    if not traces:
        raise EmptyLogError("CSV input contains no events")
    return EventLog(tuple(traces), name=name)


def read_log(path, mapping: Sequence[Optional[str]] = DEFAULT_MAPPING) -> EventLog:
    """Load a log from ``.xes``, ``.xes.gz`` or ``.csv`` by extension; the log name is the file stem."""
    path = Path(path)
    lower = path.name.lower()
    if lower.endswith(".xes.gz"):
        return parse_xes(path, name=path.name[: -len(".xes.gz")])
    if lower.endswith(".xes"):
        return parse_xes(path, name=path.stem)
    if lower.endswith(".csv"):
        return parse_csv(path, mapping, name=path.stem)
    raise DataError(f"unsupported log format: {path}")


def format_timestamp(stamp: Optional[datetime]) -> str:
    if stamp is None:
        return ""
    return stamp.astimezone(timezone.utc).isoformat()


def to_csv(log: EventLog, mapping: Sequence[str] = DEFAULT_MAPPING) -> str:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(mapping))
    for trace in log.traces:
        for event in trace.events:
            writer.writerow([trace.case_id, event.activity, format_timestamp(event.timestamp)])
    return buf.getvalue()


def write_csv(log: EventLog, path, mapping: Sequence[str] = DEFAULT_MAPPING) -> None:
    Path(path).write_text(to_csv(log, mapping), encoding="utf-8")
