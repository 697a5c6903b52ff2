"""Event logs, actor rosters and institutional group assignment.

Edge convention: when actor ``j`` retweets, mentions or replies to content
authored by ``i``, the event has ``source=i`` and ``target=j`` and stands for
information flowing ``i -> j``.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Mapping, Sequence

log = logging.getLogger(__name__)


class EventKind(str, Enum):
    RETWEET = "retweet"
    MENTION = "mention"
    REPLY = "reply"


class ActorKind(str, Enum):
    MP = "mp"
    JOURNALIST = "journalist"


class Role(str, Enum):
    CABINET = "cabinet"
    SHADOW_CABINET = "shadow_cabinet"
    GOVERNMENT_BACKBENCH = "government_backbench"
    OPPOSITION_BACKBENCH = "opposition_backbench"
    JOURNALIST = "journalist"


PROMINENT_JOURNALIST = "prominent_journalist"
OTHER_JOURNALIST = "other_journalist"
GROUPS = (
    Role.CABINET.value,
    Role.SHADOW_CABINET.value,
    Role.GOVERNMENT_BACKBENCH.value,
    Role.OPPOSITION_BACKBENCH.value,
    PROMINENT_JOURNALIST,
    OTHER_JOURNALIST,
)


class SchemaError(ValueError):
    """A record that does not match its file format."""


class RosterError(ValueError):
    pass


def parse_time(value: str) -> float:
    """ISO-8601 string to UTC epoch seconds. Naive stamps are taken as UTC."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    stamp = datetime.fromisoformat(text)
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.timestamp()


def format_time(ts: float) -> str:
    stamp = datetime.fromtimestamp(ts, tz=timezone.utc)
    spec = "seconds" if stamp.microsecond == 0 else "microseconds"
    return stamp.isoformat(timespec=spec).replace("+00:00", "Z")


@dataclass(frozen=True)
class InteractionEvent:
    event_id: str
    source: str
    target: str
    kind: EventKind
    timestamp: float
    topics: frozenset[str] = frozenset()
    text_ref: str | None = None

    def to_record(self) -> dict:
        record = {
            "event_id": self.event_id,
            "source": self.source,
            "target": self.target,
            "kind": self.kind.value,
            "ts": format_time(self.timestamp),
            "topics": sorted(self.topics),
        }
        if self.text_ref is not None:
            record["text_ref"] = self.text_ref
        return record


@dataclass(frozen=True)
class Post:
    """An original post (no interaction), used to supplement activity counts."""

    actor_id: str
    timestamp: float
    topics: frozenset[str] = frozenset()


@dataclass
class ParseReport:
    """Everything `parse_events` refused, with 1-based line numbers."""

    errors: list[tuple[int, str]] = field(default_factory=list)
    self_interactions: list[int] = field(default_factory=list)
    unknown_actor: int = 0
    out_of_window: int = 0

    @property
    def ok(self) -> bool:
        return not self.errors

    def summary(self) -> str:
        lines = [
            f"schema errors: {len(self.errors)}",
            f"self-interactions dropped: {len(self.self_interactions)}",
            f"unknown-actor events dropped: {self.unknown_actor}",
            f"out-of-window events dropped: {self.out_of_window}",
        ]
        lines += [f"  line {n}: {msg}" for n, msg in self.errors]
        return "\n".join(lines)


_REQUIRED = ("event_id", "source", "target", "kind", "ts", "topics")


def _event_from_record(record: object) -> InteractionEvent:
    if not isinstance(record, dict):
        raise SchemaError("record is not an object")
    missing = [k for k in _REQUIRED if k not in record]
    if missing:
        raise SchemaError(f"missing field(s): {', '.join(missing)}")
    for key in ("event_id", "source", "target", "kind", "ts"):
        if not isinstance(record[key], str) or not record[key]:
            raise SchemaError(f"field {key!r} must be a non-empty string")
    topics = record["topics"]
    if not isinstance(topics, list) or not all(isinstance(t, str) for t in topics):
        raise SchemaError("field 'topics' must be an array of strings")
    try:
        kind = EventKind(record["kind"])
    except ValueError:
        raise SchemaError(f"unknown kind {record['kind']!r}") from None
    try:
        ts = parse_time(record["ts"])
    except ValueError:
        raise SchemaError(f"bad timestamp {record['ts']!r}") from None
    text_ref = record.get("text_ref")
    if text_ref is not None and not isinstance(text_ref, str):
        raise SchemaError("field 'text_ref' must be a string")
    return InteractionEvent(
        event_id=record["event_id"],
        source=record["source"],
        target=record["target"],
        kind=kind,
        timestamp=ts,
        topics=frozenset(topics),
        text_ref=text_ref,
    )


def parse_events(
    stream: Iterable[str],
    *,
    actors: Iterable[str] | None = None,
    window: tuple[float, float] | None = None,
    strict: bool = False,
) -> tuple[list[InteractionEvent], ParseReport]:
    """Parse a JSON-lines event log.

    Events come back in input order. Self-interactions are dropped, as are
    events touching actors outside ``actors`` or falling outside the
    half-open ``window``; each drop is counted in the report. Malformed lines
    are reported with their line number (or raised when ``strict``).
    """
    roster = None if actors is None else set(actors)
    report = ParseReport()
    events = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            event = _event_from_record(json.loads(line))
        except (json.JSONDecodeError, SchemaError) as exc:
            if strict:
                raise SchemaError(f"line {lineno}: {exc}") from exc
            report.errors.append((lineno, str(exc)))
            continue
        if event.source == event.target:
            log.debug("line %d: self-interaction by %s dropped", lineno, event.source)
            report.self_interactions.append(lineno)
            continue
        if roster is not None and (event.source not in roster or event.target not in roster):
            report.unknown_actor += 1
            continue
        if window is not None and not window[0] <= event.timestamp < window[1]:
            report.out_of_window += 1
            continue
        events.append(event)
    if report.unknown_actor:
        log.warning("%d events referenced actors outside the roster", report.unknown_actor)
    return events, report


def read_events(path: str | Path, **kwargs) -> tuple[list[InteractionEvent], ParseReport]:
    with open(path, encoding="utf-8") as fh:
        return parse_events(fh, **kwargs)


def dump_events(events: Iterable[InteractionEvent]) -> str:
    return "".join(json.dumps(e.to_record(), sort_keys=True) + "\n" for e in events)


def write_events(events: Iterable[InteractionEvent], path: str | Path) -> None:
    Path(path).write_text(dump_events(events), encoding="utf-8")


def read_posts(path: str | Path) -> list[Post]:
    """Optional posting log: JSON lines with ``actor``, ``ts``, ``topics``."""
    posts = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                posts.append(Post(rec["actor"], parse_time(rec["ts"]), frozenset(rec.get("topics", []))))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise SchemaError(f"line {lineno}: {exc}") from exc
    return posts


@dataclass(frozen=True)
class Actor:
    actor_id: str
    display_name: str
    kind: ActorKind
    role: Role
    party: str | None
    follower_count: int

    def __post_init__(self):
        if self.follower_count < 0:
            raise RosterError(f"{self.actor_id}: negative follower_count")
        if (self.role is Role.JOURNALIST) != (self.kind is ActorKind.JOURNALIST):
            raise RosterError(
                f"{self.actor_id}: role {self.role.value!r} is inconsistent with kind {self.kind.value!r}"
            )


ROSTER_COLUMNS = ("actor_id", "display_name", "kind", "role", "party", "follower_count")


def load_roster(source: str | Path | IO[str]) -> list[Actor]:
    """Read a roster CSV. Raises `RosterError` on duplicates or bad values."""
    if isinstance(source, (str, Path)):
        with open(source, newline="", encoding="utf-8") as fh:
            return load_roster(fh)
    reader = csv.DictReader(source)
    missing = [c for c in ROSTER_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise RosterError(f"roster header missing column(s): {', '.join(missing)}")
    actors: list[Actor] = []
    seen: set[str] = set()
    for row in reader:
        actor_id = row["actor_id"].strip()
        if actor_id in seen:
            raise RosterError(f"duplicate actor_id {actor_id!r}")
        seen.add(actor_id)
        try:
            kind = ActorKind(row["kind"].strip())
        except ValueError:
            raise RosterError(f"{actor_id}: unknown kind {row['kind']!r}") from None
        try:
            role = Role(row["role"].strip())
        except ValueError:
            raise RosterError(f"{actor_id}: unknown role {row['role']!r}") from None
        try:
            followers = int(row["follower_count"])
        except ValueError:
            raise RosterError(f"{actor_id}: bad follower_count {row['follower_count']!r}") from None
        party = row["party"].strip() or None
        actors.append(Actor(actor_id, row["display_name"], kind, role, party, followers))
    return actors


def dump_roster(actors: Sequence[Actor]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ROSTER_COLUMNS)
    for a in actors:
        writer.writerow([a.actor_id, a.display_name, a.kind.value, a.role.value, a.party or "", a.follower_count])
    return buf.getvalue()


@dataclass(frozen=True)
class GroupAssignment:
    """Actor id -> institutional group id. Every rostered actor appears once."""

    mapping: Mapping[str, str]

    def __getitem__(self, actor_id: str) -> str:
        return self.mapping[actor_id]

    def __len__(self) -> int:
        return len(self.mapping)

    def groups(self) -> list[str]:
        present = set(self.mapping.values())
        ordered = [g for g in GROUPS if g in present]
        return ordered + sorted(present - set(GROUPS))

    def members(self, group: str) -> frozenset[str]:
        return frozenset(a for a, g in self.mapping.items() if g == group)

    def to_csv(self) -> str:
        lines = ["actor_id,group"] + [f"{a},{g}" for a, g in sorted(self.mapping.items())]
        return "\n".join(lines) + "\n"

    @classmethod
    def read_csv(cls, path: str | Path) -> "GroupAssignment":
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        mapping = {}
        for row in rows:
            if row["actor_id"] in mapping:
                raise RosterError(f"actor {row['actor_id']!r} assigned twice")
            mapping[row["actor_id"]] = row["group"]
        return cls(mapping)


def assign_groups(roster: Sequence[Actor], decile: float = 0.10) -> GroupAssignment:
    """Map MPs by parliamentary role and split journalists by follower count.

    The ``ceil(decile * n)``-th largest follower count among journalists is
    the threshold; every journalist at or above it is prominent, so ties at
    the boundary are all included.
    """
    if not roster:
        raise RosterError("empty roster")
    if not 0.0 < decile < 1.0:
        raise ValueError(f"decile must lie in (0, 1), got {decile}")
    mapping = {a.actor_id: a.role.value for a in roster if a.kind is ActorKind.MP}
    journalists = [a for a in roster if a.kind is ActorKind.JOURNALIST]
    if journalists:
        counts = sorted((a.follower_count for a in journalists), reverse=True)
        # guard against 0.1 * 30 == 3.0000000000000004
        rank = max(1, math.ceil(decile * len(counts) - 1e-9))
        threshold = counts[rank - 1]
        for a in journalists:
            mapping[a.actor_id] = PROMINENT_JOURNALIST if a.follower_count >= threshold else OTHER_JOURNALIST
    return GroupAssignment(mapping)


def followers_of(roster: Iterable[Actor]) -> dict[str, int]:
    return {a.actor_id: a.follower_count for a in roster}

