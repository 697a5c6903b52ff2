"""Topic and null discourse networks built from interaction events.

An edge ``i -> j`` aggregates every interaction by ``j`` with content from
``i``. The null network of a topic is built from all events *not* carrying
that topic (other topics and unlabelled events), so an actor pair can appear
in both networks with different weights.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import networkx as nx
import numpy as np

from .ingest import Actor, InteractionEvent, format_time, parse_time

DAY = 86400.0
DEFAULT_KIND_WEIGHTS = {"retweet": 1, "mention": 1, "reply": 1}


@dataclass(frozen=True)
class DiscourseGraph:
    nodes: tuple[str, ...]
    edges: Mapping[tuple[str, str], float]
    kind: str
    topic: str
    window: tuple[float, float]

    def __post_init__(self):
        for (u, v), w in self.edges.items():
            if u == v:
                raise ValueError(f"self-loop on {u}")
            if w <= 0:
                raise ValueError(f"non-positive weight on {u}->{v}")

    @property
    def n(self) -> int:
        return len(self.nodes)

    def index(self) -> dict[str, int]:
        return {node: i for i, node in enumerate(self.nodes)}

    def adjacency(self) -> np.ndarray:
        """Dense weighted adjacency ``W[i, j] = w_ij`` in ``nodes`` order."""
        idx = self.index()
        W = np.zeros((self.n, self.n))
        for (u, v), w in self.edges.items():
            W[idx[u], idx[v]] = w
        return W

    def total_weight(self) -> float:
        return float(sum(self.edges.values()))

    def subgraph(self, keep: Iterable[str]) -> "DiscourseGraph":
        keep = set(keep)
        return DiscourseGraph(
            nodes=tuple(n for n in self.nodes if n in keep),
            edges={e: w for e, w in self.edges.items() if e[0] in keep and e[1] in keep},
            kind=self.kind,
            topic=self.topic,
            window=self.window,
        )


def _in_network(event: InteractionEvent, topic: str, kind: str, exclude_labeled: bool) -> bool:
    if kind == "topic":
        return topic in event.topics
    if topic in event.topics:
        return False
    return not (exclude_labeled and event.topics)


def build_network(
    events: Iterable[InteractionEvent],
    topic: str,
    window: tuple[float, float],
    kind: str = "topic",
    *,
    known_topics: Iterable[str] | None = None,
    kind_weights: Mapping[str, float] | None = None,
    exclude_labeled_null: bool = False,
) -> DiscourseGraph:
    """Aggregate the events in ``[start, end)`` into a weighted digraph.

    With ``exclude_labeled_null`` the null network drops events carrying
    any other topic label and keeps only unlabelled interactions.
    """
    start, end = window
    if not end > start:
        raise ValueError("window must be nonempty")
    if kind not in ("topic", "null"):
        raise ValueError(f"graph kind must be 'topic' or 'null', got {kind!r}")
    events = list(events)
    if known_topics is None:
        known_topics = {t for e in events for t in e.topics}
    if topic not in set(known_topics):
        raise KeyError(f"unknown topic {topic!r}")
    weights = {**DEFAULT_KIND_WEIGHTS, **(kind_weights or {})}

    edges: dict[tuple[str, str], float] = defaultdict(float)
    for e in events:
        if start <= e.timestamp < end and e.source != e.target and _in_network(e, topic, kind, exclude_labeled_null):
            edges[(e.source, e.target)] += weights[e.kind.value]
    edges = {k: (int(v) if float(v).is_integer() else v) for k, v in sorted(edges.items()) if v > 0}
    nodes = tuple(sorted({u for u, _ in edges} | {v for _, v in edges}))
    return DiscourseGraph(nodes, edges, kind, topic, (start, end))


def day_floor(ts: float) -> float:
    return math.floor(ts / DAY) * DAY


def study_range(events: Sequence[InteractionEvent]) -> tuple[float, float]:
    """Whole days from the first event's midnight to the day after the last."""
    if not events:
        raise ValueError("no events")
    stamps = [e.timestamp for e in events]
    return day_floor(min(stamps)), day_floor(max(stamps)) + DAY


def tile_windows(start: float, end: float, window_len_days: int) -> list[tuple[float, float]]:
    if window_len_days < 1:
        raise ValueError("window_len_days must be >= 1")
    width = window_len_days * DAY
    count = int((end - start) // width)
    if count < 1:
        raise ValueError(
            f"study range of {(end - start) / DAY:g} days is shorter than one {window_len_days}-day window"
        )
    return [(start + i * width, start + (i + 1) * width) for i in range(count)]


@dataclass(frozen=True)
class Snapshot:
    window: tuple[float, float]
    topic_graph: DiscourseGraph
    null_graph: DiscourseGraph


@dataclass(frozen=True)
class SnapshotSeries:
    topic: str
    snapshots: tuple[Snapshot, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.snapshots)

    def __iter__(self):
        return iter(self.snapshots)

    @property
    def windows(self) -> list[tuple[float, float]]:
        return [s.window for s in self.snapshots]


def snapshot_series(
    events: Sequence[InteractionEvent],
    topic: str,
    window_len_days: int = 14,
    *,
    study: tuple[float, float] | None = None,
    known_topics: Iterable[str] | None = None,
    **kwargs,
) -> SnapshotSeries:
    """Tile the study range into equal windows from its start, dropping any
    trailing partial window, and build both networks for each."""
    events = list(events)
    start, end = study if study is not None else study_range(events)
    if known_topics is None:
        known_topics = {t for e in events for t in e.topics}
    known_topics = set(known_topics)
    snaps = []
    for window in tile_windows(start, end, window_len_days):
        inside = [e for e in events if window[0] <= e.timestamp < window[1]]
        snaps.append(
            Snapshot(
                window,
                build_network(inside, topic, window, "topic", known_topics=known_topics, **kwargs),
                build_network(inside, topic, window, "null", known_topics=known_topics, **kwargs),
            )
        )
    return SnapshotSeries(topic, tuple(snaps))


def giant_component(graph: DiscourseGraph) -> DiscourseGraph:
    """Largest weakly connected component; on equal sizes, the component
    holding the lexicographically smallest node id wins."""
    if graph.n == 0:
        raise ValueError("empty graph")
    parent = {v: v for v in graph.nodes}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for u, v in graph.edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            parent[max(ru, rv)] = min(ru, rv)
    components: dict[str, list[str]] = defaultdict(list)
    for v in graph.nodes:
        components[find(v)].append(v)
    best = min(components.values(), key=lambda c: (-len(c), min(c)))
    return graph.subgraph(best)


def _node_attrs(actor: Actor | None, tier: str | None) -> dict:
    attrs = {}
    if actor is not None:
        attrs.update(
            kind=actor.kind.value,
            role=actor.role.value,
            party=actor.party or "",
            follower_count=actor.follower_count,
        )
    if tier is not None:
        attrs["cluster"] = tier
    return attrs


def to_networkx(
    graph: DiscourseGraph,
    roster: Mapping[str, Actor] | None = None,
    tiers: Mapping[str, str] | None = None,
) -> nx.DiGraph:
    g = nx.DiGraph(
        graph_kind=graph.kind,
        topic=graph.topic,
        window_start=format_time(graph.window[0]),
        window_end=format_time(graph.window[1]),
    )
    roster = roster or {}
    tiers = tiers or {}
    for node in graph.nodes:
        g.add_node(node, **_node_attrs(roster.get(node), tiers.get(node)))
    for (u, v), w in graph.edges.items():
        g.add_edge(u, v, weight=w)
    return g


def write_graphml(graph: DiscourseGraph, path: str | Path, roster=None, tiers=None) -> None:
    nx.write_graphml(to_networkx(graph, roster, tiers), str(path))


def read_graphml(path: str | Path) -> DiscourseGraph:
    g = nx.read_graphml(str(path))
    edges = {}
    for u, v, data in g.edges(data=True):
        w = data.get("weight", 1)
        edges[(str(u), str(v))] = int(w) if float(w).is_integer() else float(w)
    return DiscourseGraph(
        nodes=tuple(sorted(str(n) for n in g.nodes)),
        edges=dict(sorted(edges.items())),
        kind=g.graph.get("graph_kind", "topic"),
        topic=g.graph.get("topic", ""),
        window=(parse_time(g.graph["window_start"]), parse_time(g.graph["window_end"]))
        if "window_start" in g.graph
        else (0.0, 0.0),
    )


def _dot_quote(value) -> str:
    text = str(value).replace("\\", "\\\\").replace('"', '\\"')
    return f'"{text}"'


def to_dot(graph: DiscourseGraph, roster: Mapping[str, Actor] | None = None, tiers=None) -> str:
    roster = roster or {}
    tiers = tiers or {}
    lines = [f"digraph {_dot_quote(f'{graph.kind}:{graph.topic}')} {{"]
    for node in graph.nodes:
        attrs = _node_attrs(roster.get(node), tiers.get(node))
        rendered = ", ".join(f"{k}={_dot_quote(v)}" for k, v in attrs.items())
        lines.append(f"  {_dot_quote(node)}" + (f" [{rendered}]" if rendered else "") + ";")
    for (u, v), w in graph.edges.items():
        lines.append(f"  {_dot_quote(u)} -> {_dot_quote(v)} [weight={w}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def write_dot(graph: DiscourseGraph, path: str | Path, roster=None, tiers=None) -> None:
    Path(path).write_text(to_dot(graph, roster, tiers), encoding="utf-8")
