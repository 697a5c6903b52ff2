import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DAY, T0, ev, mp
from nodalitykit.graph import (
    DiscourseGraph,
    build_network,
    giant_component,
    read_graphml,
    snapshot_series,
    study_range,
    tile_windows,
    to_dot,
    write_graphml,
)

WINDOW = (T0, T0 + 14 * DAY)


def test_single_event_single_edge():
    g = build_network([ev(1, "A", "B", ["T"])], "T", WINDOW)
    assert g.nodes == ("A", "B") and g.edges == {("A", "B"): 1}


def test_repeat_events_add_weight():
    g = build_network([ev(1, "A", "B", ["T"]), ev(2, "A", "B", ["T"], t=T0 + 5)], "T", WINDOW)
    assert g.edges == {("A", "B"): 2}


def test_topic_and_null_partition():
    events = [
        ev(1, "A", "B", ["T"]),
        ev(2, "B", "C", ["T", "U"]),
        ev(3, "A", "C", ["U"]),
        ev(4, "C", "A", []),
        ev(5, "A", "B", ["U"]),
        ev(6, "D", "A", ["T"], t=WINDOW[1]),  # outside the half-open window
    ]
    topic = build_network(events, "T", WINDOW, "topic")
    null = build_network(events, "T", WINDOW, "null")
    assert topic.edges == {("A", "B"): 1, ("B", "C"): 1}
    assert null.edges == {("A", "B"): 1, ("A", "C"): 1, ("C", "A"): 1}
    strict = build_network(events, "T", WINDOW, "null", exclude_labeled_null=True)
    assert strict.edges == {("C", "A"): 1}


def test_unknown_topic_and_bad_kind():
    with pytest.raises(KeyError):
        build_network([ev(1, "A", "B", ["T"])], "nope", WINDOW)
    with pytest.raises(ValueError):
        build_network([ev(1, "A", "B", ["T"])], "T", WINDOW, "other")


def test_invariants_enforced():
    with pytest.raises(ValueError):
        DiscourseGraph(("A",), {("A", "A"): 1}, "topic", "T", WINDOW)
    with pytest.raises(ValueError):
        DiscourseGraph(("A", "B"), {("A", "B"): 0}, "topic", "T", WINDOW)


events_st = st.lists(
    st.tuples(st.sampled_from("ABCDE"), st.sampled_from("ABCDE"), st.sets(st.sampled_from("TU")),
              st.floats(0, 20 * DAY)),
    max_size=40,
)


@given(events_st)
def test_topic_plus_null_covers_window(raw):
    events = [ev(i, s, d, tp, T0 + t) for i, (s, d, tp, t) in enumerate(raw)]
    events.append(ev("seed", "A", "B", ["T"]))
    topic = build_network(events, "T", WINDOW, "topic")
    null = build_network(events, "T", WINDOW, "null")
    inside = [e for e in events if WINDOW[0] <= e.timestamp < WINDOW[1] and e.source != e.target]
    assert topic.total_weight() + null.total_weight() == len(inside)
    for g in (topic, null):
        assert all(w >= 1 and u != v for (u, v), w in g.edges.items())


def test_window_tiling():
    assert len(tile_windows(T0, T0 + 28 * DAY, 14)) == 2
    wins = tile_windows(T0, T0 + 30 * DAY, 14)
    assert len(wins) == 2 and wins[-1][1] == T0 + 28 * DAY
    assert all(a[1] == b[0] for a, b in zip(wins, wins[1:]))
    with pytest.raises(ValueError):
        tile_windows(T0, T0 + 3 * DAY, 14)


def test_snapshot_series_drops_outside_events():
    events = [ev(1, "A", "B", ["T"]), ev(2, "B", "C", ["T"], t=T0 + 15 * DAY), ev(3, "C", "D", ["T"], t=T0 + 29 * DAY)]
    series = snapshot_series(events, "T", 14, study=(T0, T0 + 30 * DAY))
    assert len(series) == 2
    assert [s.topic_graph.edges for s in series] == [{("A", "B"): 1}, {("B", "C"): 1}]


def test_study_range_whole_days():
    start, end = study_range([ev(1, "A", "B", t=T0 + 3600), ev(2, "A", "B", t=T0 + 5 * DAY + 10)])
    assert (start, end) == (T0, T0 + 6 * DAY)


def graph(edges):
    nodes = tuple(sorted({x for e in edges for x in e}))
    return DiscourseGraph(nodes, {e: 1 for e in edges}, "topic", "T", WINDOW)


def test_giant_component_examples():
    g = graph([("A", "B"), ("B", "C"), ("D", "E")])
    assert giant_component(g).nodes == ("A", "B", "C")
    connected = graph([("A", "B"), ("C", "B")])
    assert giant_component(connected) == connected
    assert giant_component(graph([("C", "D"), ("B", "A")])).nodes == ("A", "B")


@settings(max_examples=50)
@given(st.lists(st.tuples(st.sampled_from("ABCDEFG"), st.sampled_from("ABCDEFG")).filter(lambda e: e[0] != e[1]),
                min_size=1, max_size=12, unique=True))
def test_giant_component_matches_networkx(edges):
    g = graph(edges)
    sizes = [len(c) for c in nx.weakly_connected_components(nx.DiGraph(edges))]
    assert giant_component(g).n == max(sizes)


def test_graphml_round_trip(tmp_path):
    g = DiscourseGraph(("a", "b", "c"), {("a", "b"): 2, ("c", "a"): 1}, "null", "covid", WINDOW)
    path = tmp_path / "g.graphml"
    roster = {"a": mp("a"), "b": mp("b")}
    write_graphml(g, path, roster, {"a": "leader"})
    assert read_graphml(path) == g
    attrs = nx.read_graphml(path).nodes["a"]
    assert attrs["cluster"] == "leader" and attrs["follower_count"] == 100


def test_dot_export():
    g = DiscourseGraph(("a", "b"), {("a", "b"): 3}, "topic", "covid", WINDOW)
    text = to_dot(g, tiers={"b": "receiver"})
    assert text.startswith('digraph "topic:covid" {')
    assert '"a" -> "b" [weight=3];' in text and 'cluster="receiver"' in text
