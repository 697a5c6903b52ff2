import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import DAY, T0, ev
from nodalitykit.influence import (
    FlowTerms,
    activity_series,
    discretize,
    entropy,
    flow_terms,
    group_influence_table,
    quantile_edges,
    share_of_influence,
    symbol_flow,
    symbol_transfer_entropy,
    transfer_entropy,
)
from oracles import all_binary, brute_transfer_entropy, plugin_entropy

WEEK = (T0, T0 + 7 * DAY)


def test_three_events_one_day():
    events = [ev(i, "src", m, ["T"], T0 + DAY + 60 * i) for i, m in enumerate(["a", "b", "a"])]
    s = activity_series(events, {"a", "b"}, "T", WEEK)
    assert s.counts.tolist() == [0, 3, 0, 0, 0, 0, 0]


def test_empty_actor_set():
    s = activity_series([ev(1, "a", "b", ["T"])], set(), "T", WEEK)
    assert s.counts.tolist() == [0] * 7


def test_week_fixture_tally():
    raw = [  # (day, initiator, topics)
        (0, "a", ["T"]), (0, "b", ["T"]), (0, "c", ["T"]), (1, "a", ["U"]), (2, "a", ["T", "U"]),
        (4, "b", ["T"]), (4, "b", ["T"]), (6, "a", ["T"]), (7, "a", ["T"]),
    ]
    events = [ev(i, "z", who, tp, T0 + d * DAY + 3600) for i, (d, who, tp) in enumerate(raw)]
    # by hand for {a, b} on T: day0 2, day2 1, day4 2, day6 1; day 7 is outside
    assert activity_series(events, {"a", "b"}, "T", WEEK).counts.tolist() == [2, 0, 1, 0, 2, 0, 1]
    two_day = activity_series(events, {"a"}, "T", WEEK, bin_days=2)
    assert two_day.counts.tolist() == [1, 1, 0]  # trailing day 6 dropped


def test_series_needs_two_bins():
    with pytest.raises(ValueError):
        activity_series([], {"a"}, "T", (T0, T0 + DAY))


def test_entropy_examples():
    assert entropy([4, 4, 4, 4]) == 0
    assert entropy([0, 1] * 10) == 1
    assert entropy([0, 0, 1, 3]) == 1


def test_quantile_edges():
    assert quantile_edges([5, 1, 3, 2], 2).tolist() == [2]
    assert discretize([5, 1, 3, 2]) == [1, 0, 1, 0]
    assert quantile_edges(np.arange(9), 3).tolist() == [2, 5]
    assert len(quantile_edges([7, 7, 7], 2)) == 0


def test_ties_never_straddle_bins():
    # nine 1s and five 0s: the only cut separates the two values
    assert discretize([0] * 5 + [1] * 9) == [0] * 5 + [1] * 9
    assert discretize([1] * 9 + [0]) == [1] * 9 + [0]
    assert discretize([0, 0, 1, 1, 2, 2], 3) == [0, 0, 1, 1, 2, 2]
    # tertile targets 2 and 4 both resolve to the cut after the three 0s
    assert discretize([0, 0, 0, 1, 1, 2], 3) == [0, 0, 0, 1, 1, 1]


@given(st.lists(st.integers(0, 2), min_size=2, max_size=30))
def test_binary_data_is_its_own_symbols(values):
    v = np.array(values)
    if len(set(values)) == 2:
        lo = v.min()
        assert discretize(v) == (v > lo).astype(int).tolist()


@given(st.lists(st.integers(0, 50), min_size=2, max_size=40), st.integers(2, 4))
def test_discretisation_invariant_under_monotone_maps(values, bins):
    v = np.array(values, float)
    assert discretize(v, bins) == discretize(np.exp(v / 10) * 3 + 1, bins)


@pytest.mark.parametrize("length", range(3, 9))
def test_te_matches_brute_force_all_pairs(length):
    series = list(all_binary(length))
    for x in series:
        for y in series[:: max(1, len(series) // 16)]:
            assert symbol_transfer_entropy(x, y, 1) == pytest.approx(brute_transfer_entropy(x, y, 1), abs=1e-12)


@settings(max_examples=80)
@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2)), min_size=5, max_size=40), st.integers(1, 3))
def test_te_matches_brute_force_longer_history(pairs, k):
    x, y = map(list, zip(*pairs))
    if len(x) < k + 2:
        return
    assert symbol_transfer_entropy(x, y, k) == pytest.approx(brute_transfer_entropy(x, y, k), abs=1e-12)


def test_te_constant_series_is_zero():
    assert transfer_entropy([3] * 20, [5] * 20) == 0


def test_copy_process_carries_one_bit(rng):
    x = rng.integers(0, 2, size=2001)
    y = np.r_[0, x[:-1]]
    assert transfer_entropy(x, y, bins=None) == pytest.approx(1, abs=0.05)
    assert transfer_entropy(y, x, bins=None) < 0.01
    assert share_of_influence(x, y, bins=None) > 0.9


def test_self_transfer_is_zero(rng):
    x = rng.integers(0, 2, size=200)
    assert symbol_transfer_entropy(x, x, 1) == 0


def test_te_errors():
    with pytest.raises(ValueError, match="mismatch"):
        symbol_transfer_entropy([0, 1, 0], [0, 1])
    with pytest.raises(ValueError, match="short"):
        symbol_transfer_entropy([0, 1], [1, 0])


series = st.lists(st.integers(0, 6), min_size=4, max_size=30)


@settings(max_examples=200)
@given(series, series, st.sampled_from([2, 3]))
def test_phi_antisymmetric_and_bounded(x, y, bins):
    n = min(len(x), len(y))
    x, y = x[:n], y[:n]
    phi = share_of_influence(x, y, bins=bins)
    assert phi == -share_of_influence(y, x, bins=bins)
    assert -1 <= phi <= 1
    assert share_of_influence(x, x, bins=bins) == 0


@settings(max_examples=200)
@given(series, series)
def test_te_bounded_by_aligned_entropy(x, y):
    n = min(len(x), len(y))
    xs, ys = discretize(x[:n]), discretize(y[:n])
    terms = symbol_flow(xs, ys)
    assert 0 <= terms.te_xy <= terms.h_y + 1e-12
    assert 0 <= terms.te_yx <= terms.h_x + 1e-12
    assert terms.h_y == pytest.approx(plugin_entropy(ys[1:]))


def test_zero_entropy_terms_contribute_zero():
    assert FlowTerms(0.3, 0.2, 0.0, 0.0).phi == 0
    assert FlowTerms(0.3, 0.2, 0.0, 0.6).phi == pytest.approx(0.5)


def copy_events(rng, days=42, lag_days=1):
    """g1 is active on random days; h1 repeats g1's activity one day later."""
    active = rng.random(days) < 0.5
    events, i = [], 0
    for d in np.flatnonzero(active):
        events.append(ev(i, "h1", "g1", ["T"], T0 + d * DAY + 100))
        i += 1
        if d + lag_days < days:
            events.append(ev(i, "g1", "h1", ["T"], T0 + (d + lag_days) * DAY + 200))
            i += 1
    return events


def test_leading_group_has_positive_phi(rng):
    events = copy_events(rng)
    windows = [(T0 + w * 14 * DAY, T0 + (w + 1) * 14 * DAY) for w in range(3)]
    groups = {"G": {"g1"}, "notG": {"h1"}}
    recs = [r for r in group_influence_table(events, groups, "T", windows) if r.group == "G"]
    assert len(recs) == 3
    for r, w in zip(recs, windows):
        x = activity_series(events, {"g1"}, "T", w)
        y = activity_series(events, {"h1"}, "T", w)
        assert r.phi == share_of_influence(x, y) and r.phi > 0


def test_silent_group_record(rng):
    events = copy_events(rng)
    windows = [(T0, T0 + 14 * DAY)]
    recs = group_influence_table(events, {"G": {"g1", "h1"}, "quiet": {"q"}}, "T", windows,
                                 roster=["g1", "h1", "q"])
    quiet = next(r for r in recs if r.group == "quiet")
    assert quiet.te_xy == 0 and quiet.h_x == 0 and quiet.phi == 0


def test_three_groups_three_records_per_window(rng):
    events = copy_events(rng)
    windows = [(T0, T0 + 14 * DAY), (T0 + 14 * DAY, T0 + 28 * DAY)]
    recs = group_influence_table(events, {"a": {"g1"}, "b": {"h1"}, "c": {"x"}}, "T", windows)
    assert [(r.window_index, r.group) for r in recs] == [(w, g) for w in (0, 1) for g in "abc"]


def test_pooled_edges_change_only_binning(rng):
    events = copy_events(rng)
    windows = [(T0, T0 + 14 * DAY), (T0 + 14 * DAY, T0 + 28 * DAY)]
    pooled = group_influence_table(events, {"G": {"g1"}, "H": {"h1"}}, "T", windows, pool_windows=True)
    for r in pooled:
        assert -1 <= r.phi <= 1 and not math.isnan(r.phi)


def test_flow_terms_with_explicit_edges():
    x, y = [0, 5, 0, 5, 5, 0], [1, 1, 9, 1, 9, 9]
    t = flow_terms(x, y, edges=(np.array([2.0]), np.array([4.0])))
    assert t == symbol_flow([0, 1, 0, 1, 1, 0], [0, 0, 1, 0, 1, 1])
