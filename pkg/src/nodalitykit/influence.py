"""Group activity series, transfer entropy and share of influence.

``phi(X, Y) = T(X->Y) / H_Y - T(Y->X) / H_X`` is the entropy-normalised net
information flow between two activity series; positive values mean X's past
predicts Y's next step better than the reverse.

All estimators are plug-in (no bias correction) over quantile-discretised
series, in bits.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .graph import DAY
from .ingest import GroupAssignment, InteractionEvent, Post


@dataclass(frozen=True)
class ActivitySeries:
    counts: np.ndarray
    bin_seconds: float
    start: float

    def __len__(self) -> int:
        return len(self.counts)

    @property
    def window(self) -> tuple[float, float]:
        return self.start, self.start + len(self.counts) * self.bin_seconds


def activity_series(
    events: Iterable[InteractionEvent],
    actors: Iterable[str],
    topic: str,
    window: tuple[float, float],
    bin_days: float = 1,
    posts: Iterable[Post] | None = None,
) -> ActivitySeries:
    """Topic-labelled interactions initiated by ``actors`` per bin.

    The initiator of an interaction is the event target. ``posts`` adds
    original posts when a posting log is available. A trailing partial bin
    is dropped.
    """
    start, end = window
    width = bin_days * DAY
    nbins = int((end - start) // width)
    if nbins < 2:
        raise ValueError("activity window must span at least two bins")
    members = set(actors)
    counts = np.zeros(nbins, dtype=np.int64)
    stop = start + nbins * width

    def add(ts):
        if start <= ts < stop:
            counts[int((ts - start) // width)] += 1

    for e in events:
        if e.target in members and topic in e.topics:
            add(e.timestamp)
    for p in posts or ():
        if p.actor_id in members and topic in p.topics:
            add(p.timestamp)
    return ActivitySeries(counts, width, start)


def _values(series) -> np.ndarray:
    return np.asarray(series.counts if isinstance(series, ActivitySeries) else series, dtype=float)


def quantile_edges(values, bins: int) -> np.ndarray:
    """Cut points taken from the data, one per interior quantile
    ``q = 1/bins, ..., (bins-1)/bins``.

    Cuts may only fall between distinct values, so a run of ties never
    straddles two bins. Each quantile takes the observed value whose
    cumulative count is closest to ``q n`` (lower on a tie) and never the
    maximum, which would leave its upper bin empty. Duplicates are merged,
    so heavily tied series get fewer bins. Depending only on ranks, the
    binning is invariant under monotone transforms.
    """
    if bins < 2:
        raise ValueError("bins must be >= 2")
    uniq, counts = np.unique(_values(values), return_counts=True)
    cum = np.cumsum(counts)[:-1]
    if not len(cum):
        return uniq[:0]
    n = counts.sum()
    picks = sorted({int(np.argmin(np.abs(cum - n * q / bins))) for q in range(1, bins)})
    return uniq[picks]


def discretize(values, bins: int = 2, edges: np.ndarray | None = None) -> list[int]:
    """Symbol = number of cut points strictly below the value."""
    v = _values(values)
    if edges is None:
        edges = quantile_edges(v, bins)
    return [int(s) for s in np.searchsorted(edges, v, side="left")]


def _plugin(counts: Iterable[int]) -> float:
    counts = [c for c in counts if c]
    total = sum(counts)
    return max(0.0, -sum(c / total * math.log2(c / total) for c in counts)) if total else 0.0


def symbol_entropy(symbols: Sequence) -> float:
    return _plugin(Counter(symbols).values())


def entropy(series, bins: int = 2) -> float:
    """Plug-in Shannon entropy (bits) of the discretised series."""
    v = _values(series)
    if len(v) < 2:
        raise ValueError("series must have length >= 2")
    return symbol_entropy(discretize(v, bins))


def symbol_transfer_entropy(xs: Sequence, ys: Sequence, k: int = 1) -> float:
    """``sum p(y+, y-, x-) log2[p(y+ | y-, x-) / p(y+ | y-)]`` over already
    discrete symbol sequences, histories of length ``k``."""
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    if len(ys) < k + 2:
        raise ValueError(f"series of length {len(ys)} too short for lag {k}")
    if k == 1:
        hist_y, hist_x = list(ys[:-1]), list(xs[:-1])
    else:
        hist_y = [tuple(ys[t - k + 1 : t + 1]) for t in range(k - 1, len(ys) - 1)]
        hist_x = [tuple(xs[t - k + 1 : t + 1]) for t in range(k - 1, len(xs) - 1)]
    nxt = ys[k:]
    joint = Counter(zip(nxt, hist_y, hist_x))
    yx = Counter(zip(hist_y, hist_x))
    ny = Counter(zip(nxt, hist_y))
    hy = Counter(hist_y)
    total = len(nxt)
    te = 0.0
    for (a, b, c), count in joint.items():
        te += count / total * math.log2(count * hy[b] / (yx[b, c] * ny[a, b]))
    return max(te, 0.0)


def transfer_entropy(x, y, k: int = 1, bins: int | None = 2) -> float:
    """T(X->Y) in bits. ``bins=None`` means the inputs are already symbols."""
    xs, ys = (list(x), list(y)) if bins is None else (discretize(x, bins), discretize(y, bins))
    return symbol_transfer_entropy(xs, ys, k)


@dataclass(frozen=True)
class FlowTerms:
    te_xy: float
    te_yx: float
    h_x: float
    h_y: float

    @property
    def phi(self) -> float:
        fwd = min(1.0, self.te_xy / self.h_y) if self.h_y > 0 else 0.0
        back = min(1.0, self.te_yx / self.h_x) if self.h_x > 0 else 0.0
        return fwd - back


def symbol_flow(xs: Sequence, ys: Sequence, k: int = 1) -> FlowTerms:
    """TE in both directions plus the normalising entropies.

    Each entropy is taken over the same next-step sample its TE term
    predicts (positions ``k..L-1``), so ``T(X->Y) <= H(Y+ | Y-) <= H_Y`` holds
    for the empirical distribution and each ratio stays in [0, 1].
    """
    return FlowTerms(
        te_xy=symbol_transfer_entropy(xs, ys, k),
        te_yx=symbol_transfer_entropy(ys, xs, k),
        h_x=symbol_entropy(xs[k:]),
        h_y=symbol_entropy(ys[k:]),
    )


def flow_terms(x, y, k: int = 1, bins: int | None = 2, edges=None) -> FlowTerms:
    if bins is None:
        xs, ys = list(x), list(y)
    else:
        ex, ey = edges if edges is not None else (None, None)
        xs, ys = discretize(x, bins, ex), discretize(y, bins, ey)
    return symbol_flow(xs, ys, k)


def share_of_influence(x, y, k: int = 1, bins: int | None = 2) -> float:
    """Net flow phi in [-1, 1]; a zero-entropy denominator contributes 0."""
    return flow_terms(x, y, k, bins).phi


@dataclass(frozen=True)
class InfluenceRecord:
    group: str
    topic: str
    window_index: int
    window_start: float
    phi: float
    te_xy: float
    te_yx: float
    h_x: float
    h_y: float


def group_influence_table(
    events: Sequence[InteractionEvent],
    groups: GroupAssignment | Mapping[str, Iterable[str]],
    topic: str,
    windows: Sequence[tuple[float, float]],
    k: int = 1,
    bins: int = 2,
    *,
    bin_days: float = 1,
    roster: Iterable[str] | None = None,
    posts: Iterable[Post] | None = None,
    pool_windows: bool = False,
) -> list[InfluenceRecord]:
    """phi(G, not G) for every group and window on one topic.

    ``not G`` is every other rostered actor. With ``pool_windows`` the
    quantile cut points come from the whole study series; otherwise each
    window is discretised on its own (small-sample bias applies).
    """
    if not windows:
        raise ValueError("no windows")
    if isinstance(groups, GroupAssignment):
        members = {g: groups.members(g) for g in groups.groups()}
        universe = set(groups.mapping)
    else:
        members = {g: frozenset(a) for g, a in groups.items()}
        universe = set().union(*members.values())
    if roster is not None:
        universe = set(roster)
    for g, m in members.items():
        if not m & universe:
            raise ValueError(f"group {g!r} has no rostered members")

    events = [e for e in events if topic in e.topics]
    posts = [p for p in posts or () if topic in p.topics]
    edges = {}
    if pool_windows:
        full = (windows[0][0], windows[-1][1])
        for g, m in members.items():
            x = activity_series(events, m, topic, full, bin_days, posts)
            y = activity_series(events, universe - m, topic, full, bin_days, posts)
            edges[g] = (quantile_edges(x, bins), quantile_edges(y, bins))

    records = []
    for w_idx, window in enumerate(windows):
        for g, m in members.items():
            x = activity_series(events, m, topic, window, bin_days, posts)
            y = activity_series(events, universe - m, topic, window, bin_days, posts)
            terms = flow_terms(x, y, k, bins, edges.get(g))
            records.append(
                InfluenceRecord(g, topic, w_idx, window[0], terms.phi, terms.te_xy, terms.te_yx, terms.h_x, terms.h_y)
            )
    return records
