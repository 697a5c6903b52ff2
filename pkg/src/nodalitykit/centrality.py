"""Per-node centrality metrics on a `DiscourseGraph`.

Six standard metrics plus two follower-weighted bandwidths:

* funnel bandwidth ``nu_i = f_i * sum_h w_hi / <k_in>``
* amplification bandwidth ``mu_i = sum_j f_j * w_ij / <k_out>``

where ``<k_in>`` and ``<k_out>`` are the mean weighted in- and out-strength
(both equal total weight / n).
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg

from .graph import DiscourseGraph

EIG_PERTURBATION = 1e-6
ITER_TOL = 1e-10
MAX_ITER = 10_000


class MetricKind(str, Enum):
    DEGREE = "degree"
    BETWEENNESS = "betweenness"
    EIGENVECTOR = "eigenvector"
    AUTHORITY = "authority"
    HUB = "hub"
    STRENGTH = "strength"
    FUNNEL_BANDWIDTH = "funnel_bandwidth"
    AMPLIFICATION_BANDWIDTH = "amplification_bandwidth"


ALL_METRICS = tuple(MetricKind)
FOLLOWER_METRICS = (MetricKind.FUNNEL_BANDWIDTH, MetricKind.AMPLIFICATION_BANDWIDTH)


def parse_metrics(names: str | Iterable[str]) -> tuple[MetricKind, ...]:
    if isinstance(names, str):
        names = [n for n in names.split(",") if n.strip()]
    return tuple(MetricKind(n.strip()) for n in names)


@dataclass(frozen=True)
class MetricVector:
    kind: MetricKind
    values: Mapping[str, float]
    graph_kind: str
    window: tuple[float, float]

    def __getitem__(self, actor: str) -> float:
        return self.values[actor]

    def array(self, actors: Sequence[str]) -> np.ndarray:
        """Scores in ``actors`` order; actors absent from the graph get 0."""
        return np.array([self.values.get(a, 0.0) for a in actors], dtype=float)


def degree(W: np.ndarray) -> np.ndarray:
    n = W.shape[0]
    if n <= 1:
        raise ValueError("degree centrality needs at least 2 nodes")
    A = W > 0
    return (A.sum(axis=0) + A.sum(axis=1)) / (n - 1)


def strength(W: np.ndarray) -> np.ndarray:
    return W.sum(axis=0) + W.sum(axis=1)


def betweenness(W: np.ndarray, rtol: float = 1e-12) -> np.ndarray:
    """Brandes' algorithm on a weighted digraph with edge length ``1 / w``.

    Path lengths within ``rtol`` (relative) are treated as ties so that
    equal-length paths assembled from different reciprocals count together.
    Normalised by ``(n - 1)(n - 2)``.
    """
    n = W.shape[0]
    if n <= 1:
        raise ValueError("betweenness centrality needs at least 2 nodes")
    out = [[(int(j), 1.0 / W[i, j]) for j in np.flatnonzero(W[i])] for i in range(n)]
    bc = np.zeros(n)
    counter = itertools.count()
    for s in range(n):
        order = []
        preds: list[list[int]] = [[] for _ in range(n)]
        sigma = [0.0] * n
        sigma[s] = 1.0
        done = [False] * n
        seen: dict[int, float] = {s: 0.0}
        heap = [(0.0, next(counter), s, s)]
        while heap:
            dist, _, pred, v = heapq.heappop(heap)
            if done[v]:
                continue
            if v != s:
                sigma[v] += sigma[pred]
            done[v] = True
            order.append(v)
            for w, length in out[v]:
                if done[w]:
                    continue
                cand = dist + length
                tol = rtol * max(1.0, cand)
                if w not in seen or cand < seen[w] - tol:
                    seen[w] = cand
                    heapq.heappush(heap, (cand, next(counter), v, w))
                    sigma[w] = 0.0
                    preds[w] = [v]
                elif abs(cand - seen[w]) <= tol:
                    sigma[w] += sigma[v]
                    preds[w].append(v)
        delta = [0.0] * n
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
    if n <= 2:
        return np.zeros(n)
    return bc / ((n - 1) * (n - 2))


def _connected_mask(W: np.ndarray) -> np.ndarray:
    return (W.sum(axis=0) + W.sum(axis=1)) > 0


def eigenvector(W: np.ndarray, eps: float = EIG_PERTURBATION) -> np.ndarray:
    """Perron vector of ``W + eps`` with ``x_i ~ sum_j w_ij x_j``.

    The uniform perturbation makes the operator irreducible. It is applied
    to the nodes that have at least one edge; isolated nodes score 0. The
    iteration is shifted by the running eigenvalue estimate, which keeps
    the fixed point and damps eigenvalues of equal modulus on a circle
    (nilpotent and periodic graphs).
    """
    n = W.shape[0]
    scores = np.zeros(n)
    mask = _connected_mask(W)
    if not mask.any():
        return scores
    A = W[np.ix_(mask, mask)] + eps
    x = np.full(A.shape[0], 1.0 / np.sqrt(A.shape[0]))
    converged = False
    for _ in range(MAX_ITER):
        Ax = A @ x
        lam = float(x @ Ax)
        nxt = Ax + lam * x
        nxt /= np.linalg.norm(nxt)
        change = np.linalg.norm(nxt - x)
        x = nxt
        if change < ITER_TOL:
            converged = True
            break
    if not converged:
        x = _inverse_iteration(A, x, float(x @ A @ x))
    scores[mask] = x
    return scores


def _inverse_iteration(A: np.ndarray, x: np.ndarray, lam: float, steps: int = 50) -> np.ndarray:
    """Polish a stalled power iteration. Perturbed operators whose
    components have nearly equal spectral radii leave a relative eigengap
    of order ``eps``, too small for the power-iteration budget."""
    shift = lam * (1.0 + 1e-9)
    lu = scipy.linalg.lu_factor(A - shift * np.eye(A.shape[0]), check_finite=False)
    for _ in range(steps):
        nxt = scipy.linalg.lu_solve(lu, x, check_finite=False)
        nxt = np.abs(nxt) / np.linalg.norm(nxt)
        change = np.linalg.norm(nxt - x)
        x = nxt
        if change < ITER_TOL:
            break
    return x


def hits(W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hub and authority scores from the mutual recursion
    ``a = W^T h``, ``h = W a``, each L2-normalised, started from ``h = 1``."""
    n = W.shape[0]
    h = np.ones(n) / np.sqrt(max(n, 1))
    a = np.zeros(n)
    if not W.any():
        return np.zeros(n), np.zeros(n)
    for _ in range(MAX_ITER):
        a_new = W.T @ h
        a_new /= np.linalg.norm(a_new)
        h_new = W @ a_new
        h_new /= np.linalg.norm(h_new)
        change = max(np.linalg.norm(a_new - a), np.linalg.norm(h_new - h))
        a, h = a_new, h_new
        if change < ITER_TOL:
            break
    return h, a


def _follower_array(graph: DiscourseGraph, followers: Mapping[str, float] | None) -> np.ndarray:
    missing = [v for v in graph.nodes if followers is None or v not in followers]
    if missing:
        shown = ", ".join(missing[:5]) + (" ..." if len(missing) > 5 else "")
        raise KeyError(f"missing follower counts for: {shown}")
    return np.array([float(followers[v]) for v in graph.nodes])


def funnel_bandwidth(W: np.ndarray, f: np.ndarray) -> np.ndarray:
    total = W.sum()
    if total == 0:
        return np.zeros(W.shape[0])
    mean_in = total / W.shape[0]
    return f * W.sum(axis=0) / mean_in


def amplification_bandwidth(W: np.ndarray, f: np.ndarray) -> np.ndarray:
    total = W.sum()
    if total == 0:
        return np.zeros(W.shape[0])
    mean_out = total / W.shape[0]
    return (W @ f) / mean_out


def compute_array(
    W: np.ndarray, kind: MetricKind, f: np.ndarray | None = None
) -> np.ndarray:
    kind = MetricKind(kind)
    if kind is MetricKind.DEGREE:
        return degree(W)
    if kind is MetricKind.STRENGTH:
        return strength(W)
    if kind is MetricKind.BETWEENNESS:
        return betweenness(W)
    if kind is MetricKind.EIGENVECTOR:
        return eigenvector(W)
    if kind is MetricKind.HUB:
        return hits(W)[0]
    if kind is MetricKind.AUTHORITY:
        return hits(W)[1]
    if f is None:
        raise KeyError(f"{kind.value} needs follower counts")
    if kind is MetricKind.FUNNEL_BANDWIDTH:
        return funnel_bandwidth(W, f)
    return amplification_bandwidth(W, f)


def compute(
    graph: DiscourseGraph,
    kind: MetricKind | str,
    followers: Mapping[str, float] | None = None,
) -> MetricVector:
    kind = MetricKind(kind)
    f = _follower_array(graph, followers) if kind in FOLLOWER_METRICS else None
    values = compute_array(graph.adjacency(), kind, f)
    return MetricVector(kind, dict(zip(graph.nodes, map(float, values))), graph.kind, graph.window)


def compute_many(
    graph: DiscourseGraph,
    kinds: Sequence[MetricKind | str],
    followers: Mapping[str, float] | None = None,
) -> dict[MetricKind, MetricVector]:
    """Several metrics on one graph, sharing the adjacency and HITS pass."""
    kinds = [MetricKind(k) for k in kinds]
    W = graph.adjacency()
    f = _follower_array(graph, followers) if any(k in FOLLOWER_METRICS for k in kinds) else None
    hub_auth = hits(W) if {MetricKind.HUB, MetricKind.AUTHORITY} & set(kinds) else None
    out = {}
    for k in kinds:
        if k is MetricKind.HUB:
            values = hub_auth[0]
        elif k is MetricKind.AUTHORITY:
            values = hub_auth[1]
        else:
            values = compute_array(W, k, f)
        out[k] = MetricVector(k, dict(zip(graph.nodes, map(float, values))), graph.kind, graph.window)
    return out


@dataclass(frozen=True)
class NodalityMatrix:
    """``n x 2m`` matrix: ``kinds`` on the topic graph, then the same
    ``kinds`` in the same order on the null graph."""

    actors: tuple[str, ...]
    kinds: tuple[MetricKind, ...]
    values: np.ndarray

    @property
    def m(self) -> int:
        return len(self.kinds)

    @property
    def columns(self) -> list[str]:
        return [f"topic:{k.value}" for k in self.kinds] + [f"null:{k.value}" for k in self.kinds]

    def select(self, kinds: Sequence[MetricKind | str]) -> "NodalityMatrix":
        kinds = tuple(MetricKind(k) for k in kinds)
        pos = [self.kinds.index(k) for k in kinds]
        cols = pos + [p + self.m for p in pos]
        return NodalityMatrix(self.actors, kinds, self.values[:, cols])


def metric_matrix(
    topic_graph: DiscourseGraph,
    null_graph: DiscourseGraph,
    kinds: Sequence[MetricKind | str],
    followers: Mapping[str, float] | None = None,
    actors: Sequence[str] | None = None,
) -> NodalityMatrix:
    """Stack metrics from both graphs over a shared actor universe.

    The universe defaults to the union of both graphs' nodes (sorted); an
    actor missing from one graph scores 0 on that side.
    """
    kinds = tuple(MetricKind(k) for k in kinds)
    if not kinds:
        raise ValueError("at least one metric kind is required")
    if actors is None:
        actors = sorted(set(topic_graph.nodes) | set(null_graph.nodes))
    actors = tuple(actors)
    topic_side = compute_many(topic_graph, kinds, followers) if topic_graph.n else {}
    null_side = compute_many(null_graph, kinds, followers) if null_graph.n else {}
    zero = np.zeros(len(actors))
    cols = [topic_side[k].array(actors) if k in topic_side else zero for k in kinds]
    cols += [null_side[k].array(actors) if k in null_side else zero for k in kinds]
    return NodalityMatrix(actors, kinds, np.column_stack(cols))
