"""Inherent and active nodality from a topic/null centrality matrix.

PC1 of the z-scored ``n x 2m`` matrix is read as inherent nodality (high on
both networks) and PC2 as active nodality (high on the topic network, low on
the null network). The eigenvector test checks that the loadings actually
have that sign structure before the reading is trusted.
"""

from __future__ import annotations

import itertools
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .centrality import ALL_METRICS, MetricKind, NodalityMatrix

log = logging.getLogger(__name__)

LOADING_EPS = 0.01
TIERS = ("leader", "funneler", "receiver")
DEFAULT_SEED = 42
DEFAULT_RESTARTS = 100


class DegenerateMatrixError(ValueError):
    pass


@dataclass(frozen=True)
class PcaResult:
    actors: tuple[str, ...]
    columns: tuple[str, ...]
    means: np.ndarray
    stds: np.ndarray
    eigenvalues: np.ndarray
    loadings: np.ndarray  # column k is e_{k+1}
    coordinates: np.ndarray

    @property
    def m(self) -> int:
        return len(self.columns) // 2

    def transform(self, rows: np.ndarray) -> np.ndarray:
        """Project raw metric rows with the fitted standardisation."""
        return ((np.atleast_2d(rows) - self.means) / self.stds) @ self.loadings


def _flip(v: np.ndarray, key: float, tol: float = 1e-9) -> bool:
    """Whether to negate ``v``: by the sign of ``key`` when it is clearly
    nonzero, else so the first non-negligible entry is positive."""
    if abs(key) > tol:
        return key < 0
    lead = np.flatnonzero(np.abs(v) > tol)
    return bool(len(lead)) and v[lead[0]] < 0


def pca(matrix: NodalityMatrix | np.ndarray, columns: Sequence[str] | None = None) -> PcaResult:
    """Eigen-decomposition of the correlation matrix (covariance of z-scored
    columns, ``ddof=1``), eigenvalues in non-increasing order.

    Signs are canonical: ``e_1`` has a positive loading sum and ``e_2`` a
    positive mean over the first half (topic-network) of its loadings. Later
    components, and ties in either rule, take a positive first entry.
    """
    if isinstance(matrix, NodalityMatrix):
        actors, columns, X = matrix.actors, tuple(matrix.columns), np.asarray(matrix.values, float)
    else:
        X = np.asarray(matrix, float)
        actors = tuple(str(i) for i in range(X.shape[0]))
        columns = tuple(columns) if columns is not None else tuple(f"c{j}" for j in range(X.shape[1]))
    n, p = X.shape
    if n < 3:
        raise DegenerateMatrixError(f"PCA needs at least 3 rows, got {n}")
    means = X.mean(axis=0)
    stds = X.std(axis=0, ddof=1)
    flat = [columns[j] for j in range(p) if not stds[j] > 1e-12 * max(1.0, abs(means[j]))]
    if flat:
        raise DegenerateMatrixError(f"zero-variance column(s): {', '.join(flat)}")
    Z = (X - means) / stds
    corr = Z.T @ Z / (n - 1)
    vals, vecs = np.linalg.eigh((corr + corr.T) / 2)
    order = np.argsort(vals)[::-1]
    vals = np.clip(vals[order], 0.0, None)
    vecs = vecs[:, order]
    for k in range(p):
        key = vecs[:, 0].sum() if k == 0 else vecs[: p // 2, 1].mean() if k == 1 else 0.0
        if _flip(vecs[:, k], key):
            vecs[:, k] *= -1
    return PcaResult(tuple(actors), tuple(columns), means, stds, vals, vecs, Z @ vecs)


def eigenvector_test(
    result: PcaResult | np.ndarray, m: int | None = None, eps: float = LOADING_EPS
) -> bool:
    """Sign-pattern check on the first two loading vectors.

    Passes iff every loading of ``e_1`` has one sign, and ``e_2`` has one
    sign on the ``m`` topic columns and the opposite sign on the ``m`` null
    columns. Any loading with magnitude below ``eps`` fails.
    """
    L = result.loadings if isinstance(result, PcaResult) else np.asarray(result, float)
    if m is None:
        m = L.shape[0] // 2
    if L.shape[0] != 2 * m or L.ndim != 2 or L.shape[1] < 2:
        raise ValueError(f"expected a {2 * m} x k loading matrix with k >= 2, got {L.shape}")
    e1, e2 = L[:, 0], L[:, 1]
    if np.any(np.abs(e1) < eps) or np.any(np.abs(e2) < eps):
        return False
    if not (np.all(e1 > 0) or np.all(e1 < 0)):
        return False
    topic, null = np.sign(e2[:m]), np.sign(e2[m:])
    return bool(np.all(topic == topic[0]) and np.all(null == -topic[0]))


@dataclass(frozen=True)
class TierAssignment:
    tiers: Mapping[str, str]
    centroids: np.ndarray  # row i is the centroid of TIERS[i]
    inertia: float

    def members(self, tier: str) -> frozenset[str]:
        return frozenset(a for a, t in self.tiers.items() if t == tier)


def _kmeans_pp(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [X[rng.integers(len(X))]]
    d2 = ((X - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        idx = rng.choice(len(X), p=d2 / total) if total > 0 else rng.integers(len(X))
        centers.append(X[idx])
        d2 = np.minimum(d2, ((X - X[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def _lloyd(X: np.ndarray, centers: np.ndarray, max_iter: int) -> tuple[np.ndarray, np.ndarray, float]:
    labels = None
    for _ in range(max_iter):
        d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = d2.argmin(axis=1)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        for j in range(len(centers)):
            members = X[labels == j]
            if len(members):
                centers[j] = members.mean(axis=0)
    d2 = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    labels = d2.argmin(axis=1)
    inertia = float(d2[np.arange(len(X)), labels].sum())
    return labels, centers, inertia


def kmeans(
    X: np.ndarray, k: int, *, seed: int = DEFAULT_SEED, restarts: int = DEFAULT_RESTARTS, max_iter: int = 300
) -> tuple[np.ndarray, np.ndarray, float]:
    """Best of ``restarts`` k-means++ initialised Lloyd runs by inertia."""
    X = np.asarray(X, float)
    if len(np.unique(X, axis=0)) < k:
        raise ValueError(f"need at least {k} distinct points for k-means")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(restarts):
        run = _lloyd(X, _kmeans_pp(X, k, rng), max_iter)
        if best is None or run[2] < best[2] - 1e-12:
            best = run
    return best


def cluster(
    result: PcaResult, k: int = 3, *, seed: int = DEFAULT_SEED, restarts: int = DEFAULT_RESTARTS
) -> TierAssignment:
    """k-means on (PC1, PC2); clusters ranked by centroid PC1 become
    leader > funneler > receiver."""
    if k != len(TIERS):
        raise ValueError(f"tiering is defined for k={len(TIERS)} only")
    X = result.coordinates[:, :2]
    labels, centers, inertia = kmeans(X, k, seed=seed, restarts=restarts)
    rank = np.argsort(-centers[:, 0], kind="stable")
    tier_of = {int(c): TIERS[r] for r, c in enumerate(rank)}
    tiers = {a: tier_of[int(l)] for a, l in zip(result.actors, labels)}
    return TierAssignment(tiers, centers[rank], inertia)


@dataclass(frozen=True)
class NodalityScores:
    """actor -> (inherent, active) = (PC1, PC2) coordinates."""

    scores: Mapping[str, tuple[float, float]]

    def inherent(self, actor: str) -> float:
        return self.scores[actor][0]

    def active(self, actor: str) -> float:
        return self.scores[actor][1]

    def __contains__(self, actor: str) -> bool:
        return actor in self.scores


def nodality_scores(result: PcaResult, extra_actors: Sequence[str] = ()) -> NodalityScores:
    """PC1/PC2 per row. ``extra_actors`` absent from the matrix are projected
    as all-zero metric rows (no interactions in the window)."""
    scores = {a: (float(c[0]), float(c[1])) for a, c in zip(result.actors, result.coordinates)}
    missing = [a for a in extra_actors if a not in scores]
    if missing:
        zero = result.transform(np.zeros(len(result.columns)))[0]
        for a in missing:
            scores[a] = (float(zero[0]), float(zero[1]))
    return NodalityScores(scores)


@dataclass
class SubsetResult:
    metrics: tuple[str, ...]
    passed: dict[str, bool]
    reason: dict[str, str] = field(default_factory=dict)
    intersection: int | None = None

    @property
    def passes_all(self) -> bool:
        return all(self.passed.values())

    def to_dict(self) -> dict:
        return {
            "metrics": list(self.metrics),
            "passed": self.passed,
            "reason": self.reason,
            "intersection": self.intersection,
        }


@dataclass
class CombinationReport:
    topics: tuple[str, ...]
    results: list[SubsetResult]
    selected: tuple[str, ...] | None
    leaders: dict[str, list[str]] = field(default_factory=dict)

    @property
    def evaluated(self) -> int:
        return len(self.results)

    def to_dict(self) -> dict:
        return {
            "topics": list(self.topics),
            "evaluated": self.evaluated,
            "selected": list(self.selected) if self.selected else None,
            "shared_leaders": self.leaders,
            "subsets": [r.to_dict() for r in self.results],
        }


def select_subset(results: Sequence[SubsetResult]) -> SubsetResult | None:
    """Largest leader intersection; ties go to the smaller subset, then to
    the lexicographically smaller tuple of metric names."""
    passing = [r for r in results if r.passes_all and r.intersection is not None]
    if not passing:
        return None
    return min(passing, key=lambda r: (-r.intersection, len(r.metrics), tuple(sorted(r.metrics))))


def metric_subsets(kinds: Sequence[MetricKind | str], min_size: int = 3) -> list[tuple[MetricKind, ...]]:
    kinds = [MetricKind(k) for k in kinds]
    return [c for r in range(min_size, len(kinds) + 1) for c in itertools.combinations(kinds, r)]


def _evaluate_subset(subset, per_topic, eps, seed, restarts):
    names = tuple(k.value for k in subset)
    passed, reason, fits = {}, {}, {}
    for topic, matrix in per_topic.items():
        try:
            fit = pca(matrix.select(subset))
        except DegenerateMatrixError as exc:
            passed[topic], reason[topic] = False, str(exc)
            continue
        passed[topic] = eigenvector_test(fit, len(subset), eps)
        fits[topic] = fit
    result = SubsetResult(names, passed, reason)
    leader_sets = {}
    if result.passes_all:
        for topic, fit in fits.items():
            try:
                leader_sets[topic] = cluster(fit, seed=seed, restarts=restarts).members("leader")
            except ValueError as exc:
                result.passed[topic], result.reason[topic] = False, str(exc)
        if result.passes_all:
            shared = frozenset.intersection(*leader_sets.values())
            result.intersection = len(shared)
            return result, sorted(shared)
    return result, []


def search_combinations(
    per_topic: Mapping[str, NodalityMatrix],
    kinds: Sequence[MetricKind | str] = ALL_METRICS,
    min_size: int = 3,
    *,
    eps: float = LOADING_EPS,
    seed: int = DEFAULT_SEED,
    restarts: int = DEFAULT_RESTARTS,
    threads: int = 1,
) -> CombinationReport:
    """Try every metric subset of size ``>= min_size``.

    ``per_topic`` maps each topic to a matrix holding at least ``kinds`` on
    both networks, all over one shared actor universe. Subsets passing the
    eigenvector test on every topic are clustered per topic; the one whose
    leader tiers share the most actors across topics is selected.
    """
    if len(per_topic) < 2:
        raise ValueError("combination search needs at least two topics")
    universes = {m.actors for m in per_topic.values()}
    if len(universes) != 1:
        raise ValueError("all topic matrices must share one actor universe")
    subsets = metric_subsets(kinds, min_size)

    def run(subset):
        return _evaluate_subset(subset, per_topic, eps, seed, restarts)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            outcomes = list(pool.map(run, subsets))
    else:
        outcomes = [run(s) for s in subsets]
    results = [r for r, _ in outcomes]
    shared = {",".join(r.metrics): s for r, s in outcomes if r.intersection is not None}
    best = select_subset(results)
    if best is None:
        log.warning("no metric subset passed the eigenvector test on every topic")
    return CombinationReport(
        topics=tuple(per_topic),
        results=results,
        selected=best.metrics if best else None,
        leaders={",".join(best.metrics): shared[",".join(best.metrics)]} if best else {},
    )
