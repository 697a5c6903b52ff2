"""Independent reference computations used only by the tests."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np


def brute_betweenness(W: np.ndarray) -> np.ndarray:
    """Enumerate every simple path between every ordered pair, with exact
    rational lengths ``sum 1/w``, and count shortest-path interior visits."""
    n = W.shape[0]
    succ = {i: [j for j in range(n) if W[i, j] > 0] for i in range(n)}
    length = {(i, j): Fraction(1) / Fraction(W[i, j]).limit_denominator(10**9)
              for i in range(n) for j in succ[i]}
    bc = np.zeros(n)
    for s in range(n):
        paths: dict[int, list[tuple[Fraction, tuple[int, ...]]]] = {t: [] for t in range(n)}
        stack = [(s, (s,), Fraction(0))]
        while stack:
            v, path, d = stack.pop()
            if v != s:
                paths[v].append((d, path))
            for w in succ[v]:
                if w not in path:
                    stack.append((w, path + (w,), d + length[(v, w)]))
        for t in range(n):
            if t == s or not paths[t]:
                continue
            best = min(d for d, _ in paths[t])
            shortest = [p for d, p in paths[t] if d == best]
            for p in shortest:
                for v in p[1:-1]:
                    bc[v] += 1.0 / len(shortest)
    if n <= 2:
        return np.zeros(n)
    return bc / ((n - 1) * (n - 2))


def _length(w: float) -> Fraction:
    return Fraction(1) / Fraction(w).limit_denominator(10**9)


def exact_betweenness(W: np.ndarray) -> np.ndarray:
    """Pair-dependency form: exact rational Floyd-Warshall distances, path
    counts over the shortest-path DAG, then
    ``sum_{s,t} sigma_sv * sigma_vt / sigma_st`` where ``d(s,v) + d(v,t) = d(s,t)``."""
    n = W.shape[0]
    d = [[Fraction(0) if i == j else (_length(W[i, j]) if W[i, j] > 0 else None) for j in range(n)]
         for i in range(n)]
    for k in range(n):
        for i in range(n):
            if d[i][k] is None:
                continue
            for j in range(n):
                if d[k][j] is None:
                    continue
                c = d[i][k] + d[k][j]
                if d[i][j] is None or c < d[i][j]:
                    d[i][j] = c
    sigma = [[0] * n for _ in range(n)]
    for s in range(n):
        sigma[s][s] = 1
        reach = sorted((t for t in range(n) if d[s][t] is not None), key=lambda t: d[s][t])
        for t in reach:
            if t != s:
                sigma[s][t] = sum(
                    sigma[s][u] for u in range(n)
                    if W[u, t] > 0 and d[s][u] is not None and d[s][u] + _length(W[u, t]) == d[s][t]
                )
    bc = np.zeros(n)
    for s, t, v in itertools.permutations(range(n), 3):
        if None in (d[s][t], d[s][v], d[v][t]):
            continue
        if d[s][v] + d[v][t] == d[s][t]:
            bc[v] += sigma[s][v] * sigma[v][t] / sigma[s][t]
    if n <= 2:
        return np.zeros(n)
    return bc / ((n - 1) * (n - 2))


def dense_eigenvector(W: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    n = W.shape[0]
    out = np.zeros(n)
    mask = (W.sum(axis=0) + W.sum(axis=1)) > 0
    if not mask.any():
        return out
    A = W[np.ix_(mask, mask)] + eps
    vals, vecs = np.linalg.eig(A)
    v = np.abs(np.real(vecs[:, np.argmax(np.real(vals))]))
    out[mask] = v / np.linalg.norm(v)
    return out


def _top_projection(S: np.ndarray, x: np.ndarray, rtol: float = 1e-9) -> np.ndarray:
    vals, vecs = np.linalg.eigh(S)
    top = vals[-1]
    if top <= 0:
        return np.zeros_like(x)
    keep = vecs[:, vals >= top * (1 - rtol)]
    p = keep @ (keep.T @ x)
    return p / np.linalg.norm(p)


def dense_hits(W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Hub = top eigenspace of W W^T applied to 1; authority = top
    eigenspace of W^T W applied to W^T 1."""
    n = W.shape[0]
    if not W.any():
        return np.zeros(n), np.zeros(n)
    hub = _top_projection(W @ W.T, np.ones(n))
    auth = _top_projection(W.T @ W, W.T @ np.ones(n))
    return hub, auth


def plugin_entropy(symbols) -> float:
    counts = Counter(symbols)
    n = sum(counts.values())
    return -sum(c / n * math.log2(c / n) for c in counts.values())


def brute_transfer_entropy(x, y, k: int = 1) -> float:
    """``H(Y+ | Y-) - H(Y+ | Y-, X-)`` from explicit joint tables."""
    rows = [(y[t + 1], tuple(y[t - k + 1:t + 1]), tuple(x[t - k + 1:t + 1])) for t in range(k - 1, len(y) - 1)]
    h_next_hist = plugin_entropy([(a, b) for a, b, _ in rows]) - plugin_entropy([b for _, b, _ in rows])
    h_next_both = plugin_entropy(rows) - plugin_entropy([(b, c) for _, b, c in rows])
    return h_next_hist - h_next_both


def all_binary(length: int):
    return itertools.product((0, 1), repeat=length)


def loop_degree(W):
    n = len(W)
    return np.array([sum(int(W[i, j] > 0) + int(W[j, i] > 0) for j in range(n)) / (n - 1) for i in range(n)])


def loop_strength(W):
    n = len(W)
    return np.array([sum(W[i, j] + W[j, i] for j in range(n)) for i in range(n)])


def loop_bandwidths(W, f):
    """(funnel, amplification) by explicit sums over nodes and edges."""
    n = len(W)
    mean_in = sum(W[h, i] for h in range(n) for i in range(n)) / n
    mean_out = mean_in
    if mean_in == 0:
        return np.zeros(n), np.zeros(n)
    nu = [f[i] * sum(W[h, i] for h in range(n)) / mean_in for i in range(n)]
    mu = [sum(f[j] * W[i, j] for j in range(n)) / mean_out for i in range(n)]
    return np.array(nu), np.array(mu)


def random_graph(rng: np.random.Generator, n: int, p: float | None = None, wmax: int = 5) -> np.ndarray:
    """Directed graph without self-loops and with integer weights in 1..wmax."""
    p = rng.uniform(0.1, 0.9) if p is None else p
    W = (rng.random((n, n)) < p) * rng.integers(1, wmax + 1, size=(n, n))
    np.fill_diagonal(W, 0)
    return W.astype(float)


def all_topologies(n: int):
    """Every 0/1 adjacency on ``n`` labelled nodes without self-loops."""
    slots = [(i, j) for i in range(n) for j in range(n) if i != j]
    for bits in itertools.product((0, 1), repeat=len(slots)):
        W = np.zeros((n, n))
        for (i, j), b in zip(slots, bits):
            W[i, j] = b
        yield W


def _entropy_of_tables(tables):
    """Plug-in entropy (bits) per cell over a stack of count tables."""
    counts = np.stack(tables).astype(float)
    total = counts.sum(axis=0)
    p = np.divide(counts, total, out=np.zeros_like(counts), where=total > 0)
    logs = np.log2(p, out=np.zeros_like(p), where=p > 0)
    return -(p * logs).sum(axis=0)


def binary_te_table(length: int) -> tuple[list[tuple[int, ...]], np.ndarray]:
    """T(X->Y) with lag 1 for every pair of binary series of one length.

    Joint counts come from indicator matrix products, and TE from the chain
    rule ``H(Y+, Y-) - H(Y-) - H(Y+, Y-, X-) + H(Y-, X-)``. Entry ``[j, i]``
    is ``T(series[i] -> series[j])``.
    """
    series = list(all_binary(length))
    S = np.array(series, dtype=np.int64)
    nxt, hist = S[:, 1:], S[:, :-1]
    ind_y = {(a, b): ((nxt == a) & (hist == b)).astype(float) for a in (0, 1) for b in (0, 1)}
    ind_h = {b: (hist == b).astype(float) for b in (0, 1)}
    triple = [ind_y[a, b] @ ind_h[c].T for a in (0, 1) for b in (0, 1) for c in (0, 1)]
    pair_yx = [ind_h[b] @ ind_h[c].T for b in (0, 1) for c in (0, 1)]
    ones = np.ones((1, len(series)))
    pair_yy = [ind_y[a, b].sum(axis=1, keepdims=True) @ ones for a in (0, 1) for b in (0, 1)]
    single = [ind_h[b].sum(axis=1, keepdims=True) @ ones for b in (0, 1)]
    te = (_entropy_of_tables(pair_yy) - _entropy_of_tables(single)
          - _entropy_of_tables(triple) + _entropy_of_tables(pair_yx))
    return series, te
