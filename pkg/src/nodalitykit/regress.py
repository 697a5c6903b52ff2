"""OLS linking a group's share of influence to its nodality.

    phi(G, not G, t) = const + gamma * t + a_inh * PC1_G + a_act * PC2_G + beta * (PC1 x PC2)_G

where the group terms aggregate members' scores by mean (default) or sum.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .influence import InfluenceRecord
from .ingest import GroupAssignment
from .nodality import NodalityScores

PREDICTORS = ("inherent", "active", "interaction", "time")
TERMS = PREDICTORS + ("intercept",)


@dataclass(frozen=True)
class DesignRow:
    group: str
    topic: str
    window: int
    phi: float
    inherent: float
    active: float
    interaction: float
    time: float


def build_design(
    influence: Iterable[InfluenceRecord],
    scores: Mapping[tuple[str, int], NodalityScores],
    groups: GroupAssignment,
    aggregate: str = "mean",
) -> list[DesignRow]:
    """One row per influence record, with group-level nodality taken from
    the snapshot ``scores[(topic, window_index)]``.

    Members missing from a snapshot are skipped; a group with no scored
    member in a window is an error, as is a record with no snapshot.
    """
    if aggregate not in ("mean", "sum"):
        raise ValueError(f"aggregate must be 'mean' or 'sum', got {aggregate!r}")
    reduce = np.mean if aggregate == "mean" else np.sum
    rows = []
    for rec in influence:
        key = (rec.topic, rec.window_index)
        if key not in scores:
            raise KeyError(f"no nodality snapshot for topic {rec.topic!r}, window {rec.window_index}")
        snap = scores[key]
        members = [a for a in sorted(groups.members(rec.group)) if a in snap]
        if not members:
            raise ValueError(f"group {rec.group!r} has no scored members in window {rec.window_index}")
        pc1 = np.array([snap.inherent(a) for a in members])
        pc2 = np.array([snap.active(a) for a in members])
        rows.append(
            DesignRow(
                group=rec.group,
                topic=rec.topic,
                window=rec.window_index,
                phi=rec.phi,
                inherent=float(reduce(pc1)),
                active=float(reduce(pc2)),
                interaction=float(reduce(pc1 * pc2)),
                time=float(rec.window_index),
            )
        )
    return rows


@dataclass(frozen=True)
class Coefficient:
    estimate: float
    std_error: float
    t: float
    p_value: float


@dataclass(frozen=True)
class RegressionResult:
    coefficients: Mapping[str, Coefficient]
    n: int
    r_squared: float
    covariance: str = "classical"
    aggregate: str = "mean"

    def __getitem__(self, term: str) -> Coefficient:
        return self.coefficients[term]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "r_squared": self.r_squared,
            "covariance": self.covariance,
            "aggregate": self.aggregate,
            "coefficients": {k: asdict(v) for k, v in self.coefficients.items()},
        }


class RankDeficientError(ValueError):
    pass


def _dependent_columns(X: np.ndarray, names: Sequence[str]) -> list[str]:
    bad, kept = [], []
    for j, name in enumerate(names):
        trial = X[:, kept + [j]]
        if np.linalg.matrix_rank(trial) < len(kept) + 1:
            bad.append(name)
        else:
            kept.append(j)
    return bad


def design_matrix(rows: Sequence[DesignRow]) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([[getattr(r, p) for p in PREDICTORS] + [1.0] for r in rows], dtype=float)
    y = np.array([r.phi for r in rows], dtype=float)
    return X, y


def fit_ols(rows: Sequence[DesignRow], *, robust: bool = False, aggregate: str = "mean") -> RegressionResult:
    """OLS with intercept. Standard errors are classical
    ``sigma^2 (X'X)^-1`` unless ``robust`` (HC1); p-values two-sided from
    t with ``N - 5`` degrees of freedom."""
    X, y = design_matrix(rows)
    n, p = X.shape
    if n <= p:
        raise ValueError(f"need more than {p} rows, got {n}")
    if not np.isfinite(X).all() or not np.isfinite(y).all():
        raise ValueError("design contains non-finite values")
    bad = _dependent_columns(X, TERMS)
    if bad:
        raise RankDeficientError(f"design matrix is rank deficient; dependent column(s): {', '.join(bad)}")
    XtX_inv = np.linalg.inv(X.T @ X)
    beta = XtX_inv @ (X.T @ y)
    resid = y - X @ beta
    dof = n - p
    ssr = float(resid @ resid)
    if robust:
        meat = (X * resid[:, None] ** 2).T @ X
        cov = XtX_inv @ meat @ XtX_inv * n / dof
    else:
        cov = XtX_inv * ssr / dof
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / se, np.where(beta == 0, 0.0, np.inf))
    pvals = 2 * stats.t.sf(np.abs(t), dof)
    sst = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ssr / sst if sst > 0 else 0.0
    coefs = {name: Coefficient(float(b), float(s), float(tv), float(pv))
             for name, b, s, tv, pv in zip(TERMS, beta, se, t, pvals)}
    return RegressionResult(coefs, n, float(min(max(r2, 0.0), 1.0)), "HC1" if robust else "classical", aggregate)


DESIGN_COLUMNS = ("group", "topic", "window", "phi", "inherent", "active", "interaction", "time")


def write_design(rows: Sequence[DesignRow], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DESIGN_COLUMNS)
        for r in rows:
            writer.writerow([r.group, r.topic, r.window] + [repr(getattr(r, c)) for c in DESIGN_COLUMNS[3:]])


def read_design(path: str | Path) -> list[DesignRow]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [
            DesignRow(
                group=row["group"],
                topic=row["topic"],
                window=int(row["window"]),
                **{c: float(row[c]) for c in DESIGN_COLUMNS[3:]},
            )
            for row in csv.DictReader(fh)
        ]


def write_result(result: RegressionResult, path: str | Path) -> None:
    Path(path).write_text(json.dumps(result.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
