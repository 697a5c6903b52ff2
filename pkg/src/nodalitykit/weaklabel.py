"""Rule-based topic labelling functions and vote aggregation.

Each labelling function (LF) votes for one topic or abstains. Applying ``m``
LFs to ``n`` texts gives an ``n x m`` label matrix; aggregation turns a row
of votes into at most one topic.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

ABSTAIN = -1
UNLABELED = None
OTHER = "Other"

RULE_TYPES = ("keyword", "regex")


@dataclass(frozen=True)
class LabelingFunction:
    lf_id: str
    topic: str
    rule_type: str
    payload: str | tuple[str, ...]

    def __post_init__(self):
        if self.rule_type == "keyword":
            if isinstance(self.payload, str):
                object.__setattr__(self, "payload", (self.payload,))
            words = tuple(w.strip() for w in self.payload if w.strip())
            if not words:
                raise ValueError(f"LF {self.lf_id}: empty keyword set")
            object.__setattr__(self, "payload", words)
            alternation = "|".join(re.escape(w) for w in sorted(words, key=len, reverse=True))
            pattern = re.compile(rf"\b(?:{alternation})\b", re.IGNORECASE)
        elif self.rule_type == "regex":
            if not isinstance(self.payload, str):
                raise ValueError(f"LF {self.lf_id}: regex payload must be a string")
            try:
                pattern = re.compile(self.payload)
            except re.error as exc:
                raise ValueError(f"LF {self.lf_id}: regex does not compile: {exc}") from exc
        else:
            raise ValueError(f"LF {self.lf_id}: unknown rule type {self.rule_type!r}")
        object.__setattr__(self, "_pattern", pattern)

    def matches(self, text: str) -> bool:
        return self._pattern.search(text) is not None


def keyword_lf(lf_id: str, topic: str, keywords: Iterable[str]) -> LabelingFunction:
    return LabelingFunction(lf_id, topic, "keyword", tuple(keywords))


def regex_lf(lf_id: str, topic: str, pattern: str) -> LabelingFunction:
    return LabelingFunction(lf_id, topic, "regex", pattern)


def read_lfs(path: str | Path) -> list[LabelingFunction]:
    """JSON lines: ``lf_id``, ``topic``, ``rule_type`` and ``payload``."""
    lfs = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                payload = rec["payload"]
                if isinstance(payload, list):
                    payload = tuple(payload)
                lfs.append(LabelingFunction(rec["lf_id"], rec["topic"], rec["rule_type"], payload))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
    return lfs


def read_corpus(path: str | Path) -> tuple[list[str], list[str]]:
    """JSON lines with ``text_id`` and ``text``; returns (ids, texts)."""
    ids, texts = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rec = json.loads(line)
                ids.append(str(rec["text_id"]))
                texts.append(rec["text"])
    return ids, texts


@dataclass(frozen=True)
class LabelMatrix:
    """Votes as topic indices into ``topics``; ``ABSTAIN`` where an LF abstains."""

    values: np.ndarray
    topics: tuple[str, ...]
    lf_ids: tuple[str, ...]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def apply_lfs(
    lfs: Sequence[LabelingFunction],
    corpus: Sequence[str],
    topics: Sequence[str] | None = None,
) -> LabelMatrix:
    if not lfs:
        raise ValueError("at least one labelling function is required")
    topics = tuple(sorted({lf.topic for lf in lfs})) if topics is None else tuple(topics)
    index = {t: i for i, t in enumerate(topics)}
    unknown = {lf.topic for lf in lfs} - index.keys()
    if unknown:
        raise ValueError(f"LF topics not in topic list: {sorted(unknown)}")
    values = np.full((len(corpus), len(lfs)), ABSTAIN, dtype=np.int64)
    for j, lf in enumerate(lfs):
        vote = index[lf.topic]
        for i, text in enumerate(corpus):
            if lf.matches(text):
                values[i, j] = vote
    return LabelMatrix(values, topics, tuple(lf.lf_id for lf in lfs))


def lf_accuracies(matrix: LabelMatrix, gold: Sequence[str | None]) -> np.ndarray:
    """Laplace-smoothed accuracy of each LF over its non-abstaining gold votes."""
    if len(gold) != matrix.shape[0]:
        raise ValueError("gold labels must align with matrix rows")
    index = {t: i for i, t in enumerate(matrix.topics)}
    truth = np.array([index.get(g, ABSTAIN) if g is not None else ABSTAIN for g in gold])
    votes = matrix.values
    fired = votes != ABSTAIN
    correct = (votes == truth[:, None]) & fired
    return (correct.sum(axis=0) + 1.0) / (fired.sum(axis=0) + 2.0)


def _winner(scores: dict[int, float], topics: Sequence[str]) -> str | None:
    if not scores:
        return UNLABELED
    best = max(scores.values())
    if best <= 0:
        return UNLABELED
    leaders = [k for k, v in scores.items() if math.isclose(v, best, rel_tol=1e-12, abs_tol=1e-12)]
    if len(leaders) > 1:
        return UNLABELED
    return topics[leaders[0]]


def aggregate(
    matrix: LabelMatrix,
    policy: str = "majority",
    *,
    gold_matrix: LabelMatrix | None = None,
    gold_labels: Sequence[str | None] | None = None,
) -> list[str | None]:
    """Collapse each row of votes to one topic, or ``UNLABELED``.

    ``majority`` takes the plurality of non-abstaining votes. ``weighted``
    assumes LFs err independently given the true topic with a symmetric
    error rate, so each vote counts with its log-odds weight
    ``log((K - 1) * acc / (1 - acc))``, clipped at zero; accuracies come from
    the gold set. All-abstain rows and ties are unlabelled.
    """
    if policy == "majority":
        weights = np.ones(matrix.shape[1])
    elif policy == "weighted":
        if gold_matrix is None or gold_labels is None:
            raise ValueError("weighted aggregation needs a gold label matrix and gold labels")
        if gold_matrix.lf_ids != matrix.lf_ids or gold_matrix.topics != matrix.topics:
            raise ValueError("gold matrix must use the same LFs and topics")
        acc = lf_accuracies(gold_matrix, gold_labels)
        n_classes = max(len(matrix.topics), 2)
        weights = np.clip(np.log((n_classes - 1) * acc / (1.0 - acc)), 0.0, None)
    else:
        raise ValueError(f"unknown aggregation policy {policy!r}")

    labels = []
    for row in matrix.values:
        scores: dict[int, float] = {}
        for vote, w in zip(row, weights):
            if vote != ABSTAIN:
                scores[int(vote)] = scores.get(int(vote), 0.0) + float(w)
        labels.append(_winner(scores, matrix.topics))
    return labels


def multilabel(matrix: LabelMatrix, min_votes: int = 1) -> list[frozenset[str]]:
    """Independent binary decision per topic: a text carries every topic
    that received at least ``min_votes`` votes."""
    out = []
    for row in matrix.values:
        counts = Counter(int(v) for v in row if v != ABSTAIN)
        out.append(frozenset(matrix.topics[t] for t, c in counts.items() if c >= min_votes))
    return out


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are actual classes, columns predicted; ``Other`` first.

    ``rates`` is row-normalised, so the diagonal holds per-class recall.
    Rows for classes absent from the gold labels are all zero.
    """

    classes: tuple[str, ...]
    counts: np.ndarray
    rates: np.ndarray

    def recall(self) -> dict[str, float]:
        return {c: float(self.rates[i, i]) for i, c in enumerate(self.classes) if self.counts[i].sum()}

    def to_rows(self) -> list[dict]:
        return [
            {"actual": c, **{p: float(self.rates[i, j]) for j, p in enumerate(self.classes)}}
            for i, c in enumerate(self.classes)
        ]


def _as_class(label: str | None) -> str:
    return OTHER if label is None or label == OTHER else label


def evaluate(predicted: Sequence[str | None], gold: Sequence[str | None]) -> ConfusionMatrix:
    if len(predicted) != len(gold):
        raise ValueError(f"length mismatch: {len(predicted)} predicted vs {len(gold)} gold")
    pred = [_as_class(p) for p in predicted]
    actual = [_as_class(g) for g in gold]
    classes = (OTHER,) + tuple(sorted((set(pred) | set(actual)) - {OTHER}))
    index = {c: i for i, c in enumerate(classes)}
    counts = np.zeros((len(classes), len(classes)), dtype=np.int64)
    for a, p in zip(actual, pred):
        counts[index[a], index[p]] += 1
    totals = counts.sum(axis=1, keepdims=True)
    rates = np.divide(counts, totals, out=np.zeros(counts.shape), where=totals > 0)
    return ConfusionMatrix(classes, counts, rates)
