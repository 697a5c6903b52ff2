"""End-to-end run: events and roster in, scores, influence and regression out.

Every stage writes its artifacts as soon as it finishes, so a failure later
on leaves the upstream outputs in place. Expensive stages are memoised in a
pickle cache keyed by a hash of their inputs.
"""

from __future__ import annotations

import contextlib
import csv
import dataclasses
import hashlib
import json
import logging
import pickle
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Sequence

import numpy as np
import scipy
import yaml

from . import __version__
from .centrality import ALL_METRICS, NodalityMatrix, metric_matrix, parse_metrics
from .graph import DAY, build_network, snapshot_series, study_range, tile_windows, write_dot, write_graphml
from .influence import InfluenceRecord, group_influence_table
from .ingest import assign_groups, followers_of, load_roster, read_events
from .nodality import (
    DEFAULT_RESTARTS,
    DEFAULT_SEED,
    DegenerateMatrixError,
    NodalityScores,
    cluster,
    eigenvector_test,
    nodality_scores,
    pca,
    search_combinations,
)
from .regress import build_design, fit_ols, write_design, write_result
from .weaklabel import aggregate, apply_lfs, multilabel, read_corpus, read_lfs

log = logging.getLogger(__name__)

LABEL_MODES = ("multilabel", "majority")


class StageError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage


@dataclass
class PipelineConfig:
    events: str
    roster: str
    topics: list[str]
    out_dir: str = "out"
    lfs: str | None = None
    corpus: str | None = None
    label_mode: str = "multilabel"
    window_days: int = 14
    metrics: str | list[str] = "search"
    min_subset: int = 3
    seed: int = DEFAULT_SEED
    restarts: int = DEFAULT_RESTARTS
    lag: int = 1
    bins: int = 2
    bin_days: float = 1
    pool_windows: bool = False
    aggregate: str = "mean"
    robust: bool = False
    null_excludes_labeled: bool = False
    threads: int = 1
    cache: bool = True

    def validate(self) -> None:
        if not self.topics:
            raise ValueError("topics must be nonempty")
        for name in ("events", "roster", "lfs", "corpus"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise FileNotFoundError(f"{name} file not found: {path}")
        if (self.lfs is None) != (self.corpus is None):
            raise ValueError("lfs and corpus must be given together")
        if self.label_mode not in LABEL_MODES:
            raise ValueError(f"label_mode must be one of {LABEL_MODES}")
        if self.metrics != "search":
            parse_metrics(self.metrics)
        if self.aggregate not in ("mean", "sum"):
            raise ValueError("aggregate must be 'mean' or 'sum'")

    @classmethod
    def from_dict(cls, data: Mapping[str, Any], base: str | Path | None = None) -> "PipelineConfig":
        """Unknown keys are rejected; relative paths resolve against ``base``."""
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        data = dict(data)
        if base is not None:
            for key in ("events", "roster", "lfs", "corpus", "out_dir"):
                if data.get(key) is not None and not Path(data[key]).is_absolute():
                    data[key] = str(Path(base) / data[key])
        return cls(**data)

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        """YAML or JSON (a JSON document is valid YAML)."""
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: expected a mapping")
        return cls.from_dict(data, base=Path(path).parent)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def digest(self) -> str:
        """Hash of the analysis settings (paths and plumbing excluded)."""
        skip = {"events", "roster", "lfs", "corpus", "out_dir", "threads", "cache"}
        settings = {k: v for k, v in self.to_dict().items() if k not in skip}
        return _sha256(json.dumps(settings, sort_keys=True).encode())


@dataclass
class PipelineResult:
    status: int
    artifacts: dict[str, Path] = field(default_factory=dict)
    selected: tuple[str, ...] | None = None


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _file_hash(path: str | Path) -> str:
    return _sha256(Path(path).read_bytes())


def _fmt(x: float) -> str:
    return repr(float(x))


@contextlib.contextmanager
def _stage(name: str):
    log.info("stage %s", name)
    try:
        yield
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


class _Run:
    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out = Path(cfg.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.artifacts: dict[str, Path] = {}
        self.input_key = _sha256(
            "|".join(
                [cfg.digest()] + [_file_hash(p) for p in (cfg.events, cfg.roster, cfg.lfs, cfg.corpus) if p]
            ).encode()
        )

    def path(self, name: str) -> Path:
        p = self.out / name
        p.parent.mkdir(parents=True, exist_ok=True)
        self.artifacts[name] = p
        return p

    def write_csv(self, name: str, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
        p = self.path(name)
        with open(p, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
        return p

    def write_json(self, name: str, payload) -> Path:
        p = self.path(name)
        p.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        return p

    def cached(self, name: str, fn: Callable[[], Any], *key: str):
        if not self.cfg.cache:
            return fn()
        digest = _sha256("|".join((self.input_key, name) + key).encode())[:24]
        path = self.out / ".cache" / f"{name}-{digest}.pkl"
        if path.exists():
            log.debug("cache hit %s", path.name)
            with open(path, "rb") as fh:
                return pickle.load(fh)
        value = fn()
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "wb") as fh:
            pickle.dump(value, fh)
        return value


def _relabel(events, cfg: PipelineConfig, run: _Run):
    lfs = read_lfs(cfg.lfs)
    ids, texts = read_corpus(cfg.corpus)
    matrix = apply_lfs(lfs, texts)
    if cfg.label_mode == "multilabel":
        labels = multilabel(matrix)
    else:
        labels = [frozenset([t]) if t else frozenset() for t in aggregate(matrix, "majority")]
    by_text = dict(zip(ids, labels))
    run.write_csv(
        "labels.csv", ["text_id", "topics"], [[i, ";".join(sorted(by_text[i]))] for i in sorted(by_text)]
    )
    return [
        dataclasses.replace(e, topics=by_text[e.text_ref]) if e.text_ref in by_text else e for e in events
    ]


def _score_rows(scores: NodalityScores, tiers: Mapping[str, str] | None = None):
    rows = []
    for a in sorted(scores.scores):
        pc1, pc2 = scores.scores[a]
        rows.append([a, _fmt(pc1), _fmt(pc2)] + ([tiers.get(a, "")] if tiers is not None else []))
    return rows


def _influence_rows(records: Sequence[InfluenceRecord]):
    return [
        [r.group, r.window_index, _fmt(r.window_start), _fmt(r.phi), _fmt(r.te_xy), _fmt(r.te_yx), _fmt(r.h_x), _fmt(r.h_y)]
        for r in records
    ]


INFLUENCE_HEADER = ["group", "window", "window_start", "phi", "te_xy", "te_yx", "h_x", "h_y"]


def run_pipeline(cfg: PipelineConfig) -> PipelineResult:
    """Run every stage; raises `StageError` naming the stage that failed."""
    with _stage("config"):
        cfg.validate()
        run = _Run(cfg)

    with _stage("ingest"):
        roster = load_roster(cfg.roster)
        actor_ids = sorted(a.actor_id for a in roster)
        events, report = read_events(cfg.events, actors=set(actor_ids))
        if not events:
            raise ValueError("no valid events")
        run.write_json(
            "ingest_report.json",
            {
                "events": len(events),
                "errors": [[n, m] for n, m in report.errors],
                "self_interactions": len(report.self_interactions),
                "unknown_actor": report.unknown_actor,
                "out_of_window": report.out_of_window,
            },
        )

    if cfg.lfs:
        with _stage("weaklabel"):
            events = _relabel(events, cfg, run)

    with _stage("groups"):
        groups = assign_groups(roster)
        run.path("groups.csv").write_text(groups.to_csv(), encoding="utf-8")
        followers = followers_of(roster)
        by_id = {a.actor_id: a for a in roster}

    with _stage("graphs"):
        study = study_range(events)
        windows = tile_windows(*study, cfg.window_days)
        known = set(cfg.topics) | {t for e in events for t in e.topics}
        graphs = {
            t: tuple(
                build_network(events, t, study, kind, known_topics=known, exclude_labeled_null=cfg.null_excludes_labeled)
                for kind in ("topic", "null")
            )
            for t in cfg.topics
        }
        days = int((study[1] - study[0]) // DAY)
        volume = np.zeros((days, len(cfg.topics)), dtype=np.int64)
        for e in events:
            d = int((e.timestamp - study[0]) // DAY)
            for j, t in enumerate(cfg.topics):
                if t in e.topics:
                    volume[d, j] += 1
        run.write_csv(
            "figures/daily_volume.csv",
            ["day", "day_start", "topic", "count"],
            [[d, _fmt(study[0] + d * DAY), t, int(volume[d, j])] for j, t in enumerate(cfg.topics) for d in range(days)],
        )

    with _stage("centrality"):
        kinds = ALL_METRICS if cfg.metrics == "search" else parse_metrics(cfg.metrics)
        matrices: dict[str, NodalityMatrix] = run.cached(
            "metrics",
            lambda: {t: metric_matrix(tg, ng, kinds, followers, actor_ids) for t, (tg, ng) in graphs.items()},
        )
        for t, M in matrices.items():
            run.write_csv(
                f"metrics/{t}.csv",
                ["actor_id"] + M.columns,
                [[a] + [_fmt(v) for v in row] for a, row in zip(M.actors, M.values)],
            )

    selected = kinds
    if cfg.metrics == "search":
        with _stage("search"):
            report = run.cached(
                "search",
                lambda: search_combinations(
                    matrices, ALL_METRICS, cfg.min_subset, seed=cfg.seed, restarts=cfg.restarts, threads=cfg.threads
                ),
            )
            run.write_json("combination_report.json", report.to_dict())
            if report.selected is None:
                raise ValueError("no metric subset passed the eigenvector test on every topic")
            selected = parse_metrics(report.selected)

    with _stage("nodality"):
        fits, tiers = {}, {}
        for t, M in matrices.items():
            fit = pca(M.select(selected))
            fits[t] = fit
            tiers[t] = cluster(fit, seed=cfg.seed, restarts=cfg.restarts).tiers
            run.write_csv(
                f"scores/{t}.csv", ["actor_id", "inherent", "active", "tier"], _score_rows(nodality_scores(fit), tiers[t])
            )
            run.write_json(
                f"scores/{t}_pca.json",
                {
                    "columns": fit.columns,
                    "eigenvalues": [_fmt(v) for v in fit.eigenvalues],
                    "loadings": [[_fmt(v) for v in row] for row in fit.loadings],
                    "eigenvector_test": eigenvector_test(fit),
                },
            )
            tg, ng = graphs[t]
            for g in (tg, ng):
                write_graphml(g, run.path(f"graphs/{t}_{g.kind}.graphml"), by_id, tiers[t])
                write_dot(g, run.path(f"graphs/{t}_{g.kind}.dot"), by_id, tiers[t])
        run.write_csv(
            "figures/pca_scatter.csv",
            ["topic", "actor_id", "group", "inherent", "active", "tier"],
            [
                [t, a, groups[a], _fmt(c[0]), _fmt(c[1]), tiers[t][a]]
                for t, fit in fits.items()
                for a, c in zip(fit.actors, fit.coordinates)
            ],
        )

    with _stage("influence"):
        group_records, tier_records = {}, {}
        for t in cfg.topics:
            kw = dict(k=cfg.lag, bins=cfg.bins, bin_days=cfg.bin_days, roster=actor_ids, pool_windows=cfg.pool_windows)
            tier_groups = {name: [a for a, x in tiers[t].items() if x == name] for name in sorted(set(tiers[t].values()))}
            group_records[t] = group_influence_table(events, groups, t, windows, **kw)
            tier_records[t] = group_influence_table(events, tier_groups, t, windows, **kw)
            run.write_csv(f"influence/{t}_groups.csv", INFLUENCE_HEADER, _influence_rows(group_records[t]))
            run.write_csv(f"influence/{t}_tiers.csv", INFLUENCE_HEADER, _influence_rows(tier_records[t]))
        run.write_csv(
            "figures/phi_distribution.csv",
            ["topic", "partition", "group", "window", "phi"],
            [
                [t, part, r.group, r.window_index, _fmt(r.phi)]
                for t in cfg.topics
                for part, recs in (("institutional", group_records[t]), ("tier", tier_records[t]))
                for r in recs
            ],
        )

    with _stage("snapshots"):

        def snapshot_scores():
            out = {}
            for t in cfg.topics:
                series = snapshot_series(
                    events, t, cfg.window_days, study=study, known_topics=known,
                    exclude_labeled_null=cfg.null_excludes_labeled,
                )
                for w, snap in enumerate(series):
                    M = metric_matrix(snap.topic_graph, snap.null_graph, selected, followers, actor_ids)
                    try:
                        out[(t, w)] = nodality_scores(pca(M))
                    except DegenerateMatrixError as exc:
                        log.warning("topic %s window %d skipped: %s", t, w, exc)
            return out

        snap_scores = run.cached("snapshots", snapshot_scores, ",".join(k.value for k in selected))
        run.write_csv(
            "snapshot_scores.csv",
            ["topic", "window", "actor_id", "inherent", "active"],
            [[t, w] + row for (t, w), s in sorted(snap_scores.items()) for row in _score_rows(s)],
        )
        run.write_csv(
            "figures/group_nodality.csv",
            ["topic", "window", "group", "actor_id", "inherent", "active"],
            [
                [t, w, groups[a], a, _fmt(s.inherent(a)), _fmt(s.active(a))]
                for (t, w), s in sorted(snap_scores.items())
                for a in sorted(s.scores)
            ],
        )

    with _stage("regress"):
        records = [r for t in cfg.topics for r in group_records[t] if (r.topic, r.window_index) in snap_scores]
        design = build_design(records, snap_scores, groups, cfg.aggregate)
        write_design(design, run.path("design.csv"))
        result = fit_ols(design, robust=cfg.robust, aggregate=cfg.aggregate)
        write_result(result, run.path("regression.json"))

    with _stage("manifest"):
        manifest = {
            "package_version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "seed": cfg.seed,
            "restarts": cfg.restarts,
            "config": cfg.to_dict(),
            "config_hash": cfg.digest(),
            "input_hash": run.input_key,
            "selected_metrics": [k.value for k in selected],
            "artifacts": {name: _file_hash(p) for name, p in sorted(run.artifacts.items())},
        }
        run.write_json("manifest.json", manifest)

    return PipelineResult(0, run.artifacts, tuple(k.value for k in selected))
