"""Command-line entry point: ``nodalitykit <command> <action> [options]``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import yaml

from . import centrality, graph, influence, ingest, nodality, regress, synth, weaklabel
from .pipeline import PipelineConfig, StageError, run_pipeline

log = logging.getLogger("nodalitykit")


def _out_path(args, name: str) -> Path:
    """``--out`` wins; otherwise the file goes under ``--out-dir``."""
    if getattr(args, "out", None):
        path = Path(args.out)
    else:
        path = Path(args.out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _write_rows(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _load_mapping(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"{path}: expected a mapping")
    return data


def cmd_ingest_validate(args) -> int:
    actors = None
    if args.roster:
        roster = ingest.load_roster(args.roster)
        actors = {a.actor_id for a in roster}
        print(f"roster: {len(roster)} actors")
    events, report = ingest.read_events(args.events, actors=actors, strict=args.strict)
    print(f"events: {len(events)} valid")
    print(report.summary())
    return 0 if report.ok else 1


def cmd_weaklabel_run(args) -> int:
    lfs = weaklabel.read_lfs(args.lfs)
    ids, texts = weaklabel.read_corpus(args.corpus)
    matrix = weaklabel.apply_lfs(lfs, texts)
    gold = None
    if args.gold:
        with open(args.gold, newline="", encoding="utf-8") as fh:
            gold_map = {r["text_id"]: (r["topic"] or None) for r in csv.DictReader(fh)}
        gold = [gold_map.get(i) for i in ids]
    if args.policy == "weighted":
        if gold is None:
            raise ValueError("--policy weighted needs --gold")
        labels = weaklabel.aggregate(matrix, "weighted", gold_matrix=matrix, gold_labels=gold)
    else:
        labels = weaklabel.aggregate(matrix, "majority")
    out = _out_path(args, "labels.csv")
    _write_rows(out, ["text_id", "topic"], [[i, t or ""] for i, t in zip(ids, labels)])
    print(f"labelled {sum(t is not None for t in labels)}/{len(labels)} texts -> {out}")
    if gold is not None:
        cm = weaklabel.evaluate(labels, gold)
        cm_path = out.with_name(out.stem + "_confusion.csv")
        rows = cm.to_rows()
        _write_rows(cm_path, list(rows[0]), [list(r.values()) for r in rows])
        for cls, r in cm.recall().items():
            print(f"recall {cls}: {r:.3f}")
    return 0


def cmd_graph_build(args) -> int:
    events, _ = ingest.read_events(args.events)
    start = ingest.parse_time(args.window_start) if args.window_start else graph.study_range(events)[0]
    end = start + args.window_days * graph.DAY if args.window_days else graph.study_range(events)[1]
    g = graph.build_network(events, args.topic, (start, end), args.kind)
    out = _out_path(args, f"{args.topic}_{args.kind}.{args.format}")
    roster = {a.actor_id: a for a in ingest.load_roster(args.roster)} if args.roster else None
    if args.format == "dot":
        graph.write_dot(g, out, roster)
    else:
        graph.write_graphml(g, out, roster)
    print(f"{g.kind} graph for {g.topic!r}: {g.n} nodes, {len(g.edges)} edges -> {out}")
    return 0


def cmd_centrality_compute(args) -> int:
    g = graph.read_graphml(args.graph)
    followers = ingest.followers_of(ingest.load_roster(args.followers)) if args.followers else None
    kinds = centrality.parse_metrics(args.metric)
    vectors = centrality.compute_many(g, kinds, followers)
    out = _out_path(args, "centrality.csv")
    start = ingest.format_time(g.window[0])
    _write_rows(
        out,
        ["actor_id", "metric", "value", "graph_kind", "window_start"],
        [[a, k.value, repr(vectors[k][a]), g.kind, start] for k in kinds for a in g.nodes],
    )
    print(f"{len(kinds)} metric(s) on {g.n} nodes -> {out}")
    return 0


def cmd_nodality_score(args) -> int:
    tg, ng = graph.read_graphml(args.topic_graph), graph.read_graphml(args.null_graph)
    followers = ingest.followers_of(ingest.load_roster(args.followers)) if args.followers else None
    M = centrality.metric_matrix(tg, ng, centrality.parse_metrics(args.metrics), followers)
    fit = nodality.pca(M)
    tiers = nodality.cluster(fit, seed=args.seed, restarts=args.restarts).tiers
    out = _out_path(args, "scores.csv")
    _write_rows(
        out,
        ["actor_id", "inherent", "active", "tier"],
        [[a, repr(float(c[0])), repr(float(c[1])), tiers[a]] for a, c in zip(fit.actors, fit.coordinates)],
    )
    passed = nodality.eigenvector_test(fit)
    print(f"eigenvector test: {'pass' if passed else 'FAIL'}; scores -> {out}")
    return 0 if passed or not args.require_test else 1


def _search_inputs(config: dict, base: Path):
    """``{"followers": roster.csv, "topics": {name: {"topic": g, "null": g}}}``."""
    followers = None
    if config.get("followers"):
        followers = ingest.followers_of(ingest.load_roster(base / config["followers"]))
    graphs = {
        name: (graph.read_graphml(base / spec["topic"]), graph.read_graphml(base / spec["null"]))
        for name, spec in config["topics"].items()
    }
    universe = sorted(set().union(*(set(t.nodes) | set(n.nodes) for t, n in graphs.values())))
    return {
        name: centrality.metric_matrix(tg, ng, centrality.ALL_METRICS, followers, universe)
        for name, (tg, ng) in graphs.items()
    }


def cmd_nodality_search(args) -> int:
    config = _load_mapping(args.topics)
    per_topic = _search_inputs(config, Path(args.topics).parent)
    report = nodality.search_combinations(
        per_topic, min_size=args.min_size, seed=args.seed, restarts=args.restarts, threads=args.threads
    )
    out = _out_path(args, "combination_report.json")
    out.write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"evaluated {report.evaluated} subsets; selected: {report.selected}")
    return 0 if report.selected else 1


def cmd_influence_table(args) -> int:
    events, _ = ingest.read_events(args.events)
    groups = ingest.GroupAssignment.read_csv(args.groups)
    start, end = graph.study_range(events)
    windows = graph.tile_windows(start, end, args.window_days)
    records = influence.group_influence_table(
        events, groups, args.topic, windows, args.lag, args.bins, bin_days=args.bin_days,
        pool_windows=args.pool_windows,
    )
    out = _out_path(args, f"influence_{args.topic}.csv")
    _write_rows(
        out,
        ["group", "window_start", "phi", "te_xy", "te_yx", "h_x", "h_y"],
        [
            [r.group, ingest.format_time(r.window_start)] + [repr(v) for v in (r.phi, r.te_xy, r.te_yx, r.h_x, r.h_y)]
            for r in records
        ],
    )
    print(f"{len(records)} rows -> {out}")
    return 0


def cmd_regress_fit(args) -> int:
    rows = regress.read_design(args.design)
    result = regress.fit_ols(rows, robust=args.robust, aggregate=args.aggregate)
    out = _out_path(args, "regression.json")
    regress.write_result(result, out)
    for name, c in result.coefficients.items():
        print(f"{name:12s} {c.estimate: .6f}  se={c.std_error:.6f}  p={c.p_value:.4g}")
    print(f"N={result.n}  R^2={result.r_squared:.4f}")
    return 0


def cmd_synth_generate(args) -> int:
    cfg = synth.SynthConfig.from_dict(_load_mapping(args.config)) if args.config else synth.SynthConfig()
    if args.seed_given:
        cfg = synth.SynthConfig.from_dict({**cfg.to_dict(), "seed": args.seed})
    data = synth.generate(cfg)
    paths = synth.write(data, args.out_dir)
    print(f"{len(data.events)} events, {len(data.roster)} actors -> {paths['events'].parent}")
    return 0


def cmd_pipeline(args) -> int:
    cfg = PipelineConfig.load(args.config)
    overrides = {"threads": args.threads}
    if args.seed_given:
        overrides["seed"] = args.seed
    if args.out_dir_given:
        overrides["out_dir"] = args.out_dir
    cfg = PipelineConfig(**{**cfg.to_dict(), **overrides})
    try:
        result = run_pipeline(cfg)
    except StageError as exc:
        log.error("%s", exc)
        return 1
    print(f"selected metrics: {', '.join(result.selected)}; {len(result.artifacts)} artifacts in {cfg.out_dir}")
    return result.status


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nodalitykit", description=__doc__)
    parser.add_argument("--seed", type=int, default=None, help="random seed (default 42; synth default 0)")
    parser.add_argument("--threads", type=int, default=1)
    parser.add_argument("--out-dir", default=None, help="output directory (default: out)")
    parser.add_argument("--log-level", default="WARNING")
    sub = parser.add_subparsers(dest="command", required=True)

    def action(name, help_, fn):
        group = sub.add_parser(name, help=help_).add_subparsers(dest="action", required=True)
        return lambda act, h: _leaf(group, act, h, fn)

    def _leaf(group, act, h, fn):
        p = group.add_parser(act, help=h)
        p.set_defaults(func=fn)
        return p

    p = action("ingest", "event log checks", cmd_ingest_validate)("validate", "parse and report on an event log")
    p.add_argument("--events", required=True)
    p.add_argument("--roster")
    p.add_argument("--strict", action="store_true")

    p = action("weaklabel", "topic labelling", cmd_weaklabel_run)("run", "apply labelling functions")
    p.add_argument("--lfs", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--policy", choices=("majority", "weighted"), default="majority")
    p.add_argument("--gold", help="CSV with text_id,topic")
    p.add_argument("--out")

    p = action("graph", "network construction", cmd_graph_build)("build", "build a topic or null network")
    p.add_argument("--events", required=True)
    p.add_argument("--topic", required=True)
    p.add_argument("--window-start", help="ISO time; default the study start")
    p.add_argument("--window-days", type=int, help="default: the whole study")
    p.add_argument("--kind", choices=("topic", "null"), default="topic")
    p.add_argument("--roster", help="attach actor attributes")
    p.add_argument("--format", choices=("graphml", "dot"), default="graphml")
    p.add_argument("--out")

    p = action("centrality", "node metrics", cmd_centrality_compute)("compute", "metrics for one graph")
    p.add_argument("--graph", required=True)
    p.add_argument("--metric", required=True, help="comma-separated metric names")
    p.add_argument("--followers", help="roster CSV with follower counts")
    p.add_argument("--out")

    nod = sub.add_parser("nodality", help="PCA, tiers and metric search").add_subparsers(dest="action", required=True)
    p = _leaf(nod, "score", "inherent/active scores and tiers", cmd_nodality_score)
    p.add_argument("--topic-graph", required=True)
    p.add_argument("--null-graph", required=True)
    p.add_argument("--metrics", required=True)
    p.add_argument("--followers")
    p.add_argument("--restarts", type=int, default=nodality.DEFAULT_RESTARTS)
    p.add_argument("--require-test", action="store_true", help="exit 1 if the eigenvector test fails")
    p.add_argument("--out")
    p = _leaf(nod, "search", "search metric subsets across topics", cmd_nodality_search)
    p.add_argument("--topics", required=True, help="YAML/JSON naming each topic's graph pair")
    p.add_argument("--min-size", type=int, default=3)
    p.add_argument("--restarts", type=int, default=nodality.DEFAULT_RESTARTS)
    p.add_argument("--out")

    p = action("influence", "share of influence", cmd_influence_table)("table", "phi per group and window")
    p.add_argument("--events", required=True)
    p.add_argument("--groups", required=True)
    p.add_argument("--topic", required=True)
    p.add_argument("--window-days", type=int, default=14)
    p.add_argument("--lag", type=int, default=1)
    p.add_argument("--bins", type=int, default=2)
    p.add_argument("--bin-days", type=float, default=1)
    p.add_argument("--pool-windows", action="store_true")
    p.add_argument("--out")

    p = action("regress", "influence regression", cmd_regress_fit)("fit", "OLS on a design CSV")
    p.add_argument("--design", required=True)
    p.add_argument("--aggregate", choices=("mean", "sum"), default="mean")
    p.add_argument("--robust", action="store_true", help="HC1 standard errors")
    p.add_argument("--out")

    p = action("synth", "synthetic data", cmd_synth_generate)("generate", "write a synthetic corpus")
    p.add_argument("--config")

    p = sub.add_parser("pipeline", help="run every stage from one config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format="%(levelname)s %(name)s: %(message)s")
    args.seed_given = args.seed is not None
    args.out_dir_given = args.out_dir is not None
    if args.seed is None:
        args.seed = nodality.DEFAULT_SEED
    if args.out_dir is None:
        args.out_dir = "out"
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
