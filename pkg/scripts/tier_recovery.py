"""How well clustering recovers the planted tiers, and how the tiers rank on phi.

    python3 scripts/tier_recovery.py --seeds 0 1 2
"""

from __future__ import annotations

import argparse

import numpy as np

from nodalitykit import centrality, graph, influence, ingest, nodality, synth

METRICS = ("strength", "degree", "funnel_bandwidth")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    ap.add_argument("--restarts", type=int, default=100)
    args = ap.parse_args()

    phis = {t: [] for t in nodality.TIERS}
    for seed in args.seeds:
        data = synth.generate(synth.SynthConfig(seed=seed))
        followers = ingest.followers_of(data.roster)
        roster = [a.actor_id for a in data.roster]
        windows = graph.tile_windows(*data.study, 14)
        truth = data.truth.members("leader")
        for topic in data.config.topics:
            tg = graph.build_network(data.events, topic, data.study, "topic")
            ng = graph.build_network(data.events, topic, data.study, "null")
            fit = nodality.pca(centrality.metric_matrix(tg, ng, METRICS, followers, roster))
            tiers = nodality.cluster(fit, restarts=args.restarts)
            found = tiers.members("leader")
            hit = len(found & truth)
            print(f"seed {seed} {topic:15s} test={'pass' if nodality.eigenvector_test(fit) else 'fail'} "
                  f"leader precision {hit / max(len(found), 1):.3f} recall {hit / len(truth):.3f}")
            groups = {t: tiers.members(t) for t in nodality.TIERS}
            for r in influence.group_influence_table(data.events, groups, topic, windows, roster=roster):
                phis[r.group].append(r.phi)
    for tier, vals in phis.items():
        print(f"mean phi {tier:9s} {np.mean(vals):+.3f}  (n={len(vals)})")


if __name__ == "__main__":
    main()
