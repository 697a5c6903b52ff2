"""Synthetic interaction streams with planted nodality.

Leaders (cabinet, shadow cabinet and the most-followed journalists) attract
interactions on every topic and in unlabelled chatter: inherent nodality.
A share of receivers specialise in one topic, split evenly across topics,
and are more active and attract more attention only there: active nodality.

Daily activity is Poisson. On each topic a tier's daily intensity is
``(1 - coupling) * own_noise + coupling * upstream(t - 1)``, where leaders
drive funnelers and receivers are driven by a mix of leaders and funnelers,
so leaders' activity predicts everyone else's next day.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .graph import DAY
from .ingest import (
    Actor,
    ActorKind,
    EventKind,
    InteractionEvent,
    Role,
    assign_groups,
    dump_roster,
    write_events,
)
from .nodality import TIERS

KINDS = (EventKind.RETWEET, EventKind.MENTION, EventKind.REPLY)


@dataclass
class SynthConfig:
    n_cabinet: int = 25
    n_shadow_cabinet: int = 25
    n_government_backbench: int = 220
    n_opposition_backbench: int = 180
    n_journalists: int = 150
    funneler_share: float = 0.3
    specialist_share: float = 0.15
    topics: tuple[str, ...] = ("ukraine", "covid", "cost_of_living", "brexit")
    days: int = 84
    start: float = 1642118400.0  # 2022-01-14T00:00:00Z
    # interactions initiated per actor per day, per topic and for chatter
    base_rate: float = 0.12
    chatter_rate: float = 0.3
    # attraction weight as a content source (leaders 10x receivers)
    tier_weight: dict[str, float] = field(default_factory=lambda: {"leader": 10.0, "funneler": 3.0, "receiver": 1.0})
    # activity multiplier as an initiator
    tier_activity: dict[str, float] = field(default_factory=lambda: {"leader": 3.0, "funneler": 2.0, "receiver": 1.0})
    specialist_boost: float = 3.0
    pa_offset: float = 200.0
    coupling: float = 0.8
    # share of receivers' upstream signal taken straight from leaders
    receiver_leader_share: float = 0.5
    burstiness: float = 0.8
    follower_log_mean: dict[str, float] = field(default_factory=lambda: {"leader": 10.0, "funneler": 9.3, "receiver": 8.8})
    follower_log_sd: float = 0.3
    # specialists' extra log-followers (topic engagement grows an audience)
    specialist_follower_boost: float = 0.5
    kind_probs: tuple[float, float, float] = (0.5, 0.3, 0.2)
    seed: int = 0

    def validate(self) -> None:
        counts = (self.n_cabinet, self.n_shadow_cabinet, self.n_government_backbench,
                  self.n_opposition_backbench, self.n_journalists)
        if min(counts) < 0 or sum(counts) < 3:
            raise ValueError("actor counts must be nonnegative and total at least 3")
        for name in ("funneler_share", "specialist_share", "coupling", "receiver_leader_share"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if not np.isclose(sum(self.kind_probs), 1.0) or min(self.kind_probs) < 0:
            raise ValueError("kind_probs must be a probability vector")
        positive = [self.base_rate, self.chatter_rate, self.pa_offset, self.days,
                    *self.tier_weight.values(), *self.tier_activity.values()]
        if min(positive) <= 0:
            raise ValueError("rates, weights, pa_offset and days must be positive")
        if set(self.tier_weight) != set(TIERS) or set(self.tier_activity) != set(TIERS):
            raise ValueError(f"tier maps must have keys {TIERS}")
        if not self.topics:
            raise ValueError("at least one topic is required")
        if self.burstiness < 0 or self.specialist_boost < 0 or self.follower_log_sd < 0:
            raise ValueError("burstiness, specialist_boost and follower_log_sd must be nonnegative")

    @classmethod
    def from_dict(cls, data: dict) -> "SynthConfig":
        data = dict(data)
        for key in ("topics", "kind_probs"):
            if key in data:
                data[key] = tuple(data[key])
        return cls(**data)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class Truth:
    tier: dict[str, str]
    specialist: dict[str, str | None]

    def members(self, tier: str) -> frozenset[str]:
        return frozenset(a for a, t in self.tier.items() if t == tier)


@dataclass(frozen=True)
class SynthData:
    events: list[InteractionEvent]
    roster: list[Actor]
    truth: Truth
    config: SynthConfig

    @property
    def study(self) -> tuple[float, float]:
        return self.config.start, self.config.start + self.config.days * DAY


def _roster(cfg: SynthConfig, rng: np.random.Generator) -> tuple[list[Actor], dict[str, str]]:
    specs = [
        (Role.CABINET, cfg.n_cabinet, "cab", "gov"),
        (Role.SHADOW_CABINET, cfg.n_shadow_cabinet, "shc", "opp"),
        (Role.GOVERNMENT_BACKBENCH, cfg.n_government_backbench, "gbb", "gov"),
        (Role.OPPOSITION_BACKBENCH, cfg.n_opposition_backbench, "obb", "opp"),
        (Role.JOURNALIST, cfg.n_journalists, "jrn", None),
    ]
    planned = []
    for role, count, prefix, party in specs:
        for i in range(count):
            planned.append((f"{prefix}{i:04d}", role, party))
    n = len(planned)
    leader_ids = {a for a, role, _ in planned if role in (Role.CABINET, Role.SHADOW_CABINET)}
    journalists = [a for a, role, _ in planned if role is Role.JOURNALIST]
    # the first tenth of journalists are planted as prominent (leader tier)
    n_prominent = int(np.ceil(0.1 * len(journalists) - 1e-9)) if journalists else 0
    leader_ids |= set(journalists[:n_prominent])
    rest = [a for a, _, _ in planned if a not in leader_ids]
    n_funnel = min(len(rest), int(round(cfg.funneler_share * n)))
    funnelers = set(rng.choice(rest, size=n_funnel, replace=False).tolist()) if n_funnel else set()
    tier = {a: "leader" if a in leader_ids else "funneler" if a in funnelers else "receiver" for a, _, _ in planned}

    actors = []
    for a, role, party in planned:
        t = tier[a]
        followers = int(round(np.exp(rng.normal(cfg.follower_log_mean[t], cfg.follower_log_sd))))
        kind = ActorKind.JOURNALIST if role is Role.JOURNALIST else ActorKind.MP
        actors.append(Actor(a, a.upper(), kind, role, party, followers))
    return actors, tier


def _cap_journalists(actors: list[Actor], tier: dict[str, str]) -> list[Actor]:
    """Keep planted (leader) journalists strictly above every other
    journalist so the follower-decile split recovers them."""
    leaders = [a.follower_count for a in actors if a.kind is ActorKind.JOURNALIST and tier[a.actor_id] == "leader"]
    if not leaders:
        return actors
    floor = min(leaders)
    return [
        Actor(a.actor_id, a.display_name, a.kind, a.role, a.party, max(floor - 1, 0))
        if a.kind is ActorKind.JOURNALIST and tier[a.actor_id] != "leader" and a.follower_count >= floor
        else a
        for a in actors
    ]


def _intensities(cfg: SynthConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Per-tier daily intensity (mean about 1) for one topic."""
    sd = cfg.burstiness

    def noise():
        return np.exp(rng.normal(-sd * sd / 2, sd, cfg.days)) if sd > 0 else np.ones(cfg.days)

    c = cfg.coupling
    leader = noise()
    funneler = noise()
    receiver = noise()
    out = {"leader": leader, "funneler": np.empty(cfg.days), "receiver": np.empty(cfg.days)}
    out["funneler"][0] = funneler[0]
    out["funneler"][1:] = (1 - c) * funneler[1:] + c * leader[:-1]
    out["receiver"][0] = receiver[0]
    upstream = cfg.receiver_leader_share * leader + (1 - cfg.receiver_leader_share) * out["funneler"]
    out["receiver"][1:] = (1 - c) * receiver[1:] + c * upstream[:-1]
    return out


def expected_source_share(cfg: SynthConfig, tier: dict[str, str], specialist: dict[str, str | None], topic: str | None) -> dict[str, float]:
    """Configured share of interactions whose content source is in each tier."""
    weights = _source_weights(cfg, list(tier), tier, specialist, topic)
    total = weights.sum()
    ids = list(tier)
    return {t: float(sum(w for a, w in zip(ids, weights) if tier[a] == t) / total) for t in TIERS}


def _source_weights(cfg, ids, tier, specialist, topic) -> np.ndarray:
    w = np.array([cfg.tier_weight[tier[a]] for a in ids])
    if topic is not None:
        w = w * np.array([1.0 + cfg.specialist_boost if specialist[a] == topic else 1.0 for a in ids])
    return w


def generate(cfg: SynthConfig) -> SynthData:
    """Deterministic under ``cfg.seed``."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    actors, tier = _roster(cfg, rng)
    ids = [a.actor_id for a in actors]
    n = len(ids)
    receivers = [a for a in ids if tier[a] == "receiver"]
    n_spec = min(len(receivers), int(round(cfg.specialist_share * n)))
    spec_ids = rng.choice(receivers, size=n_spec, replace=False).tolist() if n_spec else []
    specialist = {a: None for a in ids}
    # round-robin keeps every topic's specialist pool the same size
    for i, a in enumerate(spec_ids):
        specialist[a] = cfg.topics[i % len(cfg.topics)]

    if cfg.specialist_follower_boost:
        bump = np.exp(cfg.specialist_follower_boost)
        actors = [
            Actor(a.actor_id, a.display_name, a.kind, a.role, a.party, int(round(a.follower_count * bump)))
            if specialist[a.actor_id] else a
            for a in actors
        ]
    actors = _cap_journalists(actors, tier)
    tier_idx = {t: np.array([i for i, a in enumerate(ids) if tier[a] == t], dtype=np.int64) for t in TIERS}
    activity = np.array([cfg.tier_activity[tier[a]] for a in ids])
    received = np.zeros(n)
    streams = [(topic, _intensities(cfg, rng)) for topic in cfg.topics] + [(None, None)]
    spec_topic = np.array([specialist[a] or "" for a in ids], dtype=object)

    events: list[InteractionEvent] = []
    counter = 0
    for day in range(cfg.days):
        day_start = cfg.start + day * DAY
        day_received = np.zeros(n)
        for topic, intensity in streams:
            if topic is None:
                rates = cfg.chatter_rate * activity
            else:
                tier_level = np.empty(n)
                for t in TIERS:
                    tier_level[tier_idx[t]] = intensity[t][day]
                focus = np.where(spec_topic == topic, 1.0 + cfg.specialist_boost, 1.0)
                rates = cfg.base_rate * activity * tier_level * focus
            made = rng.poisson(rates)
            initiators = np.repeat(np.arange(n), made)
            if not len(initiators):
                continue
            weights = _source_weights(cfg, ids, tier, specialist, topic)
            tier_mass = np.array([weights[tier_idx[t]].sum() for t in TIERS])
            chosen_tier = rng.choice(len(TIERS), size=len(initiators), p=tier_mass / tier_mass.sum())
            sources = np.empty(len(initiators), dtype=np.int64)
            for k, t in enumerate(TIERS):
                slot = np.flatnonzero(chosen_tier == k)
                if not len(slot):
                    continue
                pool = tier_idx[t]
                pa = weights[pool] * (cfg.pa_offset + received[pool])
                picks = rng.choice(len(pool), size=len(slot), p=pa / pa.sum())
                sources[slot] = pool[picks]
                # self-interactions are resampled within the tier
                clash = slot[sources[slot] == initiators[slot]]
                while len(clash) and len(pool) > 1:
                    sources[clash] = pool[rng.choice(len(pool), size=len(clash), p=pa / pa.sum())]
                    clash = clash[sources[clash] == initiators[clash]]
            keep = sources != initiators
            seconds = rng.integers(0, int(DAY), size=len(initiators))
            kinds = rng.choice(3, size=len(initiators), p=cfg.kind_probs)
            labels = frozenset() if topic is None else frozenset((topic,))
            for src, dst, sec, kind, ok in zip(sources, initiators, seconds, kinds, keep):
                if not ok:
                    continue
                events.append(
                    InteractionEvent(f"e{counter:09d}", ids[src], ids[dst], KINDS[kind], day_start + float(sec), labels)
                )
                counter += 1
            np.add.at(day_received, sources[keep], 1)
        received += day_received
    events.sort(key=lambda e: (e.timestamp, e.event_id))
    return SynthData(events, actors, Truth(tier, specialist), cfg)


def write(data: SynthData, out_dir: str | Path) -> dict[str, Path]:
    """Write events, roster, groups and truth in the ingest formats."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "events": out / "events.jsonl",
        "roster": out / "roster.csv",
        "groups": out / "groups.csv",
        "truth": out / "truth.csv",
        "config": out / "synth_config.json",
    }
    write_events(data.events, paths["events"])
    paths["roster"].write_text(dump_roster(data.roster), encoding="utf-8")
    paths["groups"].write_text(assign_groups(data.roster).to_csv(), encoding="utf-8")
    with open(paths["truth"], "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["actor_id", "tier", "specialist_topic"])
        for a in sorted(data.truth.tier):
            writer.writerow([a, data.truth.tier[a], data.truth.specialist[a] or ""])
    paths["config"].write_text(json.dumps(data.config.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return paths


def read_truth(path: str | Path) -> Truth:
    tier, spec = {}, {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            tier[row["actor_id"]] = row["tier"]
            spec[row["actor_id"]] = row["specialist_topic"] or None
    return Truth(tier, spec)
