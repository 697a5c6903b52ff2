import numpy as np
import pytest

from nodalitykit.ingest import ActorKind, Actor, EventKind, InteractionEvent, Role
from nodalitykit.synth import SynthConfig

T0 = 1_700_006_400.0  # a UTC midnight
DAY = 86400.0


def ev(eid, src, dst, topics=(), t=T0, kind=EventKind.RETWEET, text_ref=None):
    return InteractionEvent(str(eid), src, dst, kind, float(t), frozenset(topics), text_ref)


def mp(actor_id, role=Role.GOVERNMENT_BACKBENCH, followers=100):
    return Actor(actor_id, actor_id.upper(), ActorKind.MP, role, "P", followers)


def journalist(actor_id, followers):
    return Actor(actor_id, actor_id.upper(), ActorKind.JOURNALIST, Role.JOURNALIST, None, followers)


SMALL_SYNTH = dict(
    n_cabinet=8,
    n_shadow_cabinet=8,
    n_government_backbench=40,
    n_opposition_backbench=34,
    n_journalists=30,
    days=42,
    base_rate=0.3,
)


@pytest.fixture
def small_synth_config():
    return SynthConfig(**SMALL_SYNTH)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
