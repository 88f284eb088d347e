import random
from datetime import datetime, timedelta, timezone

import pytest

from newsharvest.harvest import Fetcher, FetchPolicy, HostScheduler, SimulatedClock, UserAgentRotator
from newsharvest.simnews.corpus import load_corpus
from newsharvest.simnews.server import SimNewsServer
from newsharvest.store import NewsRecord

T0 = datetime(2024, 3, 1, 9, 0, tzinfo=timezone.utc)


def make_record(i=0, **kw):
    base = dict(
        id=f"r{i}",
        headline=f"IFMIF-DONES story number {i}",
        outlet_name="Outlet",
        source_domain="outlet.com",
        published_at=T0 + timedelta(days=i),
        collected_at=T0 + timedelta(days=i, hours=1),
        source_url=f"https://outlet.com/2024/03/story-{i}",
        full_text=f"El proyecto IFMIF-DONES avanza en Granada. Parrafo {i}.",
    )
    base.update(kw)
    return NewsRecord(**base)


def virtual_fetcher(proxy=None, seed=0, **policy_kw):
    policy = FetchPolicy(**policy_kw)
    rng = random.Random(seed)
    clock = SimulatedClock()
    return Fetcher(
        policy,
        HostScheduler(policy, random.Random(rng.random()), clock),
        UserAgentRotator(policy.user_agents, random.Random(rng.random())),
        proxy=proxy,
    )


@pytest.fixture(scope="session")
def corpus():
    return load_corpus()


@pytest.fixture(scope="session")
def simnews(corpus):
    with SimNewsServer(corpus) as server:
        yield server


@pytest.fixture
def fetcher(simnews):
    return virtual_fetcher(simnews.proxy, max_retries=1)


def pytest_terminal_summary(terminalreporter):
    from acceptance_log import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in sorted(RESULTS, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
