"""Polite execution of query plans against an aggregator endpoint.

The aggregator is reached with ``GET <endpoint>/search?q=<query>&edition=<id>``.
Every request, to the aggregator or a publisher, goes through one
:class:`HostScheduler`, so consecutive requests to a host are separated by a
delay drawn uniformly from ``[min_delay_s, max_delay_s]``.
"""

from __future__ import annotations

import hashlib
import logging
import random
import re
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from typing import Callable, Iterator, Sequence
from urllib.parse import urlencode, urljoin, urlsplit

import requests
from bs4 import BeautifulSoup

from newsharvest.dedup import LinkFields
from newsharvest.errors import ConfigError, FetchError, ListingParseError, ResolutionError
from newsharvest.plan import QuerySpec

log = logging.getLogger(__name__)

DEFAULT_USER_AGENTS: tuple[str, ...] = (
    "Mozilla/5.0 (Windows NT 10.0; Win64; x64) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/124.0 Safari/537.36",
    "Mozilla/5.0 (Macintosh; Intel Mac OS X 14_4) AppleWebKit/605.1.15 (KHTML, like Gecko) Version/17.4 Safari/605.1.15",
    "Mozilla/5.0 (X11; Linux x86_64; rv:125.0) Gecko/20100101 Firefox/125.0",
    "Mozilla/5.0 (Windows NT 10.0; Win64; x64; rv:125.0) Gecko/20100101 Firefox/125.0",
    "Mozilla/5.0 (Macintosh; Intel Mac OS X 14_4) AppleWebKit/537.36 (KHTML, like Gecko) Chrome/124.0 Safari/537.36",
)

MAX_REDIRECTS = 10


@dataclass(frozen=True)
class FetchPolicy:
    min_delay_s: float = 1.5
    max_delay_s: float = 4.0
    user_agents: tuple[str, ...] = DEFAULT_USER_AGENTS
    result_cap: int = 100
    max_retries: int = 3
    timeout_s: float = 20.0

    def __post_init__(self) -> None:
        if not 0 < self.min_delay_s <= self.max_delay_s:
            raise ConfigError("politeness delays must satisfy 0 < min_delay_s <= max_delay_s")
        if self.result_cap <= 0:
            raise ConfigError("result_cap must be positive")
        if not self.user_agents:
            raise ConfigError("at least one User-Agent is required")
        if self.max_retries < 0 or self.timeout_s <= 0:
            raise ConfigError("max_retries must be >= 0 and timeout_s > 0")
        if not isinstance(self.user_agents, tuple):
            object.__setattr__(self, "user_agents", tuple(self.user_agents))


def schedule_delay(policy: FetchPolicy, rng: random.Random) -> float:
    if policy.min_delay_s == policy.max_delay_s:
        return policy.min_delay_s
    return rng.uniform(policy.min_delay_s, policy.max_delay_s)


class SystemClock:
    def monotonic(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            time.sleep(seconds)

    def now(self) -> datetime:
        return datetime.now(timezone.utc)


class SimulatedClock:
    """Virtual clock: ``sleep`` advances time instantly."""

    def __init__(self, start: datetime | None = None):
        self._t = 0.0
        self._start = start or datetime(2026, 1, 1, tzinfo=timezone.utc)
        self._lock = threading.Lock()

    def monotonic(self) -> float:
        return self._t

    def sleep(self, seconds: float) -> None:
        if seconds > 0:
            with self._lock:
                self._t += seconds

    def now(self) -> datetime:
        return self._start + timedelta(seconds=self._t)


class HostScheduler:
    """Reserves request start slots per host.

    Slots are reserved under a lock and the wait happens outside it, so
    workers hitting different hosts never block each other.
    """

    def __init__(self, policy: FetchPolicy, rng: random.Random | None = None, clock=None):
        self.policy = policy
        self.rng = rng or random.Random()
        self.clock = clock or SystemClock()
        self._next_allowed: dict[str, float] = {}
        self._lock = threading.Lock()
        self.delays: list[float] = []

    def acquire(self, host: str) -> float:
        with self._lock:
            now = self.clock.monotonic()
            start = max(now, self._next_allowed.get(host, now))
            delay = schedule_delay(self.policy, self.rng)
            self._next_allowed[host] = start + delay
            self.delays.append(delay)
        self.clock.sleep(start - now)
        return start


class UserAgentRotator:
    """Cycles through a fresh shuffle of the agents each round, so every agent
    appears once per ``len(agents)`` requests."""

    def __init__(self, agents: Sequence[str], rng: random.Random | None = None):
        if not agents:
            raise ConfigError("at least one User-Agent is required")
        self.agents = list(agents)
        self.rng = rng or random.Random()
        self._queue: list[str] = []
        self._lock = threading.Lock()

    def next(self) -> str:
        with self._lock:
            if not self._queue:
                self._queue = self.agents[:]
                self.rng.shuffle(self._queue)
            return self._queue.pop(0)


@dataclass(frozen=True)
class RawResult:
    headline: str
    result_url: str
    outlet_label: str
    edition_id: str
    query_digest: str
    collected_at: datetime
    rank: int
    published_at: datetime | None = None
    published_approx: bool = False
    stage: str = ""

    def __post_init__(self) -> None:
        norm = " ".join(self.headline.split())
        if not norm:
            raise ListingParseError("result headline is empty")
        object.__setattr__(self, "headline", norm)
        parts = urlsplit(self.result_url)
        if parts.scheme not in ("http", "https") or not parts.netloc:
            raise ListingParseError(f"result URL is not absolute http(s): {self.result_url!r}")

    @property
    def result_id(self) -> str:
        return f"{self.query_digest}:{self.rank}"

    def link_fields(self) -> LinkFields:
        return LinkFields(
            self.result_id,
            self.result_url,
            self.headline,
            # a relative listing time is too coarse for the same-date guard
            self.published_at.date() if self.published_at and not self.published_approx else None,
            self.collected_at,
        )

    def to_dict(self) -> dict:
        return {
            "headline": self.headline,
            "result_url": self.result_url,
            "outlet_label": self.outlet_label,
            "edition_id": self.edition_id,
            "query_digest": self.query_digest,
            "collected_at": _iso(self.collected_at),
            "rank": self.rank,
            "published_at": _iso(self.published_at),
            "published_approx": self.published_approx,
            "stage": self.stage,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RawResult":
        return cls(
            headline=d["headline"],
            result_url=d["result_url"],
            outlet_label=d.get("outlet_label", ""),
            edition_id=d["edition_id"],
            query_digest=d["query_digest"],
            collected_at=_parse_iso(d["collected_at"]),
            rank=int(d["rank"]),
            published_at=_parse_iso(d.get("published_at")),
            published_approx=bool(d.get("published_approx", False)),
            stage=d.get("stage", ""),
        )


def _iso(value: datetime | None) -> str | None:
    if value is None:
        return None
    return value.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


def _parse_iso(value: str | None) -> datetime | None:
    if not value:
        return None
    parsed = datetime.fromisoformat(value.replace("Z", "+00:00"))
    return parsed if parsed.tzinfo else parsed.replace(tzinfo=timezone.utc)


@dataclass(frozen=True)
class ListingItem:
    headline: str
    href: str
    outlet: str
    time_text: str | None = None
    datetime_attr: str | None = None


def parse_listing(html: str) -> list[ListingItem]:
    """Default parser for ``<ol class="results"><li class="result">`` listings."""
    soup = BeautifulSoup(html, "html.parser")
    container = soup.find("ol", class_="results")
    if container is None:
        raise ListingParseError("no results container in listing", body=html)
    items = []
    for li in container.find_all("li", class_="result", recursive=False):
        link = li.find("a", class_="headline")
        if link is None or not link.get("href"):
            raise ListingParseError("result entry without headline link", body=html)
        outlet = li.find(class_="outlet")
        t = li.find("time")
        items.append(
            ListingItem(
                headline=link.get_text(" ", strip=True),
                href=link["href"],
                outlet=outlet.get_text(" ", strip=True) if outlet else "",
                time_text=t.get_text(" ", strip=True) if t else None,
                datetime_attr=t.get("datetime") if t else None,
            )
        )
    return items


_RELATIVE_UNITS = {
    "minute": 60,
    "minuto": 60,
    "hour": 3600,
    "hora": 3600,
    "day": 86400,
    "día": 86400,
    "dia": 86400,
    "week": 7 * 86400,
    "semana": 7 * 86400,
    "month": 30 * 86400,
    "mes": 30 * 86400,
}
_RELATIVE_EN = re.compile(r"(\d+)\s+(minute|hour|day|week|month)s?\s+ago", re.I)
_RELATIVE_ES = re.compile(r"hace\s+(\d+)\s+(minuto|hora|día|dia|semana|mes)(?:s|es)?", re.I)


def resolve_listing_time(item: ListingItem, collected_at: datetime) -> tuple[datetime | None, bool]:
    """Exact timestamp from ``datetime=``; otherwise a relative phrase resolved
    against ``collected_at`` and marked approximate."""
    if item.datetime_attr:
        try:
            return _parse_iso(item.datetime_attr), False
        except ValueError:
            pass
    text = item.time_text or ""
    m = _RELATIVE_EN.search(text) or _RELATIVE_ES.search(text)
    if m:
        seconds = int(m.group(1)) * _RELATIVE_UNITS[m.group(2).lower()]
        return collected_at - timedelta(seconds=seconds), True
    if text.strip().lower() in ("yesterday", "ayer"):
        return collected_at - timedelta(days=1), True
    return None, False


@dataclass
class QueryOutcome:
    query: QuerySpec
    results: list[RawResult]
    saturated: bool
    retries: int = 0


class Fetcher:
    """HTTP GET with politeness, UA rotation, retries and no cookie persistence.

    A new ``requests.Session`` is created per request so no cookie survives
    between queries.
    """

    def __init__(
        self,
        policy: FetchPolicy,
        scheduler: HostScheduler | None = None,
        rotator: UserAgentRotator | None = None,
        proxy: str | None = None,
        session_factory: Callable[[], requests.Session] = requests.Session,
    ):
        self.policy = policy
        self.scheduler = scheduler or HostScheduler(policy)
        self.rotator = rotator or UserAgentRotator(policy.user_agents)
        self.proxies = {"http": proxy, "https": proxy} if proxy else None
        self.session_factory = session_factory
        self.request_log: list[tuple[float, str, str]] = []

    @property
    def clock(self):
        return self.scheduler.clock

    def get(self, url: str, *, query_digest: str | None = None) -> tuple[requests.Response, int]:
        """Fetch ``url`` without following redirects. Returns (response, retries used)."""
        host = (urlsplit(url).hostname or "").lower()
        last_exc: Exception | None = None
        response = None
        for attempt in range(self.policy.max_retries + 1):
            if attempt:
                self.clock.sleep(self.policy.max_delay_s * 2 ** (attempt - 1))
            start = self.scheduler.acquire(host)
            agent = self.rotator.next()
            self.request_log.append((start, host, agent))
            session = self.session_factory()
            try:
                response = session.get(
                    url,
                    headers={"User-Agent": agent, "Accept-Language": "*"},
                    timeout=self.policy.timeout_s,
                    allow_redirects=False,
                    proxies=self.proxies,
                )
                _ = response.content
            except requests.RequestException as exc:
                last_exc = exc
                response = None
                log.debug("attempt %d for %s failed: %s", attempt + 1, url, exc)
                continue
            finally:
                session.close()
            if response.status_code >= 500 or response.status_code == 429:
                log.debug("attempt %d for %s got HTTP %d", attempt + 1, url, response.status_code)
                continue
            return response, attempt
        if response is not None:
            return response, self.policy.max_retries
        raise FetchError(
            f"giving up on {url} after {self.policy.max_retries + 1} attempts: {last_exc}",
            query_digest=query_digest,
            url=url,
        )


def search_url(endpoint: str, q: QuerySpec) -> str:
    return f"{endpoint.rstrip('/')}/search?" + urlencode({"q": q.render(), "edition": q.edition.edition_id})


def execute_query(
    q: QuerySpec,
    policy: FetchPolicy,
    endpoint: str,
    fetcher: Fetcher | None = None,
    parser: Callable[[str], list[ListingItem]] = parse_listing,
) -> QueryOutcome:
    fetcher = fetcher or Fetcher(policy)
    url = search_url(endpoint, q)
    response, retries = fetcher.get(url, query_digest=q.digest)
    if retries:
        log.info("query %s needed %d retries", q.digest, retries)
    if response.status_code != 200:
        raise FetchError(f"HTTP {response.status_code} for query {q.render()!r}", query_digest=q.digest, url=url)
    body = response.content.decode(response.encoding or "utf-8", errors="replace")
    items = parser(body)
    collected_at = fetcher.clock.now()
    results = []
    for rank, item in enumerate(items, start=1):
        published, approx = resolve_listing_time(item, collected_at)
        results.append(
            RawResult(
                headline=item.headline,
                result_url=urljoin(url, item.href),
                outlet_label=item.outlet,
                edition_id=q.edition.edition_id,
                query_digest=q.digest,
                collected_at=collected_at,
                rank=rank,
                published_at=published,
                published_approx=approx,
                stage=q.stage.value,
            )
        )
    return QueryOutcome(q, results, saturated=len(results) >= policy.result_cap, retries=retries)


def execute_plan(
    plan,
    policy: FetchPolicy,
    endpoint: str,
    fetcher: Fetcher | None = None,
    parser: Callable[[str], list[ListingItem]] = parse_listing,
) -> Iterator[QueryOutcome | FetchError]:
    """Run each query in order; failures are yielded, not raised, so a run continues."""
    fetcher = fetcher or Fetcher(policy)
    for q in plan:
        try:
            yield execute_query(q, policy, endpoint, fetcher, parser)
        except (FetchError, ListingParseError) as exc:
            log.warning("query %s failed: %s", q.digest, exc)
            yield exc if isinstance(exc, FetchError) else FetchError(str(exc), query_digest=q.digest)


def follow_redirects(url: str, fetcher: Fetcher, max_depth: int = MAX_REDIRECTS) -> tuple[str, requests.Response]:
    visited = [url]
    current = url
    for _ in range(max_depth + 1):
        response, _ = fetcher.get(current)
        if response.is_redirect or (300 <= response.status_code < 400 and "location" in response.headers):
            nxt = urljoin(current, response.headers["location"])
            if nxt in visited:
                raise ResolutionError(f"redirect loop: {' -> '.join(visited + [nxt])}", url=url)
            visited.append(nxt)
            current = nxt
            if len(visited) - 1 > max_depth:
                break
            continue
        if 200 <= response.status_code < 300:
            return current, response
        raise ResolutionError(
            f"terminal HTTP {response.status_code} for {current}", url=url, status=response.status_code, final_url=current
        )
    raise ResolutionError(f"more than {max_depth} redirects from {url}", url=url)


def resolve_redirect(result_url: str, policy: FetchPolicy, fetcher: Fetcher | None = None) -> str:
    fetcher = fetcher or Fetcher(policy)
    final, _ = follow_redirects(result_url, fetcher)
    return final


def content_digest(body: bytes) -> str:
    return hashlib.sha256(body).hexdigest()[:16]
