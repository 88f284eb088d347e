"""Staged query planning.

A plan is an ordered list of aggregator searches. Five stages are supported:

* ``S1_editions`` - one plain topic search per portal edition
* ``S2_months``   - one search per calendar month on a single edition
* ``S3_iso``      - ``site:<iso>`` restricted searches
* ``S4_domains``  - ``site:<domain>`` searches for every harvested outlet
* ``S5_backfill`` - headline searches used to complete missing full text

Query strings follow ``<topic> [site:<restrict>] [after:<date> before:<date>]``.
"""

from __future__ import annotations

import calendar
import hashlib
import json
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from enum import Enum
from typing import Iterable, Mapping, Sequence

from newsharvest.errors import ConfigError, RangeError


class Stage(str, Enum):
    S1_EDITIONS = "S1_editions"
    S2_MONTHS = "S2_months"
    S3_ISO = "S3_iso"
    S4_DOMAINS = "S4_domains"
    S5_BACKFILL = "S5_backfill"

    @property
    def order(self) -> int:
        return list(Stage).index(self)


@dataclass(frozen=True)
class PortalEdition:
    edition_id: str
    region_code: str
    language_code: str

    def __post_init__(self) -> None:
        if not self.region_code or not self.language_code:
            raise ConfigError(f"edition {self.edition_id!r} needs region and language codes")
        if not self.edition_id:
            raise ConfigError("edition_id must be non-empty")

    @classmethod
    def from_dict(cls, d: Mapping[str, str]) -> "PortalEdition":
        return cls(d["edition_id"], d["region_code"], d["language_code"])

    def to_dict(self) -> dict[str, str]:
        return {
            "edition_id": self.edition_id,
            "region_code": self.region_code,
            "language_code": self.language_code,
        }


@dataclass(frozen=True)
class QuerySpec:
    edition: PortalEdition
    topic: str
    stage: Stage
    date_window: tuple[date, date] | None = None
    site_restrict: str | None = None

    def __post_init__(self) -> None:
        if not self.topic.strip():
            raise ConfigError("query topic must be non-empty")
        if (self.date_window is not None) != (self.stage is Stage.S2_MONTHS):
            raise ConfigError(f"date_window must be set exactly for {Stage.S2_MONTHS.value} queries")
        needs_site = self.stage in (Stage.S3_ISO, Stage.S4_DOMAINS)
        if (self.site_restrict is not None) != needs_site:
            raise ConfigError("site_restrict must be set exactly for S3_iso and S4_domains queries")
        if self.date_window is not None and self.date_window[0] > self.date_window[1]:
            raise RangeError("date_window start after end")

    def render(self) -> str:
        topic = self.topic.strip()
        if any(ch.isspace() for ch in topic) and not (topic.startswith('"') and topic.endswith('"')):
            topic = f'"{topic}"'
        parts = [topic]
        if self.site_restrict:
            parts.append(f"site:{self.site_restrict}")
        if self.date_window:
            start, end = self.date_window
            parts.append(f"after:{start.isoformat()}")
            parts.append(f"before:{end.isoformat()}")
        return " ".join(parts)

    @property
    def digest(self) -> str:
        payload = f"{self.edition.edition_id}\t{self.render()}".encode("utf-8")
        return hashlib.sha256(payload).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "edition": self.edition.to_dict(),
            "topic": self.topic,
            "stage": self.stage.value,
            "date_window": [d.isoformat() for d in self.date_window] if self.date_window else None,
            "site_restrict": self.site_restrict,
            "query": self.render(),
            "digest": self.digest,
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "QuerySpec":
        window = d.get("date_window")
        return cls(
            edition=PortalEdition.from_dict(d["edition"]),
            topic=d["topic"],
            stage=Stage(d["stage"]),
            date_window=(date.fromisoformat(window[0]), date.fromisoformat(window[1])) if window else None,
            site_restrict=d.get("site_restrict"),
        )


@dataclass(frozen=True)
class QueryPlan:
    specs: tuple[QuerySpec, ...] = ()
    config_digest: str = ""
    created_at: datetime | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        seen: set[tuple[str, str]] = set()
        for spec in self.specs:
            key = (spec.edition.edition_id, spec.render())
            if key in seen:
                raise ConfigError(f"duplicate query {key[1]!r} on edition {key[0]}")
            seen.add(key)

    def __len__(self) -> int:
        return len(self.specs)

    def __iter__(self):
        return iter(self.specs)

    def __add__(self, other: "QueryPlan") -> "QueryPlan":
        return QueryPlan(self.specs + other.specs, self.config_digest or other.config_digest, self.created_at)

    def by_stage(self, stage: Stage) -> list[QuerySpec]:
        return [s for s in self.specs if s.stage is stage]

    def stage_counts(self) -> dict[str, int]:
        counts = {stage.value: 0 for stage in Stage}
        for s in self.specs:
            counts[s.stage.value] += 1
        return counts

    def render_lines(self) -> str:
        """Deterministic text form (no timestamp): one ``edition<TAB>stage<TAB>query`` per line."""
        return "".join(f"{s.edition.edition_id}\t{s.stage.value}\t{s.render()}\n" for s in self.specs)

    def to_json(self) -> str:
        doc = {
            "config_digest": self.config_digest,
            "created_at": self.created_at.isoformat() if self.created_at else None,
            "stage_counts": self.stage_counts(),
            "queries": [s.to_dict() for s in self.specs],
        }
        return json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "QueryPlan":
        doc = json.loads(text)
        created = doc.get("created_at")
        return cls(
            specs=tuple(QuerySpec.from_dict(q) for q in doc["queries"]),
            config_digest=doc.get("config_digest", ""),
            created_at=datetime.fromisoformat(created) if created else None,
        )


def validate_editions(editions: Sequence[PortalEdition], expected_count: int | None = None) -> None:
    if not editions:
        raise ConfigError("edition list is empty")
    ids = [e.edition_id for e in editions]
    dupes = sorted({i for i in ids if ids.count(i) > 1})
    if dupes:
        raise ConfigError(f"duplicate edition_id(s): {', '.join(dupes)}")
    if expected_count is not None and len(editions) != expected_count:
        raise ConfigError(f"expected {expected_count} editions, got {len(editions)}")


def build_stage1(editions: Sequence[PortalEdition], topic: str) -> QueryPlan:
    validate_editions(editions)
    return QueryPlan(tuple(QuerySpec(e, topic, Stage.S1_EDITIONS) for e in editions))


def parse_month(value: str | tuple[int, int]) -> tuple[int, int]:
    if isinstance(value, tuple):
        year, month = value
    else:
        try:
            year_s, month_s = value.strip().split("-")
            year, month = int(year_s), int(month_s)
        except ValueError as exc:
            raise RangeError(f"bad year-month {value!r}; expected YYYY-MM") from exc
    if not 1 <= month <= 12:
        raise RangeError(f"month out of range in {value!r}")
    return year, month


def months_between(start: tuple[int, int], end: tuple[int, int]) -> int:
    return (end[0] - start[0]) * 12 + (end[1] - start[1])


def month_window(year: int, month: int) -> tuple[date, date]:
    last = calendar.monthrange(year, month)[1]
    return date(year, month, 1), date(year, month, last)


def segment_months(
    start_month: str | tuple[int, int],
    end_month: str | tuple[int, int],
    edition: PortalEdition,
    topic: str,
) -> QueryPlan:
    start = parse_month(start_month)
    end = parse_month(end_month)
    if start > end:
        raise RangeError(f"start month {start} is after end month {end}")
    specs = []
    year, month = start
    for _ in range(months_between(start, end) + 1):
        specs.append(QuerySpec(edition, topic, Stage.S2_MONTHS, date_window=month_window(year, month)))
        month += 1
        if month == 13:
            year, month = year + 1, 1
    return QueryPlan(tuple(specs))


def expand_domains(domains: Sequence[str], editions: Sequence[PortalEdition], topic: str) -> QueryPlan:
    cleaned = [d.strip().lower() for d in domains]
    if len(set(cleaned)) != len(cleaned):
        raise ConfigError("domain list contains duplicates")
    return QueryPlan(
        tuple(
            QuerySpec(edition, topic, Stage.S4_DOMAINS, site_restrict=domain)
            for domain in cleaned
            for edition in editions
        )
    )


def build_iso_stage(
    editions: Sequence[PortalEdition],
    topic: str,
    iso_tokens: Sequence[str] | Mapping[str, Sequence[str]],
) -> QueryPlan:
    """ISO-restricted searches.

    ``iso_tokens`` is either one token list applied to every edition, or a
    mapping ``edition_id -> tokens`` for per-edition restrictions.
    """
    if not editions:
        raise ConfigError("edition list is empty")
    if isinstance(iso_tokens, Mapping):
        known = {e.edition_id for e in editions}
        unknown = sorted(set(iso_tokens) - known)
        if unknown:
            raise ConfigError(f"ISO restrictions reference unknown editions: {', '.join(unknown)}")
        per_edition = {e.edition_id: list(iso_tokens.get(e.edition_id, ())) for e in editions}
    else:
        per_edition = {e.edition_id: list(iso_tokens) for e in editions}
    if not any(per_edition.values()):
        raise ConfigError("ISO restriction set is empty")
    specs = []
    for edition in editions:
        for token in per_edition[edition.edition_id]:
            specs.append(QuerySpec(edition, topic, Stage.S3_ISO, site_restrict=token.strip().lower()))
    return QueryPlan(tuple(specs))


def build_backfill(headlines: Iterable[tuple[PortalEdition, str]]) -> QueryPlan:
    """One quoted-headline search per record still lacking full text."""
    specs = []
    seen = set()
    for edition, headline in headlines:
        text = " ".join(headline.replace('"', " ").split())
        if not text or (edition.edition_id, text) in seen:
            continue
        seen.add((edition.edition_id, text))
        specs.append(QuerySpec(edition, f'"{text}"', Stage.S5_BACKFILL))
    return QueryPlan(tuple(specs))


def config_digest(config: Mapping) -> str:
    canonical = json.dumps(config, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


def stamp(plan: QueryPlan, config: Mapping, created_at: datetime | None = None) -> QueryPlan:
    return QueryPlan(plan.specs, config_digest(config), created_at or datetime.now(timezone.utc))
