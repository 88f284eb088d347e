"""Run configuration: editions, stage parameters, politeness and filters.

Configuration files are JSON. Relative file references (domain lists) are
resolved against the configuration file's directory; a bare name that does
not exist there is looked up among the bundled configurations.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Sequence

from newsharvest.errors import ConfigError
from newsharvest.harvest import FetchPolicy
from newsharvest.plan import (
    PortalEdition,
    QueryPlan,
    build_iso_stage,
    build_stage1,
    expand_domains,
    segment_months,
    validate_editions,
)


@dataclass(frozen=True)
class RunConfig:
    topic: str
    editions: tuple[PortalEdition, ...]
    raw: Mapping[str, Any] = field(repr=False, default_factory=dict)
    base_dir: Path | None = None
    expected_editions: int | None = None
    months: tuple[str, str, str] | None = None  # (edition_id, start, end)
    iso_tokens: Mapping[str, Sequence[str]] | Sequence[str] | None = None
    domain_editions: tuple[str, ...] = ()
    domains: tuple[str, ...] | None = None  # None: derive from harvested records
    topic_tokens: tuple[str, ...] = ()
    threshold: float = 0.9
    min_delay_s: float = 1.5
    max_delay_s: float = 4.0
    result_cap: int = 100
    max_retries: int = 3
    model: str = "mistral-nemo:12b"

    def edition(self, edition_id: str) -> PortalEdition:
        for e in self.editions:
            if e.edition_id == edition_id:
                return e
        raise ConfigError(f"unknown edition {edition_id!r}")

    def policy(self, **overrides: Any) -> FetchPolicy:
        values = dict(
            min_delay_s=self.min_delay_s,
            max_delay_s=self.max_delay_s,
            result_cap=self.result_cap,
            max_retries=self.max_retries,
        )
        values.update({k: v for k, v in overrides.items() if v is not None})
        return FetchPolicy(**values)

    def stage1(self) -> QueryPlan:
        return build_stage1(self.editions, self.topic)

    def stage2(self) -> QueryPlan:
        if not self.months:
            return QueryPlan()
        edition_id, start, end = self.months
        return segment_months(start, end, self.edition(edition_id), self.topic)

    def stage3(self) -> QueryPlan:
        if not self.iso_tokens:
            return QueryPlan()
        return build_iso_stage(self.editions, self.topic, self.iso_tokens)

    def stage4(self, harvested_domains: Sequence[str] = ()) -> QueryPlan:
        domains = self.domains if self.domains is not None else tuple(sorted(set(harvested_domains)))
        return expand_domains(domains, [self.edition(e) for e in self.domain_editions], self.topic)

    def static_plan(self) -> QueryPlan:
        """Every stage that can be planned before harvesting."""
        plan = self.stage1() + self.stage2() + self.stage3()
        if self.domains is not None:
            plan = plan + self.stage4()
        return plan


def _read_lines(path: Path) -> tuple[str, ...]:
    lines = []
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip().lower()
        if line:
            lines.append(line)
    return tuple(lines)


def _resolve(name: str, base_dir: Path | None) -> Path:
    candidate = Path(name)
    if not candidate.is_absolute() and base_dir is not None:
        candidate = base_dir / candidate
    if candidate.exists():
        return candidate
    bundled = resources.files("newsharvest").joinpath(f"configs/{Path(name).name}")
    if bundled.is_file():
        return Path(str(bundled))
    raise ConfigError(f"referenced file not found: {name}")


def config_from_dict(doc: Mapping[str, Any], base_dir: Path | None = None) -> RunConfig:
    try:
        topic = str(doc["topic"]).strip()
        editions = tuple(PortalEdition.from_dict(e) for e in doc["editions"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"configuration needs 'topic' and 'editions': {exc}") from exc
    if not topic:
        raise ConfigError("topic must be non-empty")
    expected = doc.get("expected_editions")
    validate_editions(editions, expected)
    stages = doc.get("stages", {})

    months = None
    if "S2_months" in stages:
        s2 = stages["S2_months"]
        months = (s2["edition"], s2["start"], s2["end"])

    iso = stages.get("S3_iso", {}).get("tokens")

    s4 = stages.get("S4_domains", {})
    domains: tuple[str, ...] | None = None
    if "domains" in s4:
        domains = tuple(d.strip().lower() for d in s4["domains"])
    elif "domains_file" in s4:
        domains = _read_lines(_resolve(s4["domains_file"], base_dir))

    validation = doc.get("validation", {})
    politeness = doc.get("politeness", {})
    cfg = RunConfig(
        topic=topic,
        editions=editions,
        raw=dict(doc),
        base_dir=base_dir,
        expected_editions=expected,
        months=months,
        iso_tokens=iso,
        domain_editions=tuple(s4.get("editions", ())),
        domains=domains,
        topic_tokens=tuple(validation.get("topic_tokens", (topic,))),
        threshold=float(doc.get("dedup_threshold", 0.9)),
        min_delay_s=float(politeness.get("min_delay_s", 1.5)),
        max_delay_s=float(politeness.get("max_delay_s", 4.0)),
        result_cap=int(politeness.get("result_cap", 100)),
        max_retries=int(politeness.get("max_retries", 3)),
        model=str(doc.get("model", "mistral-nemo:12b")),
    )
    for e in cfg.domain_editions:
        cfg.edition(e)
    if not 0.0 <= cfg.threshold <= 1.0:
        raise ConfigError("dedup_threshold must lie in [0, 1]")
    return cfg


def load_config(path: str | Path) -> RunConfig:
    """Load a configuration file; a bare bundled name such as ``simnews.json`` also works."""
    p = Path(path)
    if not p.exists():
        bundled = resources.files("newsharvest").joinpath(f"configs/{p.name}")
        if not bundled.is_file():
            raise ConfigError(f"configuration file not found: {path}")
        p = Path(str(bundled))
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON: {exc}") from exc
    return config_from_dict(doc, p.parent)
