"""Stage orchestration shared by the command-line subcommands.

A run moves through: query stages S1-S4 (harvest, raw dedup, redirect
resolution and extraction, cumulative record dedup), headline backfill (S5),
hallucination screening, model annotation, noise validation, enrichment and
analytics.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from newsharvest.analyze import (
    StageEvent,
    StageLedger,
    build_stage_ledger,
    coverage_breakdown,
    distributions_to_csv,
    scores_by_cell,
    summary,
    typology_counts,
)
from newsharvest.config import RunConfig
from newsharvest.dedup import DedupDecision, canonicalize_url, decisions_to_csv, dedup_merge, duplicate_components
from newsharvest.domains import registrable_domain
from newsharvest.enrich import Enrichment, Snapshot, TypologyRules, enrich_all, enrichments_to_csv
from newsharvest.errors import FetchError, ResolutionError, UrlError
from newsharvest.extract import BackfillOutcome, apply_extraction, backfill_content, classify_resource
from newsharvest.harvest import (
    Fetcher,
    FetchPolicy,
    HostScheduler,
    QueryOutcome,
    RawResult,
    SimulatedClock,
    SystemClock,
    UserAgentRotator,
    execute_plan,
    follow_redirects,
)
from newsharvest.llmmeta import HallucinationFlag, ModelClient, annotate_all, detect_hallucination
from newsharvest.plan import QueryPlan, Stage, build_backfill
from newsharvest.store import (
    NO_CONTENT,
    PUBLISHED_APPROX,
    UNRESOLVED,
    Dataset,
    ExtractionMethod,
    NewsRecord,
    Origin,
    dataset_to_csv,
)
from newsharvest.validate import NoiseReport, ValidationConfig, run_validation

log = logging.getLogger(__name__)

DATASET_NAME = "google_news"


def record_id(url: str) -> str:
    try:
        key = str(canonicalize_url(url))
    except UrlError:
        key = url
    return "gn-" + hashlib.sha256(key.encode("utf-8")).hexdigest()[:12]


def make_fetcher(
    policy: FetchPolicy,
    seed: int | None = None,
    proxy: str | None = None,
    virtual_clock: bool = False,
) -> Fetcher:
    rng = random.Random(seed)
    clock = SimulatedClock() if virtual_clock else SystemClock()
    scheduler = HostScheduler(policy, random.Random(rng.random()), clock)
    rotator = UserAgentRotator(policy.user_agents, random.Random(rng.random()))
    return Fetcher(policy, scheduler, rotator, proxy=proxy)


def raw_to_jsonl(results: Iterable[RawResult]) -> str:
    return "".join(json.dumps(r.to_dict(), ensure_ascii=False, sort_keys=True) + "\n" for r in results)


def raw_from_jsonl(text: str) -> list[RawResult]:
    return [RawResult.from_dict(json.loads(line)) for line in text.splitlines() if line.strip()]


def base_record(raw: RawResult, url: str, flags: Iterable[str] = ()) -> NewsRecord:
    flags = set(flags)
    if raw.published_approx:
        flags.add(PUBLISHED_APPROX)
    return NewsRecord(
        id=record_id(url),
        headline=raw.headline,
        outlet_name=raw.outlet_label,
        source_domain=registrable_domain(url),
        published_at=raw.published_at,
        collected_at=raw.collected_at,
        source_url=url,
        quality_flags=frozenset(flags),
        stage=raw.stage,
        edition_id=raw.edition_id,
    )


def resolve_and_extract(raw: RawResult, fetcher: Fetcher, fallback_language: str | None = None) -> NewsRecord:
    """Follow the result link to the publisher and extract the page."""
    try:
        final_url, response = follow_redirects(raw.result_url, fetcher)
    except ResolutionError as exc:
        log.info("unresolved %s: %s", raw.result_url, exc)
        return base_record(raw, exc.final_url or raw.result_url, {UNRESOLVED, NO_CONTENT})
    except FetchError as exc:
        log.info("fetch failed for %s: %s", raw.result_url, exc)
        return base_record(raw, exc.url or raw.result_url, {UNRESOLVED, NO_CONTENT})
    body = response.content
    resource = classify_resource(final_url, response.headers, body[:64])
    return apply_extraction(
        base_record(raw, final_url), resource, body, ExtractionMethod.DIRECT_FETCH, fallback_language, response.encoding
    )


@dataclass
class StageRun:
    stage: Stage
    queries: int
    retrieved: int
    unique_new: int
    failures: int
    saturated: int


@dataclass
class Collector:
    """Accumulates raw results and unique records across stages."""

    config: RunConfig
    fetcher: Fetcher
    endpoint: str
    threshold: float = 0.9
    raw: list[RawResult] = field(default_factory=list)
    records: list[NewsRecord] = field(default_factory=list)
    events: list[StageEvent] = field(default_factory=list)
    stage_runs: list[StageRun] = field(default_factory=list)
    raw_decisions: list[DedupDecision] = field(default_factory=list)
    record_decisions: list[DedupDecision] = field(default_factory=list)
    failures: list[FetchError] = field(default_factory=list)

    def language_of(self, edition_id: str | None) -> str | None:
        try:
            return self.config.edition(edition_id).language_code if edition_id else None
        except Exception:  # noqa: BLE001 - unknown edition just means no fallback language
            return None

    def execute(self, plan: QueryPlan) -> tuple[list[RawResult], list[QueryOutcome]]:
        results: list[RawResult] = []
        outcomes: list[QueryOutcome] = []
        for item in execute_plan(plan, self.fetcher.policy, self.endpoint, self.fetcher):
            if isinstance(item, FetchError):
                self.failures.append(item)
                continue
            outcomes.append(item)
            results.extend(item.results)
        return results, outcomes

    def run_stage(self, stage: Stage, plan: QueryPlan) -> StageRun:
        stage_raw, outcomes = self.execute(plan)
        return self.absorb(stage, stage_raw, len(plan), len(plan) - len(outcomes), sum(o.saturated for o in outcomes))

    def absorb(
        self, stage: Stage, stage_raw: Sequence[RawResult], queries: int = 0, failures: int = 0, saturated: int = 0
    ) -> StageRun:
        """Dedup one stage's raw results against everything seen, then resolve the new stories."""
        known = len(self.raw)
        combined = self.raw + list(stage_raw)
        _, decisions = dedup_merge(combined, self.threshold)
        self.raw_decisions = decisions
        fresh: list[NewsRecord] = []
        for members in duplicate_components(combined, self.threshold):
            if members[0] < known:
                continue  # story already seen in an earlier stage
            keeper = min(members, key=lambda i: (combined[i].collected_at, i))
            raw = combined[keeper]
            fresh.append(resolve_and_extract(raw, self.fetcher, self.language_of(raw.edition_id)))
        self.raw = combined
        before = len(self.records)
        self.records, decisions = dedup_merge(self.records + fresh, self.threshold)
        self.record_decisions.extend(decisions)
        run = StageRun(stage, queries, len(stage_raw), len(self.records) - before, failures, saturated)
        self.stage_runs.append(run)
        self.events.append(StageEvent(stage, run.retrieved, run.unique_new, stage.value))
        return run

    def harvested_domains(self) -> list[str]:
        return sorted({r.source_domain for r in self.records if r.source_domain})

    def backfill(self) -> tuple[StageRun, list[BackfillOutcome]]:
        """S5: headline searches for records that still lack text."""
        todo = [r for r in self.records if not r.full_text and not r.non_html_kind]
        pairs = []
        for r in todo:
            try:
                pairs.append((self.config.edition(r.edition_id or ""), r.headline))
            except Exception:  # noqa: BLE001
                continue
        plan = build_backfill(pairs)
        results, outcomes = self.execute(plan)
        self.raw.extend(results)
        by_headline: dict[str, list[str]] = {}
        for outcome in outcomes:
            key = outcome.query.topic.strip('"')
            by_headline.setdefault(key, []).extend(res.result_url for res in outcome.results)

        def alternates(record: NewsRecord) -> list[str]:
            return by_headline.get(" ".join(record.headline.replace('"', " ").split()), [])

        def fetch_page(url: str):
            final, response = follow_redirects(url, self.fetcher)
            resource = classify_resource(final, response.headers, response.content[:64])
            return final, resource, response.content, response.encoding

        updated, report = backfill_content(todo, fetch_page, alternates, lambda r: self.language_of(r.edition_id))
        replaced = {r.id: r for r in updated}
        self.records = [replaced.get(r.id, r) for r in self.records]
        run = StageRun(Stage.S5_BACKFILL, len(plan), len(results), 0, len(plan) - len(outcomes), 0)
        self.stage_runs.append(run)
        self.events.append(StageEvent(Stage.S5_BACKFILL, len(results), 0, "backfill"))
        return run, report


@dataclass
class RunResult:
    prefilter: Dataset
    final: Dataset
    report: NoiseReport
    ledger: StageLedger
    enrichments: list[Enrichment]
    flags: list[HallucinationFlag]
    backfill: list[BackfillOutcome]
    collector: Collector


def run_all(
    config: RunConfig,
    fetcher: Fetcher,
    endpoint: str,
    model: ModelClient | None,
    snapshot: Snapshot,
    rules: TypologyRules,
    threshold: float | None = None,
) -> RunResult:
    threshold = config.threshold if threshold is None else threshold
    col = Collector(config, fetcher, endpoint, threshold)
    col.run_stage(Stage.S1_EDITIONS, config.stage1())
    col.run_stage(Stage.S2_MONTHS, config.stage2())
    col.run_stage(Stage.S3_ISO, config.stage3())
    col.run_stage(Stage.S4_DOMAINS, config.stage4(col.harvested_domains()))
    _, backfilled = col.backfill()

    ds = Dataset(DATASET_NAME, Origin.AGGREGATOR).derive(col.records, "harvest", f"stages={len(col.stage_runs)}")
    records, flags = detect_hallucination(ds.records)
    ds = ds.derive(records, "hallucination", f"groups={len(flags)}")
    if model is not None:
        ds = ds.derive(annotate_all(ds.records, model), "annotate", f"model={model.model}")
    final, report = run_validation(ds, ValidationConfig(config.topic_tokens))
    ledger = build_stage_ledger(col.events, post_filter=len(final))
    enrichments = enrich_all(final.records, snapshot, rules)
    return RunResult(ds, final, report, ledger, enrichments, flags, backfilled, col)


def write_outputs(result: RunResult, out: Path) -> dict[str, str]:
    """Write every run artifact; returns name -> path relative to ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    col = result.collector
    cov = coverage_breakdown(result.enrichments)
    cells = scores_by_cell({DATASET_NAME: result.enrichments})
    files = {
        "raw_results": ("raw_results.jsonl", raw_to_jsonl(col.raw)),
        "dedup_decisions": ("dedup_decisions.csv", decisions_to_csv(col.raw_decisions + col.record_decisions)),
        "prefilter": ("records_prefilter.csv", dataset_to_csv(result.prefilter)),
        "dataset": ("dataset.csv", dataset_to_csv(result.final)),
        "noise_report": ("noise_report.csv", result.report.to_csv()),
        "noise_summary": ("noise_summary.txt", result.report.summary()),
        "hallucination_flags": ("hallucination_flags.csv", flags_to_csv(result.flags)),
        "backfill": ("backfill.csv", backfill_to_csv(result.backfill)),
        "stage_events": ("stage_events.csv", events_to_csv(col.events)),
        "ledger": ("stage_ledger.csv", result.ledger.to_csv()),
        "enrichment": ("enrichment.csv", enrichments_to_csv(result.enrichments)),
        "coverage": ("coverage.csv", cov.to_csv()),
        "distributions": ("distributions.csv", distributions_to_csv(cells) if cells else ""),
        "analysis_summary": (
            "analysis_summary.txt",
            summary(result.ledger, coverage=cov, typologies=typology_counts(result.enrichments)),
        ),
    }
    written = {}
    for name, (fname, text) in files.items():
        (out / fname).write_text(text, encoding="utf-8", newline="")
        written[name] = fname
    return written


def flags_to_csv(flags: Sequence[HallucinationFlag]) -> str:
    lines = ["group_key,member_ids,action\r\n"]
    for f in flags:
        lines.append(f"{f.group_key},{';'.join(f.member_ids)},{f.action.value}\r\n")
    return "".join(lines)


def backfill_to_csv(rows: Sequence[BackfillOutcome]) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["record_id", "outcome", "reason"])
    for r in rows:
        w.writerow([r.record_id, r.outcome, r.reason])
    return buf.getvalue()


def events_to_csv(events: Sequence[StageEvent]) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["stage", "retrieved", "unique_new", "label"])
    for e in events:
        w.writerow([e.stage.value, e.retrieved, e.unique_new, e.label])
    return buf.getvalue()


def events_from_csv(text: str) -> list[StageEvent]:
    rows = csv.DictReader(io.StringIO(text, newline=""))
    return [StageEvent(Stage(r["stage"]), int(r["retrieved"]), int(r["unique_new"]), r.get("label") or "") for r in rows]


def file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()

