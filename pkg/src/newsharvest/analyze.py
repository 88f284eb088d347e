"""Dataset analytics: stage accumulation, cross-source overlap, score
distributions and country coverage. Everything here is a pure fold over
immutable inputs and emits data series, not charts."""

from __future__ import annotations

import csv
import io
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Hashable, Iterable, Mapping, Sequence

from newsharvest.dedup import (
    DEFAULT_THRESHOLD,
    candidate_pairs,
    headline_similarity,
    headline_tokens,
    safe_canonical,
)
from newsharvest.enrich import Enrichment
from newsharvest.errors import DomainError, SequencingError
from newsharvest.plan import Stage
from newsharvest.store import NewsRecord

# --- stage ledger ------------------------------------------------------------


@dataclass(frozen=True)
class StageEvent:
    stage: Stage
    retrieved: int
    unique_new: int
    label: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "stage", Stage(self.stage))
        if self.retrieved < 0 or self.unique_new < 0:
            raise ValueError("counts must be non-negative")
        if self.unique_new > self.retrieved:
            raise ValueError(f"unique_new {self.unique_new} exceeds retrieved {self.retrieved}")


@dataclass(frozen=True)
class StageRow:
    stage: Stage
    retrieved: int
    unique_new: int
    cumulative_unique: int
    cumulative_retrieved: int


@dataclass(frozen=True)
class StageLedger:
    rows: tuple[StageRow, ...] = ()
    post_filter: int | None = None

    @property
    def pre_filter(self) -> int:
        return self.rows[-1].cumulative_unique if self.rows else 0

    @property
    def reduction_ratio(self) -> float | None:
        if self.post_filter is None:
            return None
        return 1 - self.post_filter / self.pre_filter if self.pre_filter else 0.0

    def cumulative(self, stage: Stage | str) -> int:
        stage = Stage(stage)
        for row in self.rows:
            if row.stage is stage:
                return row.cumulative_unique
        raise KeyError(stage.value)

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["stage", "retrieved", "unique_new", "cumulative_unique", "cumulative_retrieved"])
        for r in self.rows:
            w.writerow([r.stage.value, r.retrieved, r.unique_new, r.cumulative_unique, r.cumulative_retrieved])
        w.writerow(["pre_filter", "", "", self.pre_filter, ""])
        if self.post_filter is not None:
            w.writerow(["post_filter", "", "", self.post_filter, ""])
            w.writerow(["reduction_ratio", "", "", f"{self.reduction_ratio:.6f}", ""])
        return buf.getvalue()


def build_stage_ledger(events: Iterable[StageEvent], post_filter: int | None = None) -> StageLedger:
    """Fold ordered per-stage dedup outcomes; several events may share a stage."""
    per_stage: dict[Stage, list[int]] = {}
    last: Stage | None = None
    for ev in events:
        if last is not None and ev.stage.order < last.order:
            raise SequencingError(f"stage {ev.stage.value} ({ev.label or 'unlabelled'}) arrives after {last.value}")
        last = ev.stage
        acc = per_stage.setdefault(ev.stage, [0, 0])
        acc[0] += ev.retrieved
        acc[1] += ev.unique_new
    rows = []
    cum_u = cum_r = 0
    for stage, (retrieved, new) in per_stage.items():
        cum_u += new
        cum_r += retrieved
        rows.append(StageRow(stage, retrieved, new, cum_u, cum_r))
    if post_filter is not None and post_filter > cum_u:
        raise ValueError(f"post_filter {post_filter} exceeds pre-filter total {cum_u}")
    return StageLedger(tuple(rows), post_filter)


# --- overlap -------------------------------------------------------------------


@dataclass(frozen=True)
class SourceShare:
    total: int
    exclusive: int

    @property
    def exclusive_pct(self) -> float:
        return 100.0 * self.exclusive / self.total if self.total else 0.0


@dataclass(frozen=True)
class OverlapReport:
    sources: tuple[str, ...]
    shares: Mapping[str, SourceShare]
    # linked entities per Venn region, keyed by the exact set of sources
    regions: Mapping[frozenset[str], int]

    @property
    def union_size(self) -> int:
        return sum(self.regions.values())

    def intersection(self, *names: str) -> int:
        """Entities present in at least all of ``names``."""
        want = set(names)
        return sum(n for region, n in self.regions.items() if want <= region)

    def inclusion_exclusion(self) -> int:
        total = 0
        for k in range(1, len(self.sources) + 1):
            sign = 1 if k % 2 else -1
            total += sign * sum(self.intersection(*combo) for combo in combinations(self.sources, k))
        return total

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["kind", "key", "total", "exclusive", "exclusive_pct"])
        for name in self.sources:
            s = self.shares[name]
            w.writerow(["source", name, s.total, s.exclusive, f"{s.exclusive_pct:.2f}"])
        for region in sorted(self.regions, key=lambda r: (len(r), sorted(r))):
            w.writerow(["region", "+".join(sorted(region)), self.regions[region], "", ""])
        return buf.getvalue()


Linker = Callable[[NewsRecord, NewsRecord], bool]


def _dates_agree(a: NewsRecord, b: NewsRecord) -> bool:
    da = a.link_fields().published
    db = b.link_fields().published
    return da is None or db is None or da == db


def default_linker(threshold: float = DEFAULT_THRESHOLD) -> Linker:
    """URL equality when both sides carry a URL, else headline similarity on the same date."""

    def link(a: NewsRecord, b: NewsRecord) -> bool:
        ca, cb = safe_canonical(a.source_url), safe_canonical(b.source_url)
        if ca is not None and cb is not None:
            return ca == cb
        return _dates_agree(a, b) and headline_similarity(a.headline, b.headline) >= threshold

    return link


def overlap(
    datasets: Mapping[str, Sequence[NewsRecord]],
    linker: Linker | None = None,
    key: Callable[[NewsRecord], Hashable] | None = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> OverlapReport:
    """Link records across 2-3 datasets and report exclusivity and Venn regions.

    ``key`` gives exact linkage on a hashable key; otherwise ``linker`` (or the
    default URL/headline linker) is applied to candidate cross-dataset pairs.
    """
    names = tuple(datasets)
    if not 2 <= len(names) <= 3:
        raise ValueError("overlap needs two or three datasets")
    pooled: list[NewsRecord] = []
    owner: list[str] = []
    for name in names:
        pooled.extend(datasets[name])
        owner.extend([name] * len(datasets[name]))

    parent = list(range(len(pooled)))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(a: int, b: int) -> None:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)

    if key is not None:
        first: dict[Hashable, int] = {}
        for i, r in enumerate(pooled):
            k = key(r)
            if k in first:
                union(first[k], i)
            else:
                first[k] = i
    else:
        custom = linker is not None
        linker = linker or default_linker(threshold)
        pairs: set[tuple[int, int]] = set()
        if custom:
            pairs = {(i, j) for i in range(len(pooled)) for j in range(i + 1, len(pooled))}
        else:
            by_url: dict[object, list[int]] = defaultdict(list)
            for i, r in enumerate(pooled):
                c = safe_canonical(r.source_url)
                if c is not None:
                    by_url[c].append(i)
            for members in by_url.values():
                pairs.update((members[0], m) for m in members[1:])
            tokens = [headline_tokens(r.headline) for r in pooled]
            pairs.update(candidate_pairs(tokens, threshold))
        for i, j in pairs:
            if owner[i] != owner[j] and linker(pooled[i], pooled[j]):
                union(i, j)

    members_of: dict[int, set[str]] = defaultdict(set)
    for i in range(len(pooled)):
        members_of[find(i)].add(owner[i])
    regions = Counter(frozenset(s) for s in members_of.values())
    shares = {}
    for name in names:
        idx = [i for i in range(len(pooled)) if owner[i] == name]
        exclusive = sum(1 for i in idx if members_of[find(i)] == {name})
        shares[name] = SourceShare(len(idx), exclusive)
    return OverlapReport(names, shares, dict(regions))


# --- distributions ---------------------------------------------------------------

QUARTILE_METHOD = "median-of-halves; the median is excluded from both halves when n is odd"


def _median(sorted_values: Sequence[float]) -> float:
    n = len(sorted_values)
    mid = n // 2
    if n % 2:
        return float(sorted_values[mid])
    return (sorted_values[mid - 1] + sorted_values[mid]) / 2


@dataclass(frozen=True)
class DistributionStats:
    n: int
    min: float
    q1: float
    median: float
    q3: float
    max: float
    mean: float
    method: str = QUARTILE_METHOD

    def as_row(self) -> list[str]:
        return [str(self.n)] + [f"{v:.4f}" for v in (self.min, self.q1, self.median, self.q3, self.max, self.mean)]


def distribution_stats(scores: Iterable[float]) -> DistributionStats:
    values = sorted(float(s) for s in scores)
    if not values:
        raise DomainError("distribution_stats needs at least one score")
    if any(math.isnan(v) for v in values):
        raise DomainError("scores contain NaN")
    n = len(values)
    if n == 1:
        v = values[0]
        return DistributionStats(1, v, v, v, v, v, v)
    half = n // 2
    lower, upper = values[:half], values[half + (n % 2):]
    return DistributionStats(
        n=n,
        min=values[0],
        q1=_median(lower),
        median=_median(values),
        q3=_median(upper),
        max=values[-1],
        mean=math.fsum(values) / n,
    )


def scores_by_cell(
    sources: Mapping[str, Iterable[Enrichment]],
    home_country: str = "ES",
) -> dict[tuple[str, str], list[float]]:
    """SMR overall scores per (source, national|international) cell; unmatched rows are skipped."""
    cells: dict[tuple[str, str], list[float]] = {}
    for source, rows in sources.items():
        for e in rows:
            if e.overall is None:
                continue
            scope = "national" if (e.country or "").upper() == home_country.upper() else "international"
            cells.setdefault((source, scope), []).append(e.overall)
    return cells


def distributions_to_csv(cells: Mapping[tuple[str, str], Sequence[float]]) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["source", "scope", "n", "min", "q1", "median", "q3", "max", "mean"])
    for (source, scope) in sorted(cells):
        w.writerow([source, scope] + distribution_stats(cells[(source, scope)]).as_row())
    w.writerow(["# quartiles", QUARTILE_METHOD])
    return buf.getvalue()


# --- coverage ------------------------------------------------------------------------

UNKNOWN_COUNTRY = "unknown"


@dataclass
class CoverageCell:
    smr: int = 0
    non_smr: int = 0

    @property
    def total(self) -> int:
        return self.smr + self.non_smr


@dataclass
class CoverageBreakdown:
    cells: dict[str, CoverageCell] = field(default_factory=dict)

    def top(self, n: int = 5, exclude: Sequence[str] = ()) -> list[tuple[str, int]]:
        """Countries by record count, ties broken alphabetically."""
        skip = {c.upper() for c in exclude} | {UNKNOWN_COUNTRY.upper()}
        ranked = sorted(
            ((c, cell.total) for c, cell in self.cells.items() if c.upper() not in skip),
            key=lambda kv: (-kv[1], kv[0]),
        )
        return ranked[:n]

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["country", "smr", "non_smr", "total"])
        for country in sorted(self.cells):
            c = self.cells[country]
            w.writerow([country, c.smr, c.non_smr, c.total])
        return buf.getvalue()


def coverage_breakdown(enrichments: Iterable[Enrichment]) -> CoverageBreakdown:
    out = CoverageBreakdown()
    for e in enrichments:
        cell = out.cells.setdefault(e.country or UNKNOWN_COUNTRY, CoverageCell())
        if e.in_smr:
            cell.smr += 1
        else:
            cell.non_smr += 1
    return out


def typology_counts(enrichments: Iterable[Enrichment]) -> dict[str, int]:
    return dict(sorted(Counter(e.typology.value for e in enrichments).items()))


def summary(
    ledger: StageLedger | None = None,
    report: OverlapReport | None = None,
    coverage: CoverageBreakdown | None = None,
    typologies: Mapping[str, int] | None = None,
) -> str:
    lines: list[str] = []
    if ledger is not None:
        lines.append("stage accumulation:")
        for r in ledger.rows:
            lines.append(f"  {r.stage.value:<13} retrieved {r.retrieved:>6}  new {r.unique_new:>6}  cumulative {r.cumulative_unique:>6}")
        if ledger.post_filter is not None:
            lines.append(f"  post-filter {ledger.post_filter} of {ledger.pre_filter} (reduction {ledger.reduction_ratio:.3f})")
    if report is not None:
        lines.append("overlap:")
        for name in report.sources:
            s = report.shares[name]
            lines.append(f"  {name:<20} {s.exclusive}/{s.total} exclusive ({s.exclusive_pct:.1f}%)")
    if coverage is not None:
        lines.append("coverage by country (smr/non-smr):")
        for country in sorted(coverage.cells, key=lambda c: (-coverage.cells[c].total, c)):
            c = coverage.cells[country]
            lines.append(f"  {country:<8} {c.smr:>5} {c.non_smr:>5}")
    if typologies:
        lines.append("source typology:")
        for name, n in typologies.items():
            lines.append(f"  {name:<22} {n}")
    return "\n".join(lines) + "\n"
