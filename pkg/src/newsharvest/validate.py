"""Noise filtering: non-HTML payloads, placeholder text, SEO spam, missing
keyword and index-like pages.

Each dropped record is attributed to exactly one reason, the first that
applies in :data:`REASON_ORDER`.
"""

from __future__ import annotations

import csv
import io
import re
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence
from urllib.parse import urlsplit

from newsharvest.dedup import canonicalize_url
from newsharvest.errors import UrlError
from newsharvest.store import KEYWORD_STUFFING, REPROCESS_MANUAL, UNRESOLVED, Dataset, NewsRecord


class NoiseReason(str, Enum):
    NON_HTML = "non_html"
    PLACEHOLDER_TEXT = "placeholder_text"
    ADULT_SEO = "adult_seo"
    MISSING_KEYWORD = "missing_keyword"
    SECTION_OR_HOMEPAGE = "section_or_homepage"
    OTHER = "other"


REASON_ORDER: tuple[NoiseReason, ...] = tuple(NoiseReason)

# taxonomy prefixes: anything directly below them is a listing page
DEFAULT_SECTION_TOKENS = (
    "tag", "tags", "category", "categoria", "categorias", "seccion", "secciones", "section", "sections",
    "topic", "topics", "tema", "temas", "etiqueta", "etiquetas", "autor", "author", "rubrique", "thema",
    "argomenti", "buscar", "search",
)
# generic listing names, index-like only as the final segment
INDEX_TAILS = ("news", "noticias", "latest", "ultimas-noticias", "archive", "archivo", "page", "pagina", "index")

_DATE_SEGMENT = re.compile(r"^(19|20)\d{2}$|^\d{4}-\d{2}-\d{2}$|^\d{8}$")
_SLUG = re.compile(r"[a-z0-9]+(?:[-_][a-z0-9]+){2,}")
_ARTICLE_ID = re.compile(r"\d{5,}")


class UrlVerdict(str, Enum):
    ARTICLE = "article"
    INDEX_LIKE = "index_like"


@dataclass(frozen=True)
class ValidationConfig:
    topic_tokens: tuple[str, ...] = ("ifmif-dones",)
    section_tokens: tuple[str, ...] = DEFAULT_SECTION_TOKENS

    def __post_init__(self) -> None:
        tokens = tuple(t for t in (s.strip() for s in self.topic_tokens) if t)
        if not tokens:
            raise ValueError("at least one topic token is required")
        object.__setattr__(self, "topic_tokens", tokens)


def _contains(text: str | None, tokens: Sequence[str]) -> bool:
    if not text:
        return False
    folded = text.casefold()
    return any(t.casefold() in folded for t in tokens)


def keyword_filter(
    records: Iterable[NewsRecord], topic_tokens: Sequence[str]
) -> tuple[list[NewsRecord], list[NewsRecord]]:
    """Case-insensitive substring check on headline and full text."""
    if not topic_tokens:
        raise ValueError("topic_tokens must not be empty")
    kept: list[NewsRecord] = []
    dropped: list[NewsRecord] = []
    for r in records:
        (kept if _contains(r.full_text, topic_tokens) or _contains(r.headline, topic_tokens) else dropped).append(r)
    return kept, dropped


def url_article_heuristic(record: NewsRecord | str, section_tokens: Sequence[str] = DEFAULT_SECTION_TOKENS) -> UrlVerdict:
    url = record if isinstance(record, str) else record.source_url
    if not url:
        return UrlVerdict.ARTICLE
    try:
        path = canonicalize_url(url).path
    except UrlError:
        path = urlsplit(url).path or "/"
    segments = [s for s in path.lower().split("/") if s]
    if not segments:
        return UrlVerdict.INDEX_LIKE
    tokens = set(section_tokens)
    last = segments[-1].rsplit(".", 1)[0]
    if last in tokens or last in INDEX_TAILS or (len(segments) >= 2 and segments[-2] in tokens):
        return UrlVerdict.INDEX_LIKE
    if len(segments) <= 1:
        if not (_DATE_SEGMENT.match(last) or _SLUG.search(last) or _ARTICLE_ID.search(last)):
            return UrlVerdict.INDEX_LIKE
    return UrlVerdict.ARTICLE


@dataclass
class NoiseReport:
    pre_count: int
    post_count: int
    counts: dict[str, int] = field(default_factory=lambda: {r.value: 0 for r in REASON_ORDER})
    non_html_kinds: dict[str, int] = field(default_factory=dict)
    dropped: list[tuple[str, str]] = field(default_factory=list)  # (record id, reason)

    def __post_init__(self) -> None:
        if self.pre_count != self.post_count + sum(self.counts.values()):
            raise ValueError(
                f"noise accounting broken: {self.pre_count} != {self.post_count} + {sum(self.counts.values())}"
            )

    @property
    def reduction_ratio(self) -> float:
        return 1 - self.post_count / self.pre_count if self.pre_count else 0.0

    def to_csv(self) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\r\n")
        w.writerow(["reason", "detail", "count"])
        for reason in REASON_ORDER:
            w.writerow([reason.value, "", self.counts.get(reason.value, 0)])
            if reason is NoiseReason.NON_HTML:
                for kind in sorted(self.non_html_kinds):
                    w.writerow([reason.value, kind, self.non_html_kinds[kind]])
        w.writerow(["pre_count", "", self.pre_count])
        w.writerow(["post_count", "", self.post_count])
        w.writerow(["reduction_ratio", "", f"{self.reduction_ratio:.6f}"])
        return buf.getvalue()

    def summary(self) -> str:
        lines = [
            f"records before filtering: {self.pre_count}",
            f"records after filtering:  {self.post_count}",
            f"reduction ratio:          {self.reduction_ratio:.3f}",
            "dropped by reason:",
        ]
        for reason in REASON_ORDER:
            lines.append(f"  {reason.value:<20} {self.counts.get(reason.value, 0)}")
            if reason is NoiseReason.NON_HTML and self.non_html_kinds:
                for kind in sorted(self.non_html_kinds):
                    lines.append(f"    {kind:<18} {self.non_html_kinds[kind]}")
        return "\n".join(lines) + "\n"


def classify_noise(record: NewsRecord, config: ValidationConfig) -> NoiseReason | None:
    """First applicable drop reason, or None when the record is kept."""
    tokens = config.topic_tokens
    if record.non_html_kind:
        return NoiseReason.NON_HTML
    if REPROCESS_MANUAL in record.quality_flags:
        return NoiseReason.PLACEHOLDER_TEXT
    body_has_topic = _contains(record.full_text, tokens)
    if KEYWORD_STUFFING in record.quality_flags and not body_has_topic:
        return NoiseReason.ADULT_SEO
    if not body_has_topic and not _contains(record.headline, tokens):
        return NoiseReason.MISSING_KEYWORD
    if not body_has_topic and url_article_heuristic(record, config.section_tokens) is UrlVerdict.INDEX_LIKE:
        return NoiseReason.SECTION_OR_HOMEPAGE
    if UNRESOLVED in record.quality_flags:
        return NoiseReason.OTHER
    return None


def run_validation(dataset: Dataset, config: ValidationConfig | None = None) -> tuple[Dataset, NoiseReport]:
    config = config or ValidationConfig()
    kept: list[NewsRecord] = []
    counts: Counter[str] = Counter({r.value: 0 for r in REASON_ORDER})
    kinds: Counter[str] = Counter()
    dropped: list[tuple[str, str]] = []
    for record in dataset.records:
        reason = classify_noise(record, config)
        if reason is None:
            kept.append(record)
            continue
        counts[reason.value] += 1
        dropped.append((record.id, reason.value))
        if reason is NoiseReason.NON_HTML:
            kinds[record.non_html_kind or "unknown"] += 1
    report = NoiseReport(
        pre_count=len(dataset),
        post_count=len(kept),
        counts={r.value: counts[r.value] for r in REASON_ORDER},
        non_html_kinds=dict(kinds),
        dropped=dropped,
    )
    clean = dataset.derive(kept, "validate", f"reduction={report.reduction_ratio:.6f}")
    return clean, report
