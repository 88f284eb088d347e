"""Fixture corpus: articles, planted noise and per-query listings."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from newsharvest.errors import CorpusError

DEFAULT_AGGREGATOR_HOST = "news.simnews.test"


class NoiseKind(str, Enum):
    PDF = "pdf"
    IMAGE = "image"
    AUDIO = "audio"
    VIDEO = "video"
    ARCHIVE = "archive"
    EXECUTABLE = "executable"
    HOMEPAGE = "homepage"
    SECTION_INDEX = "section_index"
    PLACEHOLDER_TEXT = "placeholder_text"
    ADULT_SEO = "adult_seo"


BINARY_KINDS = {
    NoiseKind.PDF: ("application/pdf", b"%PDF-1.4\n"),
    NoiseKind.IMAGE: ("image/png", b"\x89PNG\r\n\x1a\n"),
    NoiseKind.AUDIO: ("audio/mpeg", b"ID3\x04\x00\x00"),
    NoiseKind.VIDEO: ("video/mp4", b"\x00\x00\x00\x18ftypmp42"),
    NoiseKind.ARCHIVE: ("application/zip", b"PK\x03\x04"),
    NoiseKind.EXECUTABLE: ("application/x-msdownload", b"MZ\x90\x00"),
}


@dataclass(frozen=True)
class Article:
    url: str
    headline: str
    body_html: str
    outlet: str
    language: str
    contains_keyword: bool
    body_text: str = ""
    published: str | None = None
    status: str = "ok"  # ok | unavailable
    mirrors: tuple[str, ...] = ()


@dataclass(frozen=True)
class NoiseItem:
    kind: NoiseKind
    url: str
    payload: str
    headline: str = ""
    outlet: str = ""
    published: str | None = None


@dataclass(frozen=True)
class ListingEntry:
    url: str
    headline: str | None = None
    time: str | None = None
    via: tuple[str, ...] = ()


@dataclass
class FixtureCorpus:
    articles: list[Article] = field(default_factory=list)
    noise: list[NoiseItem] = field(default_factory=list)
    listings: dict[str, list[ListingEntry]] = field(default_factory=dict)
    redirects: dict[str, str] = field(default_factory=dict)
    placeholder_text: str = ""
    aggregator_host: str = DEFAULT_AGGREGATOR_HOST

    def __post_init__(self) -> None:
        self._by_url: dict[str, Article | NoiseItem] = {}
        self._tokens: dict[str, str] = {}
        self.validate()

    @staticmethod
    def listing_key(edition_id: str, query: str) -> str:
        return f"{edition_id}|{query}"

    @staticmethod
    def token_for(key: str, rank: int, url: str) -> str:
        return hashlib.sha256(f"{key}|{rank}|{url}".encode("utf-8")).hexdigest()[:16]

    def validate(self) -> None:
        by_url: dict[str, Article | NoiseItem] = {}

        def claim(url: str, item) -> None:
            if url in by_url or url in self.redirects:
                raise CorpusError(f"duplicate fixture URL {url}", url=url)
            by_url[url] = item

        for a in self.articles:
            claim(a.url, a)
            for m in a.mirrors:
                claim(m, a)
        for n in self.noise:
            claim(n.url, n)
        for src, target in self.redirects.items():
            if target not in by_url and target not in self.redirects:
                raise CorpusError(f"redirect {src} points to undefined URL {target}", url=target)
        tokens: dict[str, str] = {}
        for key, entries in self.listings.items():
            for rank, entry in enumerate(entries, start=1):
                for hop in entry.via:
                    if hop not in self.redirects:
                        raise CorpusError(f"listing {key!r} routes via undefined redirect {hop}", url=hop)
                if entry.url not in by_url and entry.url not in self.redirects:
                    raise CorpusError(f"listing {key!r} references undefined URL {entry.url}", url=entry.url)
                tokens[self.token_for(key, rank, entry.url)] = entry.via[0] if entry.via else entry.url
        self._by_url = by_url
        self._tokens = tokens

    def lookup(self, url: str) -> Article | NoiseItem | None:
        return self._by_url.get(url)

    def token_target(self, token: str) -> str | None:
        return self._tokens.get(token)

    def listing(self, edition_id: str, query: str) -> list[ListingEntry]:
        return self.listings.get(self.listing_key(edition_id, query), [])

    def headline_of(self, entry: ListingEntry) -> str:
        if entry.headline:
            return entry.headline
        target = entry.url
        seen = set()
        while target in self.redirects and target not in seen:
            seen.add(target)
            target = self.redirects[target]
        item = self._by_url.get(target)
        return getattr(item, "headline", "") or target

    def outlet_of(self, entry: ListingEntry) -> str:
        item = self._by_url.get(entry.url)
        return getattr(item, "outlet", "") if item else ""

    @property
    def valid_articles(self) -> list[Article]:
        return [a for a in self.articles if a.contains_keyword]


def _entry(d: Any) -> ListingEntry:
    if isinstance(d, str):
        return ListingEntry(url=d)
    return ListingEntry(url=d["url"], headline=d.get("headline"), time=d.get("time"), via=tuple(d.get("via", ())))


def corpus_from_dict(doc: Mapping[str, Any]) -> FixtureCorpus:
    try:
        articles = [
            Article(
                url=a["url"],
                headline=a["headline"],
                body_html=a["body_html"],
                outlet=a.get("outlet", ""),
                language=a.get("language", ""),
                contains_keyword=bool(a.get("contains_keyword", True)),
                body_text=a.get("body_text", ""),
                published=a.get("published"),
                status=a.get("status", "ok"),
                mirrors=tuple(a.get("mirrors", ())),
            )
            for a in doc.get("articles", [])
        ]
        noise = [
            NoiseItem(
                kind=NoiseKind(n["kind"]),
                url=n["url"],
                payload=n.get("payload", ""),
                headline=n.get("headline", ""),
                outlet=n.get("outlet", ""),
                published=n.get("published"),
            )
            for n in doc.get("noise", [])
        ]
        listings = {k: [_entry(e) for e in v] for k, v in doc.get("listings", {}).items()}
    except (KeyError, ValueError, TypeError) as exc:
        raise CorpusError(f"malformed corpus: {exc}") from exc
    return FixtureCorpus(
        articles=articles,
        noise=noise,
        listings=listings,
        redirects=dict(doc.get("redirects", {})),
        placeholder_text=doc.get("placeholder_text", ""),
        aggregator_host=doc.get("aggregator_host", DEFAULT_AGGREGATOR_HOST),
    )


def load_corpus(path: str | Path | None = None) -> FixtureCorpus:
    """Load and validate a corpus file; ``None`` loads the bundled default corpus."""
    if path is None:
        text = resources.files("newsharvest.simnews").joinpath("data/default_corpus.json").read_text("utf-8")
    else:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise CorpusError(f"cannot read corpus {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"corpus is not valid JSON: {exc}") from exc
    return corpus_from_dict(doc)
