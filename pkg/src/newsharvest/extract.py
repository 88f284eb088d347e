"""Resource classification and article text extraction."""

from __future__ import annotations

import logging
import re
from collections import Counter
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import PurePosixPath
from typing import Callable, Mapping, Sequence
from urllib.parse import urljoin, urlsplit

from bs4 import BeautifulSoup, Comment, Tag

from newsharvest.store import (
    KEYWORD_STUFFING,
    NO_CONTENT,
    NON_HTML_PREFIX,
    PAYWALLED,
    UNRESOLVED,
    ExtractionMethod,
    NewsRecord,
)

log = logging.getLogger(__name__)


class ResourceKind(str, Enum):
    HTML_ARTICLE = "html_article"
    HTML_NONARTICLE = "html_nonarticle"
    PDF = "pdf"
    IMAGE = "image"
    AUDIO = "audio"
    VIDEO = "video"
    ARCHIVE = "archive"
    EXECUTABLE = "executable"
    UNKNOWN = "unknown"

    @property
    def is_html(self) -> bool:
        return self in (ResourceKind.HTML_ARTICLE, ResourceKind.HTML_NONARTICLE)


class Via(str, Enum):
    HEADER = "header"
    EXTENSION = "extension"
    MAGIC_BYTES = "magic_bytes"


@dataclass(frozen=True)
class ResourceClass:
    kind: ResourceKind
    content_type: str
    via: Via


class ContentStatus(str, Enum):
    OK = "ok"
    NO_CONTENT = "no_content"
    PAYWALLED = "paywalled"
    NON_HTML = "non_html"


@dataclass(frozen=True)
class ExtractedContent:
    full_text: str
    status: ContentStatus
    featured_image_url: str | None = None
    detected_language: str = "unknown"
    keyword_stuffing: bool = False

    def __post_init__(self) -> None:
        if self.status is ContentStatus.NO_CONTENT and self.full_text:
            raise ValueError("no_content extractions carry no text")


# --- classification ----------------------------------------------------------

_MAGIC: tuple[tuple[bytes, int, ResourceKind, str], ...] = (
    (b"%PDF-", 0, ResourceKind.PDF, "application/pdf"),
    (b"PK\x03\x04", 0, ResourceKind.ARCHIVE, "application/zip"),
    (b"\x1f\x8b", 0, ResourceKind.ARCHIVE, "application/gzip"),
    (b"Rar!\x1a\x07", 0, ResourceKind.ARCHIVE, "application/vnd.rar"),
    (b"7z\xbc\xaf\x27\x1c", 0, ResourceKind.ARCHIVE, "application/x-7z-compressed"),
    (b"MZ", 0, ResourceKind.EXECUTABLE, "application/x-msdownload"),
    (b"\x7fELF", 0, ResourceKind.EXECUTABLE, "application/x-executable"),
    (b"\x89PNG\r\n\x1a\n", 0, ResourceKind.IMAGE, "image/png"),
    (b"\xff\xd8\xff", 0, ResourceKind.IMAGE, "image/jpeg"),
    (b"GIF87a", 0, ResourceKind.IMAGE, "image/gif"),
    (b"GIF89a", 0, ResourceKind.IMAGE, "image/gif"),
    (b"ID3", 0, ResourceKind.AUDIO, "audio/mpeg"),
    (b"OggS", 0, ResourceKind.AUDIO, "audio/ogg"),
    (b"fLaC", 0, ResourceKind.AUDIO, "audio/flac"),
    (b"ftyp", 4, ResourceKind.VIDEO, "video/mp4"),
    (b"\x1a\x45\xdf\xa3", 0, ResourceKind.VIDEO, "video/webm"),
)

_CTYPE_PREFIX: tuple[tuple[str, ResourceKind], ...] = (
    ("text/html", ResourceKind.HTML_ARTICLE),
    ("application/xhtml+xml", ResourceKind.HTML_ARTICLE),
    ("application/pdf", ResourceKind.PDF),
    ("image/", ResourceKind.IMAGE),
    ("audio/", ResourceKind.AUDIO),
    ("video/", ResourceKind.VIDEO),
    ("application/zip", ResourceKind.ARCHIVE),
    ("application/x-zip", ResourceKind.ARCHIVE),
    ("application/gzip", ResourceKind.ARCHIVE),
    ("application/x-gzip", ResourceKind.ARCHIVE),
    ("application/x-tar", ResourceKind.ARCHIVE),
    ("application/x-7z-compressed", ResourceKind.ARCHIVE),
    ("application/vnd.rar", ResourceKind.ARCHIVE),
    ("application/x-rar", ResourceKind.ARCHIVE),
    ("application/x-msdownload", ResourceKind.EXECUTABLE),
    ("application/x-msdos-program", ResourceKind.EXECUTABLE),
    ("application/x-executable", ResourceKind.EXECUTABLE),
    ("application/vnd.microsoft.portable-executable", ResourceKind.EXECUTABLE),
)

_EXTENSIONS = {
    ".html": ResourceKind.HTML_ARTICLE,
    ".htm": ResourceKind.HTML_ARTICLE,
    ".php": ResourceKind.HTML_ARTICLE,
    ".asp": ResourceKind.HTML_ARTICLE,
    ".aspx": ResourceKind.HTML_ARTICLE,
    ".pdf": ResourceKind.PDF,
    ".png": ResourceKind.IMAGE,
    ".jpg": ResourceKind.IMAGE,
    ".jpeg": ResourceKind.IMAGE,
    ".gif": ResourceKind.IMAGE,
    ".webp": ResourceKind.IMAGE,
    ".svg": ResourceKind.IMAGE,
    ".mp3": ResourceKind.AUDIO,
    ".wav": ResourceKind.AUDIO,
    ".ogg": ResourceKind.AUDIO,
    ".m4a": ResourceKind.AUDIO,
    ".mp4": ResourceKind.VIDEO,
    ".webm": ResourceKind.VIDEO,
    ".mov": ResourceKind.VIDEO,
    ".avi": ResourceKind.VIDEO,
    ".zip": ResourceKind.ARCHIVE,
    ".gz": ResourceKind.ARCHIVE,
    ".tgz": ResourceKind.ARCHIVE,
    ".rar": ResourceKind.ARCHIVE,
    ".7z": ResourceKind.ARCHIVE,
    ".tar": ResourceKind.ARCHIVE,
    ".exe": ResourceKind.EXECUTABLE,
    ".msi": ResourceKind.EXECUTABLE,
    ".dmg": ResourceKind.EXECUTABLE,
    ".apk": ResourceKind.EXECUTABLE,
}

_ARTICLE_MARKERS = re.compile(
    rb"<article\b|og:type[\"']?\s+content=[\"']article|\"@type\"\s*:\s*\"(?:News)?Article\"|itemprop=[\"']articleBody",
    re.I,
)


def _html_kind(first_bytes: bytes | None) -> ResourceKind:
    if not first_bytes:
        return ResourceKind.HTML_ARTICLE
    return ResourceKind.HTML_ARTICLE if _ARTICLE_MARKERS.search(first_bytes) else ResourceKind.HTML_NONARTICLE


def classify_resource(url: str, headers: Mapping[str, str] | None, first_bytes: bytes | None) -> ResourceClass:
    """Precedence: magic bytes, then Content-Type, then URL extension."""
    headers = {k.lower(): v for k, v in (headers or {}).items()}
    ctype = headers.get("content-type", "").split(";")[0].strip().lower()
    if first_bytes:
        for magic, offset, kind, mime in _MAGIC:
            if first_bytes[offset: offset + len(magic)] == magic:
                return ResourceClass(kind, ctype or mime, Via.MAGIC_BYTES)
    if ctype:
        for prefix, kind in _CTYPE_PREFIX:
            if ctype.startswith(prefix):
                if kind is ResourceKind.HTML_ARTICLE:
                    kind = _html_kind(first_bytes)
                return ResourceClass(kind, ctype, Via.HEADER)
    suffix = PurePosixPath(urlsplit(url).path).suffix.lower()
    if suffix in _EXTENSIONS:
        kind = _EXTENSIONS[suffix]
        if kind is ResourceKind.HTML_ARTICLE:
            kind = _html_kind(first_bytes)
        return ResourceClass(kind, ctype, Via.EXTENSION)
    if first_bytes and re.match(rb"\s*(<!doctype html|<html)", first_bytes, re.I):
        return ResourceClass(_html_kind(first_bytes), ctype or "text/html", Via.MAGIC_BYTES)
    return ResourceClass(ResourceKind.UNKNOWN, ctype, Via.HEADER if ctype else Via.EXTENSION)


# --- boilerplate removal -------------------------------------------------------

_DROP_TAGS = ("script", "style", "noscript", "template", "nav", "header", "footer", "aside", "form", "iframe", "svg", "button")
_JUNK = re.compile(
    r"(^|[\s_-])(nav|navbar|menu|breadcrumbs?|sidebar|side-bar|related|promo|sponsor(ed)?|ads?|advert\w*|"
    r"banner|widget|comments?|share|social|newsletter|cookies?|trending|popular|recommend\w*|footer|header|masthead)($|[\s_-])",
    re.I,
)
_JUNK_ROLES = {"navigation", "complementary", "banner", "contentinfo", "search"}
_PAYWALL_SELECTORS = (".paywall", "#paywall", "[data-paywall]", ".subscriber-only", ".premium-wall", ".meteredContent")
_SUBSCRIBE_WORDS = re.compile(r"subscri|suscr[ií]b|abonn|abbonat|abonnier|assinant|pretplat", re.I)
PAYWALL_MAX_TOKENS = 25
STUFFING_MIN_TERMS = 15

# ten frequent function words per language
STOPWORDS: dict[str, tuple[str, ...]] = {
    "es": ("de", "la", "que", "el", "en", "y", "los", "del", "se", "las"),
    "en": ("the", "of", "and", "to", "in", "is", "that", "for", "it", "with"),
    "fr": ("de", "la", "le", "et", "les", "des", "est", "un", "une", "du"),
    "de": ("der", "die", "und", "in", "den", "von", "zu", "das", "mit", "sich"),
    "it": ("di", "e", "il", "la", "che", "per", "un", "del", "della", "sono"),
    "pt": ("de", "a", "o", "que", "e", "do", "da", "em", "um", "para"),
    "nl": ("de", "van", "het", "een", "en", "in", "is", "dat", "op", "te"),
    "hr": ("i", "je", "u", "se", "na", "da", "za", "su", "od", "koji"),
}


def detect_language(
    text: str,
    fallback: str | None = None,
    languages: Sequence[str] | None = None,
) -> str:
    """Rank configured languages by stopword hits; ties go to ``fallback``."""
    tokens = Counter(re.findall(r"[^\W\d_]+", text.lower()))
    profiles = {lang: STOPWORDS[lang] for lang in (languages or STOPWORDS) if lang in STOPWORDS}
    scores = {lang: sum(tokens[w] for w in words) for lang, words in profiles.items()}
    if not scores:
        return fallback or "unknown"
    best = max(scores.values())
    leaders = sorted(lang for lang, s in scores.items() if s == best)
    if best == 0:
        return fallback or "unknown"
    if len(leaders) > 1:
        return fallback or leaders[0]
    return leaders[0]


def _is_junk(tag: Tag) -> bool:
    if tag.attrs is None:
        return False
    if (tag.get("role") or "").lower() in _JUNK_ROLES:
        return True
    if tag.has_attr("hidden") or tag.get("aria-hidden") == "true":
        return True
    ident = " ".join(tag.get("class", [])) + " " + (tag.get("id") or "")
    return bool(_JUNK.search(ident))


def _clean(soup: BeautifulSoup) -> None:
    for c in soup.find_all(string=lambda s: isinstance(s, Comment)):
        c.extract()
    for tag in soup.find_all(_DROP_TAGS):
        tag.decompose()
    for tag in soup.find_all(True):
        if tag.decomposed:
            continue
        if tag.name in ("html", "body", "article", "main"):
            continue
        if _is_junk(tag):
            tag.decompose()


def _text(tag: Tag) -> str:
    return " ".join(tag.get_text(" ").split())


def _block_score(parent: Tag, paragraphs: list[Tag]) -> float:
    text_len = sum(len(_text(p)) for p in paragraphs)
    tags = len(parent.find_all(True)) + 1
    ratio = text_len / tags
    bonus = 1.5 if parent.name in ("article", "main") or parent.find_parent(["article", "main"]) else 1.0
    return text_len * (ratio / (ratio + 10.0)) * bonus


def _featured_image(soup: BeautifulSoup, base_url: str | None) -> str | None:
    meta = soup.find("meta", attrs={"property": "og:image"}) or soup.find("meta", attrs={"name": "twitter:image"})
    src = meta.get("content") if meta else None
    if not src:
        img = soup.find("article")
        img = img.find("img") if img else None
        src = img.get("src") if img else None
    if not src:
        return None
    return urljoin(base_url, src) if base_url else src


def _keyword_stuffing(soup: BeautifulSoup) -> bool:
    meta = soup.find("meta", attrs={"name": re.compile("^keywords$", re.I)})
    if not meta or not meta.get("content"):
        return False
    terms = {t.strip().lower() for t in meta["content"].split(",") if t.strip()}
    return len(terms) >= STUFFING_MIN_TERMS


def _paywalled(soup: BeautifulSoup, text: str) -> bool:
    if any(soup.select_one(sel) for sel in _PAYWALL_SELECTORS):
        return True
    return len(text.split()) < PAYWALL_MAX_TOKENS and bool(_SUBSCRIBE_WORDS.search(text))


def extract_article_text(
    body_html: str,
    fallback_language: str | None = None,
    base_url: str | None = None,
    languages: Sequence[str] | None = None,
) -> ExtractedContent:
    if not body_html or not body_html.strip():
        return ExtractedContent("", ContentStatus.NO_CONTENT, detected_language=fallback_language or "unknown")
    soup = BeautifulSoup(body_html, "html.parser")
    image = _featured_image(soup, base_url)
    stuffing = _keyword_stuffing(soup)
    paywall_marker = any(soup.select_one(sel) for sel in _PAYWALL_SELECTORS)
    _clean(soup)

    groups: dict[int, tuple[Tag, list[Tag]]] = {}
    for p in soup.find_all("p"):
        if not _text(p):
            continue
        parent = p.parent
        groups.setdefault(id(parent), (parent, []))[1].append(p)
    if groups:
        parent, paragraphs = max(groups.values(), key=lambda g: _block_score(*g))
        text = "\n".join(_text(p) for p in paragraphs)
    else:
        root = soup.find("article") or soup.find("main") or soup.body or soup
        lines = [" ".join(s.split()) for s in root.stripped_strings]
        text = "\n".join(line for line in lines if line)

    lang = detect_language(text, fallback_language, languages) if text else (fallback_language or "unknown")
    if paywall_marker or (text and _paywalled(soup, text)):
        return ExtractedContent("", ContentStatus.PAYWALLED, image, lang, stuffing)
    if not text:
        return ExtractedContent("", ContentStatus.NO_CONTENT, image, lang, stuffing)
    return ExtractedContent(text, ContentStatus.OK, image, lang, stuffing)


# --- records -------------------------------------------------------------------

def apply_extraction(
    record: NewsRecord,
    resource: ResourceClass,
    body: bytes,
    method: ExtractionMethod,
    fallback_language: str | None = None,
    encoding: str | None = None,
) -> NewsRecord:
    """Fill ``record`` from a fetched payload, flagging anything that is not usable text."""
    flags = set(record.quality_flags) - {NO_CONTENT, PAYWALLED, UNRESOLVED}
    flags = {f for f in flags if not f.startswith(NON_HTML_PREFIX)}
    if not resource.kind.is_html and resource.kind is not ResourceKind.UNKNOWN:
        flags |= {NO_CONTENT, NON_HTML_PREFIX + resource.kind.value}
        return replace(record, full_text="", quality_flags=frozenset(flags), extraction_method=method)
    html_text = body.decode(encoding or "utf-8", errors="replace")
    content = extract_article_text(html_text, fallback_language, base_url=record.source_url)
    if content.keyword_stuffing:
        flags.add(KEYWORD_STUFFING)
    if content.status is ContentStatus.PAYWALLED:
        flags |= {NO_CONTENT, PAYWALLED}
    elif content.status is not ContentStatus.OK:
        flags.add(NO_CONTENT)
    return replace(
        record,
        full_text=content.full_text,
        featured_image_url=content.featured_image_url or record.featured_image_url,
        detected_language=content.detected_language,
        extraction_method=method,
        quality_flags=frozenset(flags),
    )


@dataclass(frozen=True)
class BackfillOutcome:
    record_id: str
    outcome: str  # filled | no_content | paywalled | non_html | skipped
    reason: str = ""


PageFetcher = Callable[[str], "tuple[str, ResourceClass, bytes, str | None]"]
AlternateFinder = Callable[[NewsRecord], Sequence[str]]


def backfill_content(
    records: Sequence[NewsRecord],
    fetch_page: PageFetcher,
    find_alternates: AlternateFinder | None = None,
    fallback_language: Callable[[NewsRecord], str | None] | None = None,
) -> tuple[list[NewsRecord], list[BackfillOutcome]]:
    """Second pass for records without text.

    ``fetch_page(url)`` returns ``(final_url, resource, body, encoding)`` or
    raises; ``find_alternates(record)`` proposes other URLs for the same story
    (typically from a headline search). Records that already have text are
    passed through untouched.
    """
    updated: list[NewsRecord] = []
    report: list[BackfillOutcome] = []
    for record in records:
        if record.full_text:
            updated.append(record)
            report.append(BackfillOutcome(record.id, "skipped", "has text"))
            continue
        lang = fallback_language(record) if fallback_language else None
        candidates = [record.source_url] if record.source_url else []
        best = record
        reason = "no candidate URL"
        tried: set[str] = set()
        done = False
        for stage in ("direct", "alternates"):
            if stage == "alternates":
                if find_alternates is None:
                    break
                try:
                    candidates = [u for u in find_alternates(record) if u not in tried]
                except Exception as exc:  # noqa: BLE001 - recorded, not raised
                    reason = f"alternate search failed: {exc}"
                    break
            for url in candidates:
                if not url or url in tried:
                    continue
                tried.add(url)
                try:
                    _final, resource, body, encoding = fetch_page(url)
                except Exception as exc:  # noqa: BLE001 - per-record errors are reported
                    reason = f"{url}: {exc}"
                    continue
                attempt = apply_extraction(record, resource, body, ExtractionMethod.BACKFILL, lang, encoding)
                if attempt.full_text:
                    best = attempt
                    done = True
                    break
                best = attempt
                reason = f"{url}: {_outcome(attempt)}"
            if done:
                break
        if best.full_text:
            updated.append(best)
            report.append(BackfillOutcome(record.id, "filled", ""))
        else:
            if NO_CONTENT not in best.quality_flags:
                best = best.with_flags(NO_CONTENT)
            updated.append(best)
            report.append(BackfillOutcome(record.id, _outcome(best), reason))
    return updated, report


def _outcome(record: NewsRecord) -> str:
    if record.non_html_kind:
        return "non_html"
    if PAYWALLED in record.quality_flags:
        return "paywalled"
    return "no_content"
