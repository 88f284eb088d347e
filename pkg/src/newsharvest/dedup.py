"""URL canonicalization, headline similarity and duplicate merging.

Two results are duplicates when their canonical URLs are equal, or when their
headlines reach the similarity threshold and (if both dates are known) they
share a calendar date. The relation is closed transitively.
"""

from __future__ import annotations

import csv
import io
import posixpath
import re
import unicodedata
from dataclasses import dataclass
from datetime import date, datetime
from enum import Enum
from typing import Any, Iterable, NamedTuple, Sequence
from urllib.parse import parse_qsl, quote, unquote, urlencode, urlsplit

from newsharvest.errors import UrlError

DEFAULT_THRESHOLD = 0.9

TRACKING_PARAMS = frozenset(
    {
        "fbclid",
        "gclid",
        "dclid",
        "msclkid",
        "mc_cid",
        "mc_eid",
        "igshid",
        "yclid",
        "_ga",
        "ocid",
        "cmpid",
    }
)
TRACKING_PREFIXES = ("utm_",)
DEFAULT_PORTS = {"http": 80, "https": 443}


@dataclass(frozen=True, order=True)
class CanonicalUrl:
    host: str
    path: str
    query: tuple[tuple[str, str], ...] = ()

    def __str__(self) -> str:
        if self.query:
            return f"{self.host}{self.path}?{urlencode(self.query, quote_via=quote, safe='')}"
        return f"{self.host}{self.path}"


def _normalize_path(path: str) -> str:
    if not path:
        return "/"
    # '%' is deliberately not safe so that quote(unquote(x)) is a fixed point
    path = quote(unquote(path), safe="/:@!$&'()*+,;=-._~")
    path = re.sub(r"/{2,}", "/", path)
    path = posixpath.normpath(path)  # also drops the trailing slash
    if path in (".", ""):
        return "/"
    return path if path.startswith("/") else "/" + path


def canonicalize_url(
    u: str | CanonicalUrl,
    extra_tracking: Iterable[str] = (),
) -> CanonicalUrl:
    if isinstance(u, CanonicalUrl):
        u = str(u)
    if not isinstance(u, str) or not u.strip():
        raise UrlError(f"invalid URL: {u!r}")
    raw = u.strip()
    if "://" not in raw:
        raw = "http://" + raw
    try:
        parts = urlsplit(raw)
        port = parts.port
    except ValueError as exc:
        raise UrlError(f"invalid URL: {u!r}") from exc
    host = (parts.hostname or "").rstrip(".")
    if not host or any(ch.isspace() for ch in host):
        raise UrlError(f"URL has no host: {u!r}")
    if ":" in host:
        host = f"[{host}]"
    # both defaults are dropped whatever the scheme: the canonical form has no scheme to disambiguate
    if port is not None and port not in DEFAULT_PORTS.values():
        host = f"{host}:{port}"
    drop = TRACKING_PARAMS | {p.lower() for p in extra_tracking}
    params = [
        (k, v)
        for k, v in parse_qsl(parts.query, keep_blank_values=True)
        if k.lower() not in drop and not k.lower().startswith(TRACKING_PREFIXES)
    ]
    return CanonicalUrl(host.lower(), _normalize_path(parts.path), tuple(sorted(params)))


def _strip_punctuation(text: str) -> str:
    return "".join(ch for ch in text if not unicodedata.category(ch).startswith("P"))


def headline_tokens(headline: str) -> frozenset[str]:
    return frozenset(_strip_punctuation(unicodedata.normalize("NFC", headline).casefold()).split())


def headline_similarity(h1: str, h2: str) -> float:
    a, b = headline_tokens(h1), headline_tokens(h2)
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


class DedupReason(str, Enum):
    URL_MATCH = "url_match"
    HEADLINE_MATCH = "headline_match"


@dataclass(frozen=True)
class DedupDecision:
    kept_id: str
    dropped_ids: tuple[str, ...]
    reason: DedupReason
    similarity: float

    def __post_init__(self) -> None:
        if self.reason is DedupReason.URL_MATCH and self.similarity != 1.0:
            raise ValueError("url_match decisions carry similarity 1.0")


class LinkFields(NamedTuple):
    id: str
    url: str | None
    headline: str
    published: date | None
    collected_at: datetime | None


def link_fields(item: Any) -> LinkFields:
    """Extract the dedup-relevant fields from a RawResult, NewsRecord or LinkFields."""
    if isinstance(item, LinkFields):
        return item
    fields = getattr(item, "link_fields", None)
    if callable(fields):
        return fields()
    raise TypeError(f"cannot dedup objects of type {type(item).__name__}")


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            if ra < rb:
                self.parent[rb] = ra
            else:
                self.parent[ra] = rb


def safe_canonical(url: str | None) -> CanonicalUrl | None:
    if not url:
        return None
    try:
        return canonicalize_url(url)
    except UrlError:
        return None


def _dates_compatible(a: date | None, b: date | None) -> bool:
    return a is None or b is None or a == b


def duplicate_components(items: Sequence[Any], threshold: float = DEFAULT_THRESHOLD) -> list[list[int]]:
    """Partition item indices into duplicate groups (each sorted, groups in first-seen order)."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    fields = [link_fields(it) for it in items]
    n = len(fields)
    uf = _UnionFind(n)

    by_url: dict[CanonicalUrl, int] = {}
    for i, f in enumerate(fields):
        canon = safe_canonical(f.url)
        if canon is None:
            continue
        if canon in by_url:
            uf.union(by_url[canon], i)
        else:
            by_url[canon] = i

    tokens = [headline_tokens(f.headline) for f in fields]
    if threshold <= 0.0:
        candidates: Iterable[tuple[int, int]] = ((i, j) for i in range(n) for j in range(i + 1, n))
    else:
        candidates = candidate_pairs(tokens, threshold)
    for i, j in candidates:
        if not _dates_compatible(fields[i].published, fields[j].published):
            continue
        if uf.find(i) == uf.find(j):
            continue
        if _jaccard(tokens[i], tokens[j]) >= threshold:
            uf.union(i, j)

    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(uf.find(i), []).append(i)
    return sorted(groups.values(), key=lambda g: g[0])


def _jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    return len(a & b) / len(a | b)


def candidate_pairs(tokens: list[frozenset[str]], threshold: float):
    """Pairs that can reach ``threshold``: share a token (or are both empty) and pass the size filter."""
    empty = [i for i, t in enumerate(tokens) if not t]
    for x in range(len(empty)):
        for y in range(x + 1, len(empty)):
            yield empty[x], empty[y]
    index: dict[str, list[int]] = {}
    for i, toks in enumerate(tokens):
        for tok in toks:
            index.setdefault(tok, []).append(i)
    seen: set[tuple[int, int]] = set()
    for postings in index.values():
        for x in range(len(postings)):
            i = postings[x]
            for y in range(x + 1, len(postings)):
                j = postings[y]
                if (i, j) in seen:
                    continue
                seen.add((i, j))
                small, big = sorted((len(tokens[i]), len(tokens[j])))
                # same division as the Jaccard itself, so rounding cannot drop a boundary pair
                if small / big >= threshold:
                    yield i, j


def _keeper(members: list[int], fields: list[LinkFields]) -> int:
    def key(i: int):
        ts = fields[i].collected_at
        return (ts is None, ts.timestamp() if ts else 0.0, i)

    return min(members, key=key)


def dedup_merge(
    results: Sequence[Any],
    threshold: float = DEFAULT_THRESHOLD,
) -> tuple[list[Any], list[DedupDecision]]:
    """Collapse duplicates; the earliest ``collected_at`` in each group survives.

    Returns the surviving items (in first-seen order of their group) and one
    decision per (group, reason).
    """
    fields = [link_fields(it) for it in results]
    unique: list[Any] = []
    decisions: list[DedupDecision] = []
    for members in duplicate_components(results, threshold):
        kept = _keeper(members, fields)
        unique.append(results[kept])
        dropped = [i for i in members if i != kept]
        if not dropped:
            continue
        kept_canon = safe_canonical(fields[kept].url)
        by_url = [i for i in dropped if kept_canon is not None and safe_canonical(fields[i].url) == kept_canon]
        by_headline = [i for i in dropped if i not in by_url]
        if by_url:
            decisions.append(
                DedupDecision(fields[kept].id, tuple(fields[i].id for i in by_url), DedupReason.URL_MATCH, 1.0)
            )
        if by_headline:
            sim = min(headline_similarity(fields[kept].headline, fields[i].headline) for i in by_headline)
            decisions.append(
                DedupDecision(
                    fields[kept].id, tuple(fields[i].id for i in by_headline), DedupReason.HEADLINE_MATCH, sim
                )
            )
    return unique, decisions


def decisions_to_csv(decisions: Iterable[DedupDecision]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(["kept_id", "dropped_ids", "reason", "similarity"])
    for d in decisions:
        writer.writerow([d.kept_id, ";".join(d.dropped_ids), d.reason.value, f"{d.similarity:.6f}"])
    return buf.getvalue()
