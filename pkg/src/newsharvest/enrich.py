"""Outlet enrichment against a media-rankings snapshot.

Records are matched domain-first (registrable domain), then by normalized
outlet title. Unmatched sources are sorted into a fixed typology by a rule
table shipped as data.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import re
import unicodedata
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from newsharvest.domains import country_from_tld, host_of, registrable_domain
from newsharvest.errors import DomainError, SnapshotError
from newsharvest.store import NewsRecord

log = logging.getLogger(__name__)

DRI_SCALE = (0.0, 100.0)
DISCREPANCY_TOLERANCE = 0.01

SNAPSHOT_COLUMNS = (
    "name", "domain", "country", "region", "language", "typology", "overall",
    "authority_score", "domain_rating", "citation_flow", "trust_flow",
)


@dataclass(frozen=True)
class DriInputs:
    authority_score: float
    domain_rating: float
    citation_flow: float
    trust_flow: float

    def __post_init__(self) -> None:
        lo, hi = DRI_SCALE
        for name in ("authority_score", "domain_rating", "citation_flow", "trust_flow"):
            value = getattr(self, name)
            if value is None or not isinstance(value, (int, float)) or math.isnan(value):
                raise DomainError(f"{name} is missing or not a number")
            if not lo <= value <= hi:
                raise DomainError(f"{name}={value} outside [{lo:g}, {hi:g}]")

    def values(self) -> tuple[float, float, float, float]:
        return (self.authority_score, self.domain_rating, self.citation_flow, self.trust_flow)


def compute_dri(x: DriInputs | Sequence[float]) -> float:
    """Equal-weight mean of the four reputation indicators."""
    if not isinstance(x, DriInputs):
        if len(x) != 4:
            raise DomainError(f"expected 4 indicators, got {len(x)}")
        x = DriInputs(*x)
    # fsum is exactly rounded, so the result does not depend on argument order
    return math.fsum(x.values()) / 4


@dataclass(frozen=True)
class SmrEntry:
    name: str
    domain: str
    country: str | None = None
    region: str | None = None
    language: str | None = None
    typology: str | None = None
    overall: float | None = None
    dri_inputs: DriInputs | None = None

    @property
    def dri(self) -> float | None:
        return compute_dri(self.dri_inputs) if self.dri_inputs else None

    def discrepancy(self) -> float | None:
        """|overall - DRI| when both are known; recorded, never enforced."""
        if self.overall is None or self.dri_inputs is None:
            return None
        return abs(self.overall - compute_dri(self.dri_inputs))


_CORPORATE = re.compile(
    r"\b(s\s?a|s\s?l|s\s?l\s?u|s\s?p\s?a|s\s?r\s?l|ltd|limited|llc|inc|plc|gmbh|ag|co|corp|corporation|"
    r"group|grupo|media group|ediciones|editorial)\b"
)


def normalize_title(title: str) -> str:
    """Casefold, strip accents, punctuation and corporate suffixes."""
    text = unicodedata.normalize("NFKD", title.casefold())
    text = "".join(ch for ch in text if not unicodedata.combining(ch))
    text = "".join(" " if unicodedata.category(ch).startswith(("P", "S")) else ch for ch in text)
    text = " ".join(text.split())
    text = _CORPORATE.sub(" ", text)
    return " ".join(text.split())


class Snapshot:
    """Immutable rankings snapshot indexed by domain and normalized title."""

    def __init__(self, entries: Iterable[SmrEntry]):
        self.entries: tuple[SmrEntry, ...] = tuple(entries)
        self.by_domain: dict[str, SmrEntry] = {}
        self.by_title: dict[str, list[SmrEntry]] = {}
        for e in self.entries:
            if e.domain in self.by_domain:
                raise SnapshotError(f"domain {e.domain} appears twice in the snapshot")
            self.by_domain[e.domain] = e
            self.by_title.setdefault(normalize_title(e.name), []).append(e)

    def __len__(self) -> int:
        return len(self.entries)

    def discrepancies(self, tolerance: float = DISCREPANCY_TOLERANCE) -> list[tuple[str, float]]:
        out = []
        for e in self.entries:
            d = e.discrepancy()
            if d is not None and d > tolerance:
                out.append((e.domain, d))
        return out


def _float(value: str | None) -> float | None:
    value = (value or "").strip()
    return float(value) if value else None


def parse_snapshot(text: str) -> Snapshot:
    reader = csv.DictReader(io.StringIO(text, newline=""))
    header = reader.fieldnames or []
    missing = [c for c in ("name", "domain") if c not in header]
    if missing:
        raise SnapshotError(f"snapshot lacks required columns: {', '.join(missing)}")
    entries = []
    for row_no, row in enumerate(reader, start=2):
        try:
            scores = [_float(row.get(c)) for c in ("authority_score", "domain_rating", "citation_flow", "trust_flow")]
            inputs = DriInputs(*scores) if all(s is not None for s in scores) else None
            domain = (row.get("domain") or "").strip().lower()
            if not domain:
                raise SnapshotError("empty domain")
            entries.append(
                SmrEntry(
                    name=(row.get("name") or "").strip(),
                    domain=registrable_domain(domain) or domain,
                    country=(row.get("country") or "").strip().upper() or None,
                    region=(row.get("region") or "").strip() or None,
                    language=(row.get("language") or "").strip() or None,
                    typology=(row.get("typology") or "").strip() or None,
                    overall=_float(row.get("overall")),
                    dri_inputs=inputs,
                )
            )
        except (ValueError, DomainError) as exc:
            raise SnapshotError(f"snapshot row {row_no}: {exc}") from exc
    return Snapshot(entries)


def load_snapshot(path: str | Path | None = None) -> Snapshot:
    """Load a snapshot file; ``None`` loads the bundled sample."""
    if path is None:
        text = resources.files("newsharvest").joinpath("data/smr_sample.csv").read_text("utf-8")
    else:
        try:
            text = Path(path).read_text(encoding="utf-8-sig")
        except OSError as exc:
            raise SnapshotError(f"cannot read snapshot {path}: {exc}") from exc
    return parse_snapshot(text)


class MatchKind(str, Enum):
    DOMAIN = "domain"
    TITLE = "title"
    NONE = "none"


@dataclass(frozen=True)
class SmrMatch:
    entry: SmrEntry | None
    kind: MatchKind
    note: str = ""


def record_domain(record: NewsRecord) -> str | None:
    """Registrable domain from the record's source domain, falling back to its URL."""
    for candidate in (record.source_domain, record.source_url):
        if candidate:
            host = host_of(candidate)
            dom = registrable_domain(host) if host else None
            if dom:
                return dom
    return None


def match_smr(record: NewsRecord, snapshot: Snapshot) -> SmrMatch:
    domain = record_domain(record)
    if domain and domain in snapshot.by_domain:
        return SmrMatch(snapshot.by_domain[domain], MatchKind.DOMAIN)
    if record.outlet_name:
        key = normalize_title(record.outlet_name)
        candidates = snapshot.by_title.get(key, [])
        if len(candidates) == 1:
            return SmrMatch(candidates[0], MatchKind.TITLE)
        if len(candidates) > 1:
            note = f"ambiguous title {record.outlet_name!r}: " + ", ".join(c.domain for c in candidates)
            log.info("record %s: %s", record.id, note)
            return SmrMatch(None, MatchKind.NONE, note)
    return SmrMatch(None, MatchKind.NONE)


class SourceTypology(str, Enum):
    SMR_OUTLET = "smr_outlet"
    NON_SMR_MEDIA = "non_smr_media"
    SOCIAL_NETWORK = "social_network"
    GOVERNMENT = "government"
    ST_INSTITUTION = "st_institution"
    TRANSNATIONAL_PROJECT = "transnational_project"
    OTHER = "other"


RULE_PRECEDENCE = (
    SourceTypology.SOCIAL_NETWORK,
    SourceTypology.GOVERNMENT,
    SourceTypology.ST_INSTITUTION,
    SourceTypology.TRANSNATIONAL_PROJECT,
    SourceTypology.NON_SMR_MEDIA,
)


@dataclass(frozen=True)
class TypologyRule:
    domains: frozenset[str] = frozenset()
    suffixes: tuple[str, ...] = ()
    markers: tuple[str, ...] = ()

    def matches(self, host: str, outlet: str) -> bool:
        labels = host.split(".")
        tails = {".".join(labels[i:]) for i in range(len(labels))}
        if tails & self.domains:
            return True
        if any(host == s or host.endswith("." + s) for s in self.suffixes):
            return True
        if self.markers:
            haystack = f"{host} {normalize_title(outlet)}"
            return any(m in haystack for m in self.markers)
        return False


@dataclass(frozen=True)
class TypologyRules:
    rules: Mapping[SourceTypology, TypologyRule] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: Mapping) -> "TypologyRules":
        rules = {}
        for key, spec in doc.items():
            cls_ = SourceTypology(key)
            rules[cls_] = TypologyRule(
                domains=frozenset(d.lower() for d in spec.get("domains", ())),
                suffixes=tuple(s.lower().lstrip(".") for s in spec.get("suffixes", ())),
                markers=tuple(m.lower() for m in spec.get("markers", ())),
            )
        return cls(rules)


def load_rules(path: str | Path | None = None) -> TypologyRules:
    if path is None:
        text = resources.files("newsharvest").joinpath("data/typology_rules.json").read_text("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    return TypologyRules.from_dict(json.loads(text))


def classify_typology(
    record: NewsRecord | str,
    rules: TypologyRules,
    match: SmrMatch | None = None,
) -> SourceTypology:
    """Exactly one class per record; ``record`` may also be a bare URL or host."""
    if match is not None and match.entry is not None:
        return SourceTypology.SMR_OUTLET
    if isinstance(record, str):
        host, outlet = host_of(record), ""
    else:
        host = host_of(record.source_url or record.source_domain or "")
        outlet = record.outlet_name or ""
    if host.startswith("www."):
        host = host[4:]
    for cls_ in RULE_PRECEDENCE:
        rule = rules.rules.get(cls_)
        if rule is not None and rule.matches(host, outlet):
            return cls_
    return SourceTypology.OTHER


@dataclass(frozen=True)
class Enrichment:
    record_id: str
    domain: str | None
    match_kind: MatchKind
    smr_domain: str | None
    smr_name: str | None
    country: str | None
    overall: float | None
    dri: float | None
    typology: SourceTypology
    note: str = ""

    @property
    def in_smr(self) -> bool:
        return self.smr_domain is not None


def enrich_record(record: NewsRecord, snapshot: Snapshot, rules: TypologyRules) -> Enrichment:
    match = match_smr(record, snapshot)
    domain = record_domain(record)
    entry = match.entry
    country = entry.country if entry and entry.country else country_from_tld(domain)
    return Enrichment(
        record_id=record.id,
        domain=domain,
        match_kind=match.kind,
        smr_domain=entry.domain if entry else None,
        smr_name=entry.name if entry else None,
        country=country,
        overall=entry.overall if entry else None,
        dri=entry.dri if entry else None,
        typology=classify_typology(record, rules, match),
        note=match.note,
    )


def enrich_all(records: Iterable[NewsRecord], snapshot: Snapshot, rules: TypologyRules) -> list[Enrichment]:
    return [enrich_record(r, snapshot, rules) for r in records]


ENRICHMENT_COLUMNS = (
    "record_id", "domain", "match_kind", "smr_domain", "smr_name", "country", "overall", "dri", "typology", "note",
)


def _num(value: float | None) -> str:
    return "" if value is None else f"{value:.4f}"


def enrichments_to_csv(rows: Iterable[Enrichment]) -> str:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(ENRICHMENT_COLUMNS)
    for e in rows:
        w.writerow([
            e.record_id, e.domain or "", e.match_kind.value, e.smr_domain or "", e.smr_name or "",
            e.country or "", _num(e.overall), _num(e.dri), e.typology.value, e.note,
        ])
    return buf.getvalue()


def enrichments_from_csv(text: str) -> list[Enrichment]:
    out = []
    for row in csv.DictReader(io.StringIO(text, newline="")):
        out.append(
            Enrichment(
                record_id=row["record_id"],
                domain=row["domain"] or None,
                match_kind=MatchKind(row["match_kind"]),
                smr_domain=row["smr_domain"] or None,
                smr_name=row["smr_name"] or None,
                country=row["country"] or None,
                overall=_float(row["overall"]),
                dri=_float(row["dri"]),
                typology=SourceTypology(row["typology"]),
                note=row.get("note", ""),
            )
        )
    return out
