"""Record schema, dataset snapshots and delimited-text persistence."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from datetime import date, datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from newsharvest.dedup import DEFAULT_THRESHOLD, LinkFields, dedup_merge, duplicate_components
from newsharvest.errors import DelimitedImportError, MergeError, StoreIOError

SCHEMA_VERSION = "1"

FIELD_NAMES: tuple[str, ...] = (
    "id",
    "outlet_name",
    "source_domain",
    "published_at",
    "collected_at",
    "headline",
    "author",
    "geographic_reference",
    "thematic_category",
    "source_url",
    "full_text",
    "character_count",
    "word_count",
    "featured_image_url",
    "extraction_method",
    "detected_language",
    "ai_summary",
    "quality_flags",
    "stage",
    "edition_id",
)

# quality flag vocabulary
NO_CONTENT = "no_content"
PAYWALLED = "paywalled"
PUBLISHED_APPROX = "published_approx"
LLM_PARSE_FAIL = "llm_parse_fail"
AUTHOR_UNVERIFIED = "author_unverified"
REPROCESS_MANUAL = "reprocess_manual"
KEYWORD_STUFFING = "keyword_stuffing"
UNRESOLVED = "unresolved"
NON_HTML_PREFIX = "non_html:"


class ExtractionMethod(str, Enum):
    LISTING = "listing"
    DIRECT_FETCH = "direct_fetch"
    BACKFILL = "backfill"
    MANUAL = "manual"


class Origin(str, Enum):
    AGGREGATOR = "aggregator"
    LICENSED_A = "licensed_a"
    LICENSED_B = "licensed_b"
    IMPORT = "import"


def format_ts(value: datetime | None) -> str:
    if value is None:
        return ""
    if value.tzinfo is None:
        value = value.replace(tzinfo=timezone.utc)
    value = value.astimezone(timezone.utc)
    return value.strftime("%Y-%m-%dT%H:%M:%S") + (f".{value.microsecond:06d}" if value.microsecond else "") + "Z"


def parse_ts(text: str, formats: Sequence[str] = ()) -> datetime | None:
    text = text.strip()
    if not text:
        return None
    for fmt in formats:
        try:
            parsed = datetime.strptime(text, fmt)
        except ValueError:
            continue
        return parsed if parsed.tzinfo else parsed.replace(tzinfo=timezone.utc)
    iso = text[:-1] + "+00:00" if text.endswith("Z") else text
    try:
        parsed = datetime.fromisoformat(iso)
    except ValueError:
        try:
            parsed = datetime.combine(date.fromisoformat(text), datetime.min.time())
        except ValueError as exc:
            raise ValueError(f"unparseable timestamp {text!r}") from exc
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=timezone.utc)
    return parsed.astimezone(timezone.utc)


def _opt(value: str | None) -> str | None:
    if value is None:
        return None
    value = str(value)
    return value if value.strip() else None


@dataclass(frozen=True)
class NewsRecord:
    id: str
    headline: str
    outlet_name: str | None = None
    source_domain: str | None = None
    published_at: datetime | None = None
    collected_at: datetime | None = None
    author: str | None = None
    geographic_reference: str | None = None
    thematic_category: str | None = None
    source_url: str | None = None
    full_text: str = ""
    featured_image_url: str | None = None
    extraction_method: ExtractionMethod | None = None
    detected_language: str | None = None
    ai_summary: str | None = None
    quality_flags: frozenset[str] = frozenset()
    stage: str | None = None
    edition_id: str | None = None

    def __post_init__(self) -> None:
        for name in (
            "outlet_name",
            "source_domain",
            "author",
            "geographic_reference",
            "thematic_category",
            "source_url",
            "featured_image_url",
            "detected_language",
            "ai_summary",
            "stage",
            "edition_id",
        ):
            object.__setattr__(self, name, _opt(getattr(self, name)))
        if self.full_text is None:
            object.__setattr__(self, "full_text", "")
        if not isinstance(self.quality_flags, frozenset):
            object.__setattr__(self, "quality_flags", frozenset(self.quality_flags))
        if isinstance(self.extraction_method, str) and not isinstance(self.extraction_method, ExtractionMethod):
            object.__setattr__(self, "extraction_method", ExtractionMethod(self.extraction_method))

    @property
    def character_count(self) -> int:
        return len(self.full_text)

    @property
    def word_count(self) -> int:
        return len(self.full_text.split())

    @property
    def non_html_kind(self) -> str | None:
        for flag in self.quality_flags:
            if flag.startswith(NON_HTML_PREFIX):
                return flag[len(NON_HTML_PREFIX):]
        return None

    def with_flags(self, *add: str, remove: Iterable[str] = ()) -> "NewsRecord":
        return replace(self, quality_flags=(self.quality_flags - set(remove)) | set(add))

    def link_fields(self) -> LinkFields:
        return LinkFields(
            self.id,
            self.source_url,
            self.headline,
            self.published_at.date() if self.published_at and PUBLISHED_APPROX not in self.quality_flags else None,
            self.collected_at,
        )

    def to_row(self) -> dict[str, str]:
        return {
            "id": self.id,
            "outlet_name": self.outlet_name or "",
            "source_domain": self.source_domain or "",
            "published_at": format_ts(self.published_at),
            "collected_at": format_ts(self.collected_at),
            "headline": self.headline,
            "author": self.author or "",
            "geographic_reference": self.geographic_reference or "",
            "thematic_category": self.thematic_category or "",
            "source_url": self.source_url or "",
            "full_text": self.full_text,
            "character_count": str(self.character_count),
            "word_count": str(self.word_count),
            "featured_image_url": self.featured_image_url or "",
            "extraction_method": self.extraction_method.value if self.extraction_method else "",
            "detected_language": self.detected_language or "",
            "ai_summary": self.ai_summary or "",
            "quality_flags": ";".join(sorted(self.quality_flags)),
            "stage": self.stage or "",
            "edition_id": self.edition_id or "",
        }


@dataclass(frozen=True)
class AuditEntry:
    pass_name: str
    records_in: int
    records_out: int
    note: str = ""


@dataclass(frozen=True)
class Dataset:
    name: str
    origin: Origin
    records: tuple[NewsRecord, ...] = ()
    schema_version: str = SCHEMA_VERSION
    audit_log: tuple[AuditEntry, ...] = ()
    quarantine: tuple[tuple[int, str], ...] = ()

    def __post_init__(self) -> None:
        ids = [r.id for r in self.records]
        if len(ids) != len(set(ids)):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise MergeError(f"dataset {self.name!r} has duplicate ids: {', '.join(dupes[:5])}")
        if not isinstance(self.records, tuple):
            object.__setattr__(self, "records", tuple(self.records))

    def __len__(self) -> int:
        return len(self.records)

    def derive(self, records: Iterable[NewsRecord], pass_name: str, note: str = "") -> "Dataset":
        """New snapshot with ``records`` and one more audit entry."""
        records = tuple(records)
        entry = AuditEntry(pass_name, len(self.records), len(records), note)
        return replace(self, records=records, audit_log=self.audit_log + (entry,))


def _write_rows(rows: Iterable[Mapping[str, str]], stream) -> int:
    writer = csv.DictWriter(stream, fieldnames=FIELD_NAMES, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    writer.writeheader()
    n = 0
    for row in rows:
        writer.writerow(row)
        n += 1
    return n


def dataset_to_csv(dataset: Dataset) -> str:
    buf = io.StringIO(newline="")
    _write_rows((r.to_row() for r in dataset.records), buf)
    return buf.getvalue()


def export_delimited(dataset: Dataset, path: str | Path) -> int:
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="") as fh:
            return _write_rows((r.to_row() for r in dataset.records), fh)
    except OSError as exc:
        raise StoreIOError(f"cannot write {path}: {exc}") from exc


IDENTITY_MAPPING: dict[str, str] = {name: name for name in FIELD_NAMES}


@dataclass
class ImportMapping:
    columns: dict[str, str]
    date_formats: tuple[str, ...] = ()

    @classmethod
    def load(cls, path: str | Path) -> "ImportMapping":
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(dict(doc["columns"]), tuple(doc.get("date_formats", ())))


def _coerce_row(row: Mapping[str, str], mapping: ImportMapping, origin: Origin, row_no: int) -> NewsRecord:
    cols = mapping.columns

    def get(name: str) -> str:
        col = cols.get(name)
        return (row.get(col) or "") if col else ""

    if not get("headline").strip():
        raise ValueError("empty headline")
    full_text = get("full_text")
    if "full_text" in cols:
        for count_field, actual in (("character_count", len(full_text)), ("word_count", len(full_text.split()))):
            stored = get(count_field).strip()
            if stored and int(stored) != actual:
                raise ValueError(f"{count_field} {stored} does not match full_text ({actual})")
    method = get("extraction_method").strip()
    flags = frozenset(f for f in get("quality_flags").split(";") if f)
    return NewsRecord(
        id=get("id").strip() or f"{origin.value}-{row_no}",
        headline=get("headline"),
        outlet_name=get("outlet_name"),
        source_domain=get("source_domain"),
        published_at=parse_ts(get("published_at"), mapping.date_formats),
        collected_at=parse_ts(get("collected_at"), mapping.date_formats),
        author=get("author"),
        geographic_reference=get("geographic_reference"),
        thematic_category=get("thematic_category"),
        source_url=get("source_url"),
        full_text=full_text,
        featured_image_url=get("featured_image_url"),
        extraction_method=ExtractionMethod(method) if method else None,
        detected_language=get("detected_language"),
        ai_summary=get("ai_summary"),
        quality_flags=flags,
        stage=get("stage"),
        edition_id=get("edition_id"),
    )


def import_delimited(
    path: str | Path,
    mapping: ImportMapping | Mapping[str, str] | None = None,
    origin: Origin | str = Origin.IMPORT,
    name: str | None = None,
    delimiter: str | None = None,
) -> Dataset:
    """Load a delimited export; rows that fail coercion are quarantined, not raised."""
    origin = Origin(origin)
    if mapping is None:
        mapping = ImportMapping(dict(IDENTITY_MAPPING))
    elif not isinstance(mapping, ImportMapping):
        mapping = ImportMapping(dict(mapping))
    path = Path(path)
    with path.open("r", encoding="utf-8-sig", newline="") as fh:
        text = fh.read()
    if delimiter is None:
        first_line = text.split("\n", 1)[0]
        delimiter = max([",", ";", "\t"], key=first_line.count) if first_line else ","
    reader = csv.DictReader(io.StringIO(text, newline=""), delimiter=delimiter)
    header = reader.fieldnames or []
    cols = mapping.columns
    missing = [f for f, c in cols.items() if c not in header]
    present = {f for f in cols if f not in missing}
    if "headline" not in present or not ({"source_url", "outlet_name"} & present):
        raise DelimitedImportError(
            f"{path}: mandatory columns missing (need headline and one of source_url/outlet_name); "
            f"unmatched mappings: {', '.join(missing) or 'none'}"
        )
    mapping = ImportMapping({f: c for f, c in cols.items() if f in present}, mapping.date_formats)
    records: list[NewsRecord] = []
    quarantine: list[tuple[int, str]] = []
    seen_ids: set[str] = set()
    for row_no, row in enumerate(reader, start=2):
        try:
            record = _coerce_row(row, mapping, origin, row_no)
        except (ValueError, KeyError) as exc:
            quarantine.append((row_no, str(exc)))
            continue
        if record.id in seen_ids:
            quarantine.append((row_no, f"duplicate id {record.id}"))
            continue
        seen_ids.add(record.id)
        records.append(record)
    entry = AuditEntry("import", len(records) + len(quarantine), len(records), f"quarantined={len(quarantine)}")
    return Dataset(
        name=name or path.stem,
        origin=origin,
        records=tuple(records),
        audit_log=(entry,),
        quarantine=tuple(quarantine),
    )


def merge(
    datasets: Sequence[Dataset],
    threshold: float = DEFAULT_THRESHOLD,
    name: str = "merged",
) -> tuple[Dataset, dict[str, tuple[str, ...]]]:
    """Concatenate and deduplicate; returns the merged dataset and record-id -> contributing datasets."""
    if not datasets:
        return Dataset(name, Origin.IMPORT), {}
    versions = {d.schema_version for d in datasets}
    if len(versions) > 1:
        raise MergeError(f"incompatible schema versions: {sorted(versions)}")
    pooled: list[NewsRecord] = []
    source_of: list[str] = []
    for ds in datasets:
        pooled.extend(ds.records)
        source_of.extend([ds.name] * len(ds.records))

    groups = duplicate_components(pooled, threshold)
    unique, _ = dedup_merge(pooled, threshold)
    kept_index = {id(r): i for i, r in enumerate(pooled)}
    provenance: dict[str, tuple[str, ...]] = {}
    records: list[NewsRecord] = []
    used_ids: set[str] = set()
    for members, kept in zip(groups, unique):
        idx = kept_index[id(kept)]
        record = kept
        if record.id in used_ids:
            record = replace(record, id=f"{source_of[idx]}:{record.id}")
        used_ids.add(record.id)
        records.append(record)
        provenance[record.id] = tuple(sorted({source_of[i] for i in members}))
    origins = {d.origin for d in datasets}
    origin = origins.pop() if len(origins) == 1 else Origin.IMPORT
    entry = AuditEntry("merge", len(pooled), len(records), f"sources={','.join(d.name for d in datasets)}")
    return Dataset(name, origin, tuple(records), audit_log=(entry,)), provenance
