"""Zero-shot metadata extraction through a local model server, plus the
guards that keep fabricated output out of the dataset.

The model protocol is a single-turn completion: ``POST {model, prompt}``
returning ``{text}`` (an Ollama-style ``{response}`` is accepted too).
"""

from __future__ import annotations

import hashlib
import logging
import re
import threading
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from typing import Callable, Iterable, Sequence

import requests

from newsharvest.errors import ExtractionError, PreconditionError
from newsharvest.store import (
    AUTHOR_UNVERIFIED,
    LLM_PARSE_FAIL,
    NO_CONTENT,
    REPROCESS_MANUAL,
    NewsRecord,
)

log = logging.getLogger(__name__)

SYNOPSIS_MAX_WORDS = 60
BYLINE_HEAD_CHARS = 500
BYLINE_TAIL_CHARS = 200
DEFAULT_MIN_GROUP = 2
DEFAULT_MIN_LEN = 200


def load_template(name: str = "metadata.txt") -> str:
    return resources.files("newsharvest").joinpath(f"prompts/{name}").read_text("utf-8")


def digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


TEMPLATE = load_template()
TEMPLATE_DIGEST = digest(TEMPLATE)


def render_prompt(headline: str, full_text: str, template: str = TEMPLATE) -> str:
    return template.replace("{headline}", " ".join(headline.split())).replace("{full_text}", full_text)


@dataclass(frozen=True)
class MetadataGuess:
    model_id: str
    prompt_digest: str
    author: str | None = None
    geographic_focus: str | None = None
    section: str | None = None
    synopsis: str | None = None
    flags: frozenset[str] = frozenset()

    @property
    def section_key(self) -> str | None:
        return self.section.strip().lower() if self.section else None


class ModelClient:
    """Serialized client for a single-stream local model server."""

    def __init__(self, url: str, model: str = "mistral-nemo:12b", timeout_s: float = 120.0,
                 post: Callable[..., requests.Response] | None = None):
        self.url = url
        self.model = model
        self.timeout_s = timeout_s
        self._post = post or requests.post
        self._lock = threading.Lock()
        self.calls = 0

    def complete(self, prompt: str) -> str:
        with self._lock:
            self.calls += 1
            try:
                resp = self._post(
                    self.url,
                    json={"model": self.model, "prompt": prompt, "stream": False},
                    timeout=self.timeout_s,
                )
            except requests.RequestException as exc:
                raise ExtractionError(f"model endpoint {self.url} unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise ExtractionError(f"model endpoint returned HTTP {resp.status_code}")
        try:
            payload = resp.json()
        except ValueError as exc:
            raise ExtractionError("model endpoint returned non-JSON body") from exc
        text = payload.get("text", payload.get("response"))
        if not isinstance(text, str):
            raise ExtractionError("model response lacks a text field")
        return text


_LABELS = {
    "author": "author",
    "autor": "author",
    "byline": "author",
    "location": "geographic_focus",
    "geographic focus": "geographic_focus",
    "place": "geographic_focus",
    "section": "section",
    "category": "section",
    "synopsis": "synopsis",
    "summary": "synopsis",
}
_LINE = re.compile(r"^\s*[*\-]*\s*([A-Za-z ]+?)\s*[*]*\s*:[\s*]*(.*?)[\s*]*$")
_EMPTY = {"", "none", "null", "n/a", "na", "unknown", "not stated", "-", "desconocido", "ninguno"}


def parse_model_output(text: str) -> dict[str, str | None] | None:
    """Labelled lines -> fields; None when no recognised label is present."""
    found: dict[str, str | None] = {}
    for line in text.splitlines():
        m = _LINE.match(line)
        if not m:
            continue
        field = _LABELS.get(m.group(1).strip().lower())
        if field is None or field in found:
            continue
        value = m.group(2).strip().strip('"').strip()
        found[field] = None if value.lower().rstrip(".") in _EMPTY else value
    return found or None


def _sentences(text: str) -> list[str]:
    return [s.strip() for s in re.split(r"(?<=[.!?])\s+|\n+", text) if s.strip()]


def clamp_synopsis(synopsis: str | None, full_text: str) -> str | None:
    """Enforce the word cap; a long synopsis lifted verbatim from one sentence is dropped."""
    if not synopsis:
        return None
    words = synopsis.split()
    if len(words) <= SYNOPSIS_MAX_WORDS:
        return " ".join(words)
    norm = " ".join(words)
    if any(norm in " ".join(s.split()) for s in _sentences(full_text)):
        return None
    return " ".join(words[:SYNOPSIS_MAX_WORDS])


def extract_metadata(headline: str, full_text: str, client: ModelClient, template: str = TEMPLATE) -> MetadataGuess:
    if not full_text or not full_text.strip():
        raise PreconditionError("metadata extraction needs non-empty full text")
    prompt = render_prompt(headline, full_text, template)
    pdigest = digest(prompt)
    parsed = None
    for _ in range(2):  # one bounded retry on unparseable output
        parsed = parse_model_output(client.complete(prompt))
        if parsed is not None:
            break
    if parsed is None:
        return MetadataGuess(client.model, pdigest, flags=frozenset({LLM_PARSE_FAIL}))
    return MetadataGuess(
        model_id=client.model,
        prompt_digest=pdigest,
        author=parsed.get("author"),
        geographic_focus=parsed.get("geographic_focus"),
        section=parsed.get("section"),
        synopsis=clamp_synopsis(parsed.get("synopsis"), full_text),
    )


def validate_author(guess: MetadataGuess, full_text: str) -> tuple[MetadataGuess, bool]:
    """Keep the author only if it appears in the byline regions of the text."""
    if not guess.author:
        raise PreconditionError("no author to validate")
    needle = guess.author.casefold()
    head = full_text[:BYLINE_HEAD_CHARS].casefold()
    tail = full_text[-BYLINE_TAIL_CHARS:].casefold() if full_text else ""
    if needle in head or needle in tail:
        return guess, True
    return replace(guess, author=None, flags=guess.flags | {AUTHOR_UNVERIFIED}), False


def annotate_record(record: NewsRecord, client: ModelClient) -> NewsRecord:
    """Run extraction + author validation and copy results onto the record.

    Model failures leave the record unannotated.
    """
    if not record.full_text:
        return record
    try:
        guess = extract_metadata(record.headline, record.full_text, client)
    except ExtractionError as exc:
        log.warning("record %s left unannotated: %s", record.id, exc)
        return record
    if guess.author:
        guess, _ = validate_author(guess, record.full_text)
    return replace(
        record,
        author=guess.author,
        geographic_reference=guess.geographic_focus,
        thematic_category=guess.section,
        ai_summary=guess.synopsis,
        quality_flags=record.quality_flags | guess.flags,
    )


class FlagAction(str, Enum):
    CLEARED = "cleared"
    REPROCESS_MANUAL = "reprocess_manual"


@dataclass(frozen=True)
class HallucinationFlag:
    group_key: str
    member_ids: tuple[str, ...]
    action: FlagAction = FlagAction.REPROCESS_MANUAL

    def __post_init__(self) -> None:
        if len(self.member_ids) < 2:
            raise ValueError("a hallucination group has at least two members")


def _normalize(text: str) -> str:
    return " ".join(text.split())


def detect_hallucination(
    records: Sequence[NewsRecord],
    min_group: int = DEFAULT_MIN_GROUP,
    min_len: int = DEFAULT_MIN_LEN,
) -> tuple[list[NewsRecord], list[HallucinationFlag]]:
    """Group records by identical normalized text; large-enough groups of long
    text are cleared and queued for manual reprocessing."""
    if min_group < 2:
        raise ValueError("min_group must be at least 2")
    groups: dict[str, list[int]] = {}
    for i, r in enumerate(records):
        norm = _normalize(r.full_text)
        if len(norm) < min_len:
            continue
        groups.setdefault(norm, []).append(i)
    flags: list[HallucinationFlag] = []
    flagged: set[int] = set()
    for text, members in groups.items():
        if len(members) >= min_group:
            flags.append(HallucinationFlag(digest(text), tuple(records[i].id for i in members)))
            flagged.update(members)
    out = [
        replace(r, full_text="", quality_flags=(r.quality_flags - {NO_CONTENT}) | {REPROCESS_MANUAL})
        if i in flagged
        else r
        for i, r in enumerate(records)
    ]
    return out, flags


def annotate_all(records: Iterable[NewsRecord], client: ModelClient) -> list[NewsRecord]:
    return [annotate_record(r, client) for r in records]
