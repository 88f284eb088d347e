"""Synthetic result streams shaped like a Spanish-portal duplication pattern.

157 distinct stories are each returned several times across portal editions:
the same link with tracking parameters, host-case or trailing-slash changes,
and different aggregator links whose headlines differ only in case or
punctuation. 854 rows in total.
"""

import functools
import random
import unicodedata
from datetime import datetime, timedelta, timezone
from urllib.parse import parse_qsl, urlsplit

from newsharvest.harvest import RawResult
from newsharvest.store import NewsRecord

STORIES = 157
ROWS = 854
EDITIONS = ["es:ES", "es:MX", "es:AR", "es:CO", "es:CL", "es:PE", "es:VE", "es:CU", "es:US"]

_WORDS = (
    "acelerador fusion granada escuzar consorcio obra licitacion empleo ciencia gobierno junta europa "
    "neutrones materiales energia comision ministerio universidad empresas contrato edificio terrenos "
    "financiacion investigadores visita reunion acuerdo presupuesto calendario seguridad vecinos"
).split()


def _headline(i: int, rng: random.Random) -> str:
    words = rng.sample(_WORDS, 6)
    return f"IFMIF-DONES {' '.join(words)} nota{i}".capitalize()


def _variants(i: int, headline: str):
    url = f"https://www.medio{i % 40}.es/noticias/2024/{i:04d}-ifmif-dones"
    yield url, headline
    yield url + "?utm_source=googlenews&utm_medium=rss", headline
    yield url.replace("https://www.medio", "https://WWW.Medio") + "/", headline
    yield f"https://news.simnews.test/articles/{i:04d}a", headline.upper()
    yield url + "#comentarios", headline + "."
    yield f"https://news.simnews.test/articles/{i:04d}b", "¡" + headline.lower() + "!"


def portal_pattern(seed: int = 854) -> list[tuple[int, str, str, datetime, str]]:
    """Rows of (story, url, headline, published, edition); 5 or 6 copies per story."""
    rng = random.Random(seed)
    heads = [_headline(i, rng) for i in range(STORIES)]
    extra = set(rng.sample(range(STORIES), ROWS - 5 * STORIES))
    base = datetime(2024, 1, 1, 8, tzinfo=timezone.utc)
    rows = []
    for i, h in enumerate(heads):
        published = base + timedelta(days=i)
        variants = list(_variants(i, h))[: 6 if i in extra else 5]
        for k, (url, headline) in enumerate(variants):
            rows.append((i, url, headline, published, EDITIONS[(i + k) % len(EDITIONS)]))
    rng.shuffle(rows)
    return rows


def portal_pattern_raw(seed: int = 854) -> list[RawResult]:
    t = datetime(2026, 1, 1, tzinfo=timezone.utc)
    return [
        RawResult(
            headline=h,
            result_url=url,
            outlet_label=f"Medio {story % 40}",
            edition_id=ed,
            query_digest=f"q{ed}",
            collected_at=t + timedelta(seconds=n),
            rank=n,
            published_at=pub,
            stage="S1_editions",
        )
        for n, (story, url, h, pub, ed) in enumerate(portal_pattern(seed))
    ]


def portal_pattern_records(seed: int = 854) -> list[NewsRecord]:
    t = datetime(2026, 1, 1, tzinfo=timezone.utc)
    return [
        NewsRecord(
            id=f"row{n}",
            headline=h,
            outlet_name=f"Medio {story % 40}",
            published_at=pub,
            collected_at=t + timedelta(seconds=n),
            source_url=url,
            edition_id=ed,
        )
        for n, (story, url, h, pub, ed) in enumerate(portal_pattern(seed))
    ]


# --- random dedup fixtures and an independent pairwise oracle -----------------------

_VOCAB = "alpha beta gamma delta fusion granada acelerador obra junta europa neutron plan vecinos".split()


def random_records(rng: random.Random, n: int) -> list[NewsRecord]:
    """Records drawn from small URL/headline/date pools so collisions are frequent."""
    base_heads = [" ".join(rng.sample(_VOCAB, rng.randint(1, 7))) for _ in range(max(3, n // 4))]
    urls = [f"https://site{rng.randint(0, 5)}.example/p/{k}" for k in range(max(3, n // 3))]
    days = [datetime(2024, 5, d, 8, tzinfo=timezone.utc) for d in (1, 2, 3)]
    t = datetime(2026, 1, 1, tzinfo=timezone.utc)
    out = []
    for i in range(n):
        head = rng.choice(base_heads)
        roll = rng.random()
        if roll < 0.25:
            head = head.upper() + "!"
        elif roll < 0.4:
            head = head + " " + rng.choice(_VOCAB)
        elif roll < 0.45:
            head = ""
        url = rng.choice(urls)
        if rng.random() < 0.3:
            url += "?utm_source=x"
        if rng.random() < 0.15:
            url = None
        out.append(
            NewsRecord(
                id=f"x{i}",
                headline=head,
                published_at=rng.choice(days + [None]),
                collected_at=t + timedelta(seconds=rng.randint(0, 50)),
                source_url=url,
            )
        )
    return out


@functools.lru_cache(maxsize=None)
def oracle_tokens(headline: str) -> frozenset[str]:
    text = unicodedata.normalize("NFC", headline).casefold()
    return frozenset("".join(c for c in text if unicodedata.category(c)[0] != "P").split())


def oracle_jaccard(a: str, b: str) -> float:
    ta, tb = oracle_tokens(a), oracle_tokens(b)
    if not ta and not tb:
        return 1.0
    return len(ta & tb) / len(ta | tb) if ta | tb else 0.0


@functools.lru_cache(maxsize=None)
def oracle_url_key(url):
    if not url:
        return None
    p = urlsplit(url)
    path = p.path.rstrip("/") or "/"
    params = sorted((k, v) for k, v in parse_qsl(p.query, keep_blank_values=True) if not k.lower().startswith("utm_"))
    return (p.hostname or "").lower(), path, tuple(params)


def oracle_partition(records, threshold: float) -> set[frozenset[str]]:
    """All-pairs duplicate relation closed by repeated graph search."""
    n = len(records)
    adj = [set() for _ in range(n)]
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            a, b = records[i], records[j]
            ua, ub = oracle_url_key(a.source_url), oracle_url_key(b.source_url)
            same_url = ua is not None and ua == ub
            da = a.published_at.date() if a.published_at else None
            db = b.published_at.date() if b.published_at else None
            dates_ok = da is None or db is None or da == db
            if same_url or (dates_ok and oracle_jaccard(a.headline, b.headline) >= threshold):
                adj[i].add(j)
    seen, groups = set(), set()
    for s in range(n):
        if s in seen:
            continue
        stack, comp = [s], set()
        while stack:
            x = stack.pop()
            if x in comp:
                continue
            comp.add(x)
            stack.extend(adj[x] - comp)
        seen |= comp
        groups.add(frozenset(records[i].id for i in comp))
    return groups


# Published stage outcomes, in stage order. S3's two language runs leave the
# cumulative total short of 1,160, so a residual event carries the remainder;
# S4 is one event since its per-language unique counts overlap each other.
PUBLISHED_STAGE_EVENTS = (
    ("S1_editions", 425, 425, "all editions"),
    ("S2_months", 594, 99, "es:ES months"),
    ("S3_iso", 231, 143, "es"),
    ("S3_iso", 330, 242, "en"),
    ("S3_iso", 251, 251, "residual"),
    ("S4_domains", 960 + 2824, 2180, "en+es"),
)
PUBLISHED_CUMULATIVE = {"S1_editions": 425, "S2_months": 524, "S3_iso": 1160, "S4_domains": 3340}
PUBLISHED_POST_FILTER = 1482
