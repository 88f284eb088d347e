import re

import pytest

from newsharvest.extract import (
    ContentStatus,
    ExtractedContent,
    ResourceClass,
    ResourceKind,
    Via,
    apply_extraction,
    backfill_content,
    classify_resource,
    detect_language,
    extract_article_text,
)
from newsharvest.store import (
    KEYWORD_STUFFING,
    NO_CONTENT,
    PAYWALLED,
    UNRESOLVED,
    ExtractionMethod,
)

from conftest import make_record

HTML = ResourceClass(ResourceKind.HTML_ARTICLE, "text/html", Via.HEADER)
PDF = ResourceClass(ResourceKind.PDF, "application/pdf", Via.MAGIC_BYTES)

PAGE = """<!DOCTYPE html><html><head><title>t</title>
<meta property="og:image" content="/img/lead.jpg"></head><body>
<nav class="menu"><a href="/">Portada</a> NAVTEXT</nav>
<div class="sidebar"><p>SIDEBAR related stories and more related stories here</p></div>
<div id="ad-slot" class="ads"><p>ADTEXT buy now buy now buy now</p></div>
<article><h1>Titular</h1>
<p>El consorcio IFMIF-DONES ha adjudicado la obra civil del edificio principal.</p>
<p>Las obras empezarán en primavera y durarán tres años, según la dirección del proyecto.</p>
</article>
<section class="comments"><p>COMMENTTEXT gran noticia para la provincia de la que todos hablan</p></section>
<footer>FOOTERTEXT</footer>
<script>var x = "SCRIPTTEXT";</script>
</body></html>"""


# --- classification ----------------------------------------------------------------------

@pytest.mark.parametrize(
    "url,headers,first,kind,via",
    [
        ("http://x.com/a", {}, b"%PDF-1.7 ...", ResourceKind.PDF, Via.MAGIC_BYTES),
        ("http://x.com/a.html", {"Content-Type": "application/pdf"}, b"%PDF-", ResourceKind.PDF, Via.MAGIC_BYTES),
        ("http://x.com/a.html", {"Content-Type": "text/html; charset=utf-8"}, b"<html><article>", ResourceKind.HTML_ARTICLE, Via.HEADER),
        ("http://x.com/a", {"Content-Type": "text/html"}, b"<html><body><ul>", ResourceKind.HTML_NONARTICLE, Via.HEADER),
        ("http://x.com/a", {"Content-Type": "application/zip"}, None, ResourceKind.ARCHIVE, Via.HEADER),
        ("http://x.com/a.mp3", {}, None, ResourceKind.AUDIO, Via.EXTENSION),
        ("http://x.com/setup.exe", {}, b"", ResourceKind.EXECUTABLE, Via.EXTENSION),
        ("http://x.com/clip", {"content-type": "video/mp4"}, b"\x00\x00\x00\x18ftypmp42", ResourceKind.VIDEO, Via.MAGIC_BYTES),
        ("http://x.com/p.png", {"Content-Type": "text/html"}, b"\x89PNG\r\n\x1a\n", ResourceKind.IMAGE, Via.MAGIC_BYTES),
        ("http://x.com/thing", {}, b"\x00\x01", ResourceKind.UNKNOWN, Via.EXTENSION),
    ],
)
def test_classify_resource(url, headers, first, kind, via):
    rc = classify_resource(url, headers, first)
    assert (rc.kind, rc.via) == (kind, via)


def test_pdf_kind_always_backed_by_evidence():
    rc = classify_resource("http://x.com/doc.pdf", None, None)
    assert rc.kind is ResourceKind.PDF and rc.via is Via.EXTENSION


# --- boilerplate removal ------------------------------------------------------------------

def test_extraction_keeps_body_only():
    out = extract_article_text(PAGE, "es", base_url="http://x.com/a/b")
    assert out.status is ContentStatus.OK
    assert out.full_text == (
        "El consorcio IFMIF-DONES ha adjudicado la obra civil del edificio principal.\n"
        "Las obras empezarán en primavera y durarán tres años, según la dirección del proyecto."
    )
    for junk in ("NAVTEXT", "SIDEBAR", "ADTEXT", "COMMENTTEXT", "FOOTERTEXT", "SCRIPTTEXT"):
        assert junk not in out.full_text
    assert not re.search(r"<[a-z/]", out.full_text)
    assert out.featured_image_url == "http://x.com/img/lead.jpg"
    assert out.detected_language == "es"


@pytest.mark.parametrize("doc", ["", "   ", "<html><head><script>alert(1)</script></head><body></body></html>"])
def test_empty_documents_have_no_content(doc):
    out = extract_article_text(doc, "en")
    assert out.status is ContentStatus.NO_CONTENT and out.full_text == ""


def test_no_content_invariant():
    with pytest.raises(ValueError):
        ExtractedContent("text", ContentStatus.NO_CONTENT)


def test_fixture_articles_extract_exactly(corpus):
    for art in corpus.articles:
        out = extract_article_text(art.body_html, art.language)
        if "paywall" in art.body_html:
            assert out.status is ContentStatus.PAYWALLED and out.full_text == ""
            continue
        assert out.full_text == art.body_text, art.url
        assert out.detected_language == art.language, art.url


def test_paywall_by_short_subscribe_body():
    doc = "<html><body><article><p>Contenido exclusivo. Suscríbete para seguir leyendo.</p></article></body></html>"
    assert extract_article_text(doc).status is ContentStatus.PAYWALLED


def test_keyword_stuffing_detected():
    terms = ", ".join(f"term{i}" for i in range(20))
    doc = f'<html><head><meta name="keywords" content="{terms}"></head><body><p>casino</p></body></html>'
    assert extract_article_text(doc).keyword_stuffing


def test_language_detection():
    assert detect_language("The project is one of the largest in the region and it will open in 2026.") == "en"
    assert detect_language("El proyecto de la ciudad que se construye en el sur de los Alpes") == "es"
    assert detect_language("", "it") == "it"
    assert detect_language("zzz qqq", None) == "unknown"
    # only the listed profiles compete
    assert detect_language("de la de la", languages=["fr"]) == "fr"


# --- applying to records --------------------------------------------------------------------

def test_apply_extraction_fills_text():
    rec = make_record(1, full_text="", quality_flags={UNRESOLVED, NO_CONTENT})
    out = apply_extraction(rec, HTML, PAGE.encode("utf-8"), ExtractionMethod.DIRECT_FETCH, "es")
    assert out.full_text.startswith("El consorcio")
    assert out.quality_flags == frozenset()
    assert out.extraction_method is ExtractionMethod.DIRECT_FETCH
    assert out.character_count == len(out.full_text)
    assert out.word_count == len(out.full_text.split())


def test_apply_extraction_non_html():
    out = apply_extraction(make_record(1, full_text=""), PDF, b"%PDF-", ExtractionMethod.DIRECT_FETCH)
    assert out.full_text == "" and out.non_html_kind == "pdf" and NO_CONTENT in out.quality_flags


def test_apply_extraction_flags_stuffing_and_paywall():
    terms = ", ".join(f"t{i}" for i in range(16))
    stuffed = f'<html><head><meta name="keywords" content="{terms}"></head><body><article><p>{"palabra " * 40}</p></article></body></html>'
    out = apply_extraction(make_record(1, full_text=""), HTML, stuffed.encode(), ExtractionMethod.DIRECT_FETCH)
    assert KEYWORD_STUFFING in out.quality_flags
    wall = b'<html><body><div class="paywall">x</div><article><p>Solo para suscriptores.</p></article></body></html>'
    out = apply_extraction(make_record(1, full_text=""), HTML, wall, ExtractionMethod.DIRECT_FETCH)
    assert {PAYWALLED, NO_CONTENT} <= out.quality_flags


# --- backfill -------------------------------------------------------------------------------

def _pages(mapping):
    calls = []

    def fetch(url):
        calls.append(url)
        value = mapping[url]
        if isinstance(value, Exception):
            raise value
        return value

    return fetch, calls


def test_backfill_fills_on_second_attempt():
    rec = make_record(1, full_text="", quality_flags={NO_CONTENT})
    fetch, calls = _pages({
        rec.source_url: OSError("timeout"),
        "http://mirror.example/a": ("http://mirror.example/a", HTML, PAGE.encode(), "utf-8"),
    })
    [out], [report] = backfill_content([rec], fetch, lambda r: ["http://mirror.example/a"])
    assert report.outcome == "filled"
    assert out.full_text.startswith("El consorcio") and NO_CONTENT not in out.quality_flags
    assert out.extraction_method is ExtractionMethod.BACKFILL
    assert calls == [rec.source_url, "http://mirror.example/a"]


def test_backfill_reports_paywall_and_pdf():
    wall = b'<html><body><div class="paywall"></div><p>Suscr\xc3\xadbete</p></body></html>'
    a = make_record(1, full_text="")
    b = make_record(2, full_text="")
    fetch, _ = _pages({
        a.source_url: (a.source_url, HTML, wall, "utf-8"),
        b.source_url: (b.source_url, PDF, b"%PDF-", None),
    })
    out, report = backfill_content([a, b], fetch)
    assert [r.outcome for r in report] == ["paywalled", "non_html"]
    assert all(r.full_text == "" and NO_CONTENT in r.quality_flags for r in out)


def test_backfill_never_overwrites_text():
    rec = make_record(1)
    fetch, calls = _pages({})
    [out], [report] = backfill_content([rec], fetch)
    assert out is rec and report.outcome == "skipped" and calls == []


def test_backfill_records_errors_without_raising():
    rec = make_record(1, full_text="")
    fetch, _ = _pages({rec.source_url: RuntimeError("boom")})

    def broken_search(r):
        raise RuntimeError("search down")

    [out], [report] = backfill_content([rec], fetch, broken_search)
    assert report.outcome == "no_content" and "search down" in report.reason
    assert out.full_text == ""
