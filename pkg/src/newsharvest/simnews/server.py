"""HTTP fixture server.

One server plays every remote party in a test run:

* aggregator: ``/search`` listings and ``/articles/<token>`` redirects
* publishers: reached as an HTTP proxy, so article URLs keep their real hosts
* language model: ``POST /api/generate`` with a deterministic echo model

Responses are a pure function of (corpus, request).
"""

from __future__ import annotations

import html
import json
import re
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from newsharvest.errors import ServerStartupError
from newsharvest.simnews.corpus import BINARY_KINDS, Article, FixtureCorpus, NoiseItem, NoiseKind


def render_listing(corpus: FixtureCorpus, edition_id: str, query: str) -> str:
    key = corpus.listing_key(edition_id, query)
    rows = []
    for rank, entry in enumerate(corpus.listing(edition_id, query), start=1):
        token = corpus.token_for(key, rank, entry.url)
        headline = html.escape(corpus.headline_of(entry))
        outlet = html.escape(corpus.outlet_of(entry))
        if entry.time and re.match(r"^\d{4}-\d{2}-\d{2}", entry.time):
            when = f'<time datetime="{html.escape(entry.time)}">{html.escape(entry.time[:10])}</time>'
        elif entry.time:
            when = f"<time>{html.escape(entry.time)}</time>"
        else:
            when = ""
        rows.append(
            f'<li class="result"><a class="headline" href="/articles/{token}">{headline}</a>'
            f'<span class="outlet">{outlet}</span>{when}</li>'
        )
    body = "\n".join(rows)
    return (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>results</title></head><body>\n"
        f'<ol class="results">\n{body}\n</ol>\n</body></html>\n'
    )


def render_placeholder(corpus: FixtureCorpus, item: NoiseItem) -> str:
    paragraphs = "".join(f"<p>{html.escape(p)}</p>" for p in corpus.placeholder_text.split("\n") if p)
    return (
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">"
        f"<title>{html.escape(item.headline)}</title></head><body>"
        '<nav class="menu"><a href="/">Inicio</a></nav>'
        f"<article><h1>{html.escape(item.headline)}</h1>{paragraphs}</article>"
        "</body></html>\n"
    )


def noise_response(corpus: FixtureCorpus, item: NoiseItem) -> tuple[int, str, bytes]:
    if item.kind in BINARY_KINDS:
        ctype, magic = BINARY_KINDS[item.kind]
        return 200, ctype, magic + item.payload.encode("utf-8")
    if item.kind is NoiseKind.PLACEHOLDER_TEXT:
        return 200, "text/html; charset=utf-8", render_placeholder(corpus, item).encode("utf-8")
    return 200, "text/html; charset=utf-8", item.payload.encode("utf-8")


# --- echo model --------------------------------------------------------------

_BYLINE = re.compile(r"^(?:By|Por|Par|Von|Di|Autor:)\s+([A-ZÁÉÍÓÚÑ][\w'’.-]+(?:\s+[A-ZÁÉÍÓÚÑ][\w'’.-]+){1,3})", re.M)
_PLACES = ("Granada", "Andalucía", "Andalusia", "España", "Spain", "Croatia", "Croacia", "Italy", "Italia", "Japan", "Japón", "Europe", "Europa")
_SECTIONS = (
    ("Science", ("fusión", "fusion", "neutron", "neutrones", "científic", "scientific", "research", "investigación")),
    ("Economy", ("millones", "million", "inversión", "investment", "empleo", "jobs")),
    ("Politics", ("gobierno", "government", "ministr", "consejo")),
)


def echo_model(prompt: str) -> str:
    """Deterministic stand-in for a small instruction model."""
    text = prompt.split("ARTICLE:\n", 1)[1] if "ARTICLE:\n" in prompt else prompt
    text = text.rsplit("\nEND ARTICLE", 1)[0]
    author = _BYLINE.search(text)
    place = next((p for p in _PLACES if p in text), None)
    lowered = text.lower()
    section = next((name for name, keys in _SECTIONS if any(k in lowered for k in keys)), None)
    body = " ".join(line for line in text.split("\n") if line and not _BYLINE.match(line))
    first_sentence = re.split(r"(?<=[.!?])\s", body.strip(), maxsplit=1)[0]
    synopsis = " ".join(first_sentence.split()[:25])
    return "\n".join(
        [
            f"AUTHOR: {author.group(1) if author else 'none'}",
            f"LOCATION: {place or 'none'}",
            f"SECTION: {section or 'none'}",
            f"SYNOPSIS: {synopsis or 'none'}",
        ]
    )


class _Handler(BaseHTTPRequestHandler):
    server_version = "simnews/1.0"
    sys_version = ""
    protocol_version = "HTTP/1.1"

    @property
    def corpus(self) -> FixtureCorpus:
        return self.server.corpus  # type: ignore[attr-defined]

    def log_message(self, format, *args):  # noqa: A002 - silence default stderr logging
        pass

    def _send(self, status: int, ctype: str, body: bytes, headers: dict[str, str] | None = None) -> None:
        self.send_response(status)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(body)))
        for k, v in (headers or {}).items():
            self.send_header(k, v)
        self.end_headers()
        if self.command != "HEAD":
            self.wfile.write(body)

    def _target(self) -> tuple[str, str, str]:
        """(absolute url, host, path-with-query) for both proxy-style and origin-style requests."""
        if self.path.startswith(("http://", "https://")):
            parts = urlsplit(self.path)
            host = parts.hostname or ""
            if parts.port and parts.port not in (80, 443):
                host = f"{host}:{parts.port}"
            path = parts.path or "/"
            if parts.query:
                path += "?" + parts.query
            return f"{parts.scheme}://{host}{path}", host, path
        host = (self.headers.get("Host") or "").split(":")[0]
        return f"http://{host}{self.path}", host, self.path

    def _is_aggregator(self, host: str) -> bool:
        own = {self.corpus.aggregator_host, "127.0.0.1", "localhost", self.server.server_address[0]}  # type: ignore[attr-defined]
        return host.split(":")[0] in own

    def do_HEAD(self):  # noqa: N802
        self.do_GET()

    def do_GET(self):  # noqa: N802
        url, host, path = self._target()
        corpus = self.corpus
        if self._is_aggregator(host):
            parts = urlsplit(path)
            if parts.path == "/search":
                qs = parse_qs(parts.query)
                body = render_listing(corpus, qs.get("edition", [""])[0], qs.get("q", [""])[0])
                return self._send(200, "text/html; charset=utf-8", body.encode("utf-8"))
            if parts.path.startswith("/articles/"):
                target = corpus.token_target(parts.path.rsplit("/", 1)[-1])
                if target is None:
                    return self._send(404, "text/plain", b"unknown article token")
                return self._send(302, "text/plain", b"", {"Location": target})
        if url in corpus.redirects:
            return self._send(302, "text/plain", b"", {"Location": corpus.redirects[url]})
        item = corpus.lookup(url)
        if isinstance(item, Article):
            if item.status == "unavailable" and url == item.url:
                return self._send(503, "text/plain", b"service unavailable")
            return self._send(200, "text/html; charset=utf-8", item.body_html.encode("utf-8"))
        if isinstance(item, NoiseItem):
            return self._send(*noise_response(corpus, item))
        return self._send(404, "text/plain", b"not found")

    def do_POST(self):  # noqa: N802
        _, _, path = self._target()
        length = int(self.headers.get("Content-Length") or 0)
        raw = self.rfile.read(length)
        if urlsplit(path).path != "/api/generate":
            return self._send(404, "text/plain", b"not found")
        try:
            payload = json.loads(raw.decode("utf-8"))
            prompt = payload["prompt"]
        except (ValueError, KeyError):
            return self._send(400, "application/json", b'{"error": "expected {model, prompt}"}')
        body = json.dumps({"model": payload.get("model", "echo"), "text": echo_model(prompt)})
        return self._send(200, "application/json", body.encode("utf-8"))


class SimNewsServer:
    """Running fixture server; usable as a context manager."""

    def __init__(self, corpus: FixtureCorpus, host: str = "127.0.0.1", port: int = 0):
        try:
            self.httpd = ThreadingHTTPServer((host, port), _Handler)
        except OSError as exc:
            raise ServerStartupError(f"cannot bind {host}:{port}: {exc}") from exc
        self.httpd.daemon_threads = True
        self.httpd.corpus = corpus  # type: ignore[attr-defined]
        self.corpus = corpus
        self._thread = threading.Thread(target=self.httpd.serve_forever, name="simnews", daemon=True)

    @property
    def address(self) -> str:
        host, port = self.httpd.server_address[:2]
        return f"http://{host}:{port}"

    @property
    def endpoint(self) -> str:
        """Aggregator base URL, host-independent (reach it through :attr:`proxy`)."""
        return f"http://{self.corpus.aggregator_host}"

    @property
    def proxy(self) -> str:
        return self.address

    @property
    def model_url(self) -> str:
        return f"{self.address}/api/generate"

    def start(self) -> "SimNewsServer":
        self._thread.start()
        return self

    def stop(self) -> None:
        self.httpd.shutdown()
        self.httpd.server_close()

    def __enter__(self) -> "SimNewsServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def serve(corpus: FixtureCorpus, bind: str = "127.0.0.1:0") -> SimNewsServer:
    host, _, port = bind.rpartition(":")
    return SimNewsServer(corpus, host or "127.0.0.1", int(port or 0)).start()
