"""Host and registrable-domain helpers backed by a bundled public-suffix list."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources
from urllib.parse import urlsplit


class PublicSuffixList:
    """Longest-match public suffix rules with wildcard and exception support."""

    def __init__(self, rules: list[str]):
        self.exact: set[str] = set()
        self.wildcards: set[str] = set()
        self.exceptions: set[str] = set()
        for raw in rules:
            rule = raw.strip().lower()
            if not rule or rule.startswith("//"):
                continue
            if rule.startswith("!"):
                self.exceptions.add(rule[1:])
            elif rule.startswith("*."):
                self.wildcards.add(rule[2:])
            else:
                self.exact.add(rule)

    @classmethod
    def from_text(cls, text: str) -> "PublicSuffixList":
        return cls(text.splitlines())

    def public_suffix(self, host: str) -> str:
        labels = host.lower().strip(".").split(".")
        best = labels[-1:]  # implicit "*" rule
        for i in range(len(labels)):
            candidate = ".".join(labels[i:])
            if candidate in self.exceptions:
                return ".".join(labels[i + 1:])
            if candidate in self.exact or (i + 1 < len(labels) and ".".join(labels[i + 1:]) in self.wildcards):
                if len(labels) - i > len(best):
                    best = labels[i:]
        return ".".join(best)

    def registrable_domain(self, host: str) -> str | None:
        host = host.lower().strip(".")
        if not host or _is_ip(host):
            return host or None
        suffix = self.public_suffix(host)
        if host == suffix:
            return None
        rest = host[: -len(suffix) - 1]
        return f"{rest.rsplit('.', 1)[-1]}.{suffix}"


def _is_ip(host: str) -> bool:
    if ":" in host:
        return True
    parts = host.split(".")
    return len(parts) == 4 and all(p.isdigit() for p in parts)


@lru_cache(maxsize=1)
def default_psl() -> PublicSuffixList:
    text = resources.files("newsharvest").joinpath("data/public_suffix.dat").read_text("utf-8")
    return PublicSuffixList.from_text(text)


def host_of(url: str) -> str:
    if "://" not in url:
        url = "http://" + url
    return (urlsplit(url).hostname or "").lower()


def registrable_domain(url_or_host: str) -> str | None:
    host = host_of(url_or_host) if ("/" in url_or_host or ":" in url_or_host) else url_or_host.lower()
    return default_psl().registrable_domain(host)


def country_from_tld(domain: str | None) -> str | None:
    """ISO country code implied by a ccTLD, or None for generic TLDs."""
    if not domain:
        return None
    tld = domain.rsplit(".", 1)[-1].lower()
    if len(tld) != 2 or tld in _GENERIC_TWO_LETTER:
        return None
    return _TLD_TO_ISO.get(tld, tld.upper())


_GENERIC_TWO_LETTER = {"co", "io", "tv", "fm", "me", "ai", "eu"}
_TLD_TO_ISO = {"uk": "GB"}
