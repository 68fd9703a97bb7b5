"""URL extraction and classification shared by the network rules."""

from __future__ import annotations

import ipaddress
import re
from enum import Enum
from typing import Optional
from urllib.parse import urlsplit

from malind.rules.config import RuleConfig, default_rule_config


class UrlClass(str, Enum):
    WEBHOOK_API = "webhook_api"
    GEOLOCATION_API = "geolocation_api"
    MINING_POOL = "mining_pool"
    SUSPICIOUS_LISTED = "suspicious_listed"
    IP_LITERAL = "ip_literal"
    PLAIN_HTTP = "plain_http"
    PASTE_OR_CDN = "paste_or_cdn"
    OTHER = "other"


URL_RE = re.compile(r"(?i)\b(?:https?|ftp|wss?|stratum\+(?:tcp|ssl|tls))://[^\s'\"<>]*")
# bare host names such as "abc.oastify.com" (no scheme)
HOST_RE = re.compile(r"(?i)^(?:[a-z0-9](?:[a-z0-9-]{0,61}[a-z0-9])?\.)+[a-z]{2,24}(?::\d+)?(?:/\S*)?$")

BINARY_EXT = (".exe", ".dll", ".bin", ".so", ".msi", ".scr", ".dmg", ".apk", ".elf", ".deb", ".rpm", ".jar")
SCRIPT_EXT = (".py", ".pyw", ".sh", ".ps1", ".bat", ".cmd", ".vbs", ".js", ".pl", ".rb")
ARCHIVE_EXT = (".zip", ".rar", ".7z", ".tar", ".tar.gz", ".tgz", ".gz", ".bz2", ".xz", ".tar.xz", ".tbz2")

LOOPBACK_HOSTS = {"localhost", "127.0.0.1", "::1", "0.0.0.0", "[::1]"}


def split_url(url: str) -> tuple[str, str, str]:
    """(scheme, host, path) in lowercase host form; tolerant of missing schemes."""
    url = url.strip()
    if "://" not in url:
        if not HOST_RE.match(url):
            return "", "", url
        url = "//" + url
    try:
        parts = urlsplit(url)
        host = (parts.hostname or "").lower()
    except ValueError:
        return "", "", url
    return parts.scheme.lower(), host, parts.path


def host_matches(host: str, path: str, pattern: str) -> bool:
    pat_host, _, pat_path = pattern.partition("/")
    if not (host == pat_host or host.endswith("." + pat_host)):
        return False
    return not pat_path or path.lstrip("/").startswith(pat_path)


def is_ip_literal(host: str) -> bool:
    try:
        ipaddress.ip_address(host.strip("[]"))
    except ValueError:
        return False
    return True


def is_loopback(host: str) -> bool:
    if host in LOOPBACK_HOSTS:
        return True
    try:
        return ipaddress.ip_address(host.strip("[]")).is_loopback
    except ValueError:
        return False


def classify_url(url: str, config: Optional[RuleConfig] = None) -> UrlClass:
    """First matching class in precedence order; unparsable input is ``other``."""
    cfg = config or default_rule_config()
    if not url or not url.strip():
        return UrlClass.OTHER
    scheme, host, path = split_url(url)
    if scheme.startswith("stratum"):
        return UrlClass.MINING_POOL
    lists = cfg.hosts
    if host:
        for cls, patterns in (
            (UrlClass.WEBHOOK_API, lists.webhook_api),
            (UrlClass.GEOLOCATION_API, lists.geolocation_api),
            (UrlClass.MINING_POOL, lists.mining_pool),
            (UrlClass.SUSPICIOUS_LISTED, lists.suspicious_listed),
        ):
            if any(host_matches(host, path, p) for p in patterns):
                return cls
        if is_ip_literal(host):
            return UrlClass.IP_LITERAL
    if scheme == "http":
        return UrlClass.PLAIN_HTTP
    if host and any(host_matches(host, path, p) for p in lists.paste_or_cdn):
        return UrlClass.PASTE_OR_CDN
    return UrlClass.OTHER


def url_path_ext(url: str, exts: tuple[str, ...]) -> Optional[str]:
    """The extension of the URL path (query and fragment ignored) when it is one of ``exts``."""
    _, _, path = split_url(url)
    path = path.split("?", 1)[0].split("#", 1)[0].lower().rstrip("/")
    for ext in sorted(exts, key=len, reverse=True):
        if path.endswith(ext):
            return ext
    return None


def find_urls(text: str) -> list[str]:
    out = [m.group(0) for m in URL_RE.finditer(text)]
    if not out and HOST_RE.match(text.strip()):
        out.append(text.strip())
    # a bare scheme survives when the rest of the literal was cut off
    if not out and re.fullmatch(r"(?i)\s*https?://\s*", text):
        out.append(text.strip())
    return out


def has_rare_tld(host: str, config: Optional[RuleConfig] = None) -> bool:
    cfg = config or default_rule_config()
    tld = host.rsplit(".", 1)[-1] if "." in host else ""
    return tld in cfg.rare_tlds


def is_trusted(host: str, config: Optional[RuleConfig] = None) -> bool:
    cfg = config or default_rule_config()
    return any(host_matches(host, "", p) for p in cfg.hosts.trusted)
