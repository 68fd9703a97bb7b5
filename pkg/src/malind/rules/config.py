"""Rule configuration: thresholds and the host/name lists every rule reads."""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml


class ConfigError(ValueError):
    """The rule configuration file is malformed."""


@dataclass(frozen=True)
class Thresholds:
    randomness: float = 0.8
    randomness_min_letters: int = 6
    description_min_chars: int = 10
    duplicate_token_ratio: float = 0.5
    typo_max_distance: int = 2
    typo_min_popular_len: int = 5
    art_window_lines: int = 10
    art_min_lines: int = 5
    art_min_symbol_ratio: float = 0.6
    base64_min_chars: int = 120
    underscore_names_min: int = 5
    chr_chain_min: int = 3
    int_list_min: int = 4
    max_file_bytes: int = 5 * 1024 * 1024


@dataclass(frozen=True)
class HostLists:
    webhook_api: tuple[str, ...] = ()
    geolocation_api: tuple[str, ...] = ()
    mining_pool: tuple[str, ...] = ()
    suspicious_listed: tuple[str, ...] = ()
    paste_or_cdn: tuple[str, ...] = ()
    trusted: tuple[str, ...] = ()


@dataclass(frozen=True)
class RuleConfig:
    version: int = 1
    thresholds: Thresholds = field(default_factory=Thresholds)
    hosts: HostLists = field(default_factory=HostLists)
    rare_tlds: frozenset[str] = frozenset()
    placeholders: frozenset[str] = frozenset()
    suspicious_dependencies: frozenset[str] = frozenset()
    dist_modules: Mapping[str, str] = field(default_factory=dict)
    build_only_dependencies: frozenset[str] = frozenset()
    popular_packages: tuple[str, ...] = ()
    common_bigrams: frozenset[str] = frozenset()


def _read_word_list(name: str, base: Optional[Path]) -> list[str]:
    if base is not None and (base / name).is_file():
        text = (base / name).read_text("utf-8")
    elif Path(name).is_absolute():
        text = Path(name).read_text("utf-8")
    else:
        text = resources.files("malind.data").joinpath(name).read_text("utf-8")
    words = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        words.extend(line.split())
    return words


def _merge(base: dict[str, Any], override: Mapping[str, Any]) -> dict[str, Any]:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(out.get(key), Mapping):
            out[key] = {**out[key], **value}
        else:
            out[key] = value
    return out


def _build(doc: Mapping[str, Any], base_dir: Optional[Path]) -> RuleConfig:
    try:
        thr_doc = doc.get("thresholds") or {}
        known = {f.name for f in fields(Thresholds)}
        unknown = set(thr_doc) - known
        if unknown:
            raise ConfigError(f"unknown threshold(s): {', '.join(sorted(unknown))}")
        thresholds = Thresholds(**thr_doc)
        if not 0.0 <= thresholds.randomness <= 1.0:
            raise ConfigError("thresholds.randomness must lie in [0, 1]")
        host_doc = doc.get("hosts") or {}
        hosts = HostLists(**{k: tuple(str(h).lower() for h in v or ()) for k, v in host_doc.items()})
        return RuleConfig(
            version=int(doc.get("version", 1)),
            thresholds=thresholds,
            hosts=hosts,
            rare_tlds=frozenset(str(t).lower().lstrip(".") for t in doc.get("rare_tlds") or ()),
            placeholders=frozenset(str(p).lower() for p in doc.get("placeholders") or ()),
            suspicious_dependencies=frozenset(str(d).lower() for d in doc.get("suspicious_dependencies") or ()),
            dist_modules={str(k).lower(): str(v) for k, v in (doc.get("dist_modules") or {}).items()},
            build_only_dependencies=frozenset(str(d).lower() for d in doc.get("build_only_dependencies") or ()),
            popular_packages=tuple(w.lower() for w in _read_word_list(doc["popular_packages"], base_dir)),
            common_bigrams=frozenset(w.lower() for w in _read_word_list(doc["common_bigrams"], base_dir)),
        )
    except (TypeError, KeyError) as exc:
        raise ConfigError(f"invalid rule configuration: {exc}") from exc


def _default_doc() -> dict[str, Any]:
    return yaml.safe_load(resources.files("malind.data").joinpath("rules.yaml").read_text("utf-8"))


def load_rule_config(path: str | Path | None = None) -> RuleConfig:
    """Shipped defaults, optionally overridden section by section from ``path``."""
    doc = _default_doc()
    base_dir = None
    if path is not None:
        path = Path(path)
        try:
            override = yaml.safe_load(path.read_text("utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read rule configuration {path}: {exc}") from exc
        if not isinstance(override, Mapping):
            raise ConfigError(f"rule configuration {path} is not a mapping")
        doc = _merge(doc, override)
        base_dir = path.parent
    return _build(doc, base_dir)


_DEFAULT: Optional[RuleConfig] = None


def default_rule_config() -> RuleConfig:
    global _DEFAULT
    if _DEFAULT is None:
        _DEFAULT = load_rule_config()
    return _DEFAULT
