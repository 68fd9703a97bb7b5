"""Registry of the 47 malicious indicators and their 7 categories.

The registry is loaded once from ``data/taxonomy.yaml``. Detection code only
uses ``id``, ``category`` and ``scope``; ``paper_count`` is reference metadata.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path

import yaml

ID_PATTERN = re.compile(r"^(EXS|EXM|EXF|SYS|NET|DEF|MET)-\d{3}$")


class Category(str, Enum):
    EXECUTION_STAGE = "ExecutionStage"
    EXECUTION_MECHANISM = "ExecutionMechanism"
    EXFILTRATION = "Exfiltration"
    SYSTEM_IMPACT = "SystemImpact"
    NETWORK_OPERATIONS = "NetworkOperations"
    DEFENSE_EVASION = "DefenseEvasion"
    METADATA_MANIPULATION = "MetadataManipulation"

    @property
    def code(self) -> str:
        return _CATEGORY_CODES[self]


_CATEGORY_CODES = {
    Category.EXECUTION_STAGE: "EXS",
    Category.EXECUTION_MECHANISM: "EXM",
    Category.EXFILTRATION: "EXF",
    Category.SYSTEM_IMPACT: "SYS",
    Category.NETWORK_OPERATIONS: "NET",
    Category.DEFENSE_EVASION: "DEF",
    Category.METADATA_MANIPULATION: "MET",
}
_CODE_TO_CATEGORY = {code: cat for cat, code in _CATEGORY_CODES.items()}


class Scope(str, Enum):
    STATEMENT = "Statement"
    MANIFEST = "Manifest"
    PACKAGE_LEVEL = "PackageLevel"


class UnknownIndicator(KeyError):
    """Raised when an indicator ID is not in the registry."""


@dataclass(frozen=True)
class IndicatorDef:
    id: str
    name: str
    category: Category
    paper_count: int
    scope: Scope
    rule: str = ""


@dataclass(frozen=True)
class Taxonomy:
    version: int
    titles: dict[Category, str]
    indicators: tuple[IndicatorDef, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_by_id", {d.id: d for d in self.indicators})

    def lookup(self, indicator_id: str) -> IndicatorDef:
        try:
            return self._by_id[indicator_id]  # type: ignore[attr-defined]
        except KeyError:
            raise UnknownIndicator(indicator_id) from None

    def __contains__(self, indicator_id: object) -> bool:
        return indicator_id in self._by_id  # type: ignore[attr-defined]

    def select(self, category: Category | None = None) -> list[IndicatorDef]:
        defs = [d for d in self.indicators if category is None or d.category is category]
        return sorted(defs, key=lambda d: d.id)

    def category_totals(self) -> dict[Category, int]:
        totals = {cat: 0 for cat in Category}
        for d in self.indicators:
            totals[d.category] += d.paper_count
        return totals


def load_taxonomy(path: str | Path | None = None) -> Taxonomy:
    if path is None:
        text = resources.files("malind.data").joinpath("taxonomy.yaml").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    doc = yaml.safe_load(text)

    titles = {}
    for entry in doc["categories"]:
        cat = Category(entry["key"])
        if cat.code != entry["code"]:
            raise ValueError(f"category {entry['key']} has code {entry['code']}, expected {cat.code}")
        titles[cat] = entry["title"]

    defs = []
    seen = set()
    for rec in doc["indicators"]:
        ind_id = rec["id"]
        if not ID_PATTERN.match(ind_id):
            raise ValueError(f"malformed indicator id {ind_id!r}")
        if ind_id in seen:
            raise ValueError(f"duplicate indicator id {ind_id}")
        seen.add(ind_id)
        defs.append(
            IndicatorDef(
                id=ind_id,
                name=rec["name"],
                category=_CODE_TO_CATEGORY[ind_id[:3]],
                paper_count=int(rec["paper_count"]),
                scope=Scope(rec["scope"]),
                rule=rec.get("rule", ""),
            )
        )
    return Taxonomy(version=int(doc["version"]), titles=titles, indicators=tuple(defs))


@lru_cache(maxsize=1)
def default_taxonomy() -> Taxonomy:
    return load_taxonomy()


def lookup_indicator(indicator_id: str) -> IndicatorDef:
    return default_taxonomy().lookup(indicator_id)


def list_indicators(category: Category | None = None) -> list[IndicatorDef]:
    return default_taxonomy().select(category)


def category_of(indicator_id: str) -> Category:
    return _CODE_TO_CATEGORY[indicator_id[:3]]


def render_catalog(taxonomy: Taxonomy | None = None) -> str:
    """Markdown reference document for the registry."""
    tax = taxonomy or default_taxonomy()
    total = sum(d.paper_count for d in tax.indicators)
    out = [
        "# Malicious indicator catalog",
        "",
        f"Registry version {tax.version}: {len(tax.indicators)} indicators in "
        f"{len(tax.titles)} categories, {total} reference occurrences.",
        "",
    ]
    totals = tax.category_totals()
    for cat in Category:
        out.append(f"## {tax.titles[cat]} ({cat.code}), {totals[cat]} reference occurrences")
        out.append("")
        out.append("| ID | Name | Scope | Ref. count | Trigger |")
        out.append("|----|------|-------|-----------:|---------|")
        for d in tax.select(cat):
            out.append(f"| {d.id} | {d.name} | {d.scope.value} | {d.paper_count} | {d.rule} |")
        out.append("")
    return "\n".join(out)
