"""Statement-level annotation records: line-delimited storage and corpus statistics."""

from __future__ import annotations

import json
import posixpath
from collections import Counter
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import IO, Iterable, Optional, Sequence

from malind.corpus import PackageSource
from malind.rules.model import EVIDENCE_LIMIT, Finding
from malind.taxonomy import Category, Taxonomy, default_taxonomy

ANNOTATION_SUFFIX = ".mal.jsonl"
FIELDS = ("package_id", "rel_path", "line_start", "line_end", "indicator_id", "evidence", "source", "annotator_id")


class DataError(ValueError):
    """Malformed or inconsistent annotation data."""


class Source(str, Enum):
    TOOL = "Tool"
    HUMAN = "Human"


@dataclass(frozen=True)
class AnnotationRecord:
    package_id: str
    rel_path: str
    line_start: int
    line_end: int
    indicator_id: str
    evidence: str = ""
    source: Source = Source.TOOL
    annotator_id: Optional[str] = None

    @classmethod
    def from_finding(cls, f: Finding) -> "AnnotationRecord":
        return cls(f.package_id, f.rel_path, f.line_start, f.line_end, f.indicator_id, f.evidence[:EVIDENCE_LIMIT])

    def sort_key(self) -> tuple:
        return (self.package_id, self.rel_path, self.line_start, self.indicator_id, self.line_end,
                self.evidence, self.source.value, self.annotator_id or "")

    def lines(self) -> range:
        return range(self.line_start, self.line_end + 1)

    def to_json(self) -> str:
        doc = {
            "package_id": self.package_id,
            "rel_path": self.rel_path,
            "line_start": self.line_start,
            "line_end": self.line_end,
            "indicator_id": self.indicator_id,
            "evidence": self.evidence,
            "source": self.source.value,
            "annotator_id": self.annotator_id,
        }
        return json.dumps(doc, ensure_ascii=False)


def validate_record(rec: AnnotationRecord, taxonomy: Optional[Taxonomy] = None) -> None:
    taxonomy = taxonomy or default_taxonomy()
    if not rec.package_id:
        raise DataError("empty package_id")
    if not rec.rel_path:
        raise DataError("empty rel_path")
    if rec.indicator_id not in taxonomy:
        raise DataError(f"unknown indicator_id {rec.indicator_id!r}")
    if rec.line_start < 1 or rec.line_end < rec.line_start:
        raise DataError(f"bad line span {rec.line_start}-{rec.line_end}")
    if len(rec.evidence) > EVIDENCE_LIMIT:
        raise DataError(f"evidence longer than {EVIDENCE_LIMIT} characters")
    if rec.source is Source.TOOL and rec.annotator_id is not None:
        raise DataError("Tool records carry no annotator_id")


def sort_records(records: Iterable[AnnotationRecord]) -> list[AnnotationRecord]:
    return sorted(records, key=AnnotationRecord.sort_key)


def dumps_annotations(records: Iterable[AnnotationRecord]) -> str:
    recs = sort_records(records)
    for r in recs:
        validate_record(r)
    return "".join(r.to_json() + "\n" for r in recs)


def write_annotations(records: Iterable[AnnotationRecord], destination: str | Path | IO[str]) -> None:
    text = dumps_annotations(records)
    if hasattr(destination, "write"):
        destination.write(text)
        return
    Path(destination).write_text(text, encoding="utf-8", newline="\n")


def _int_field(doc: dict, name: str, lineno: int) -> int:
    v = doc[name]
    if isinstance(v, bool) or not isinstance(v, int):
        raise DataError(f"line {lineno}: {name} must be an integer")
    return v


def parse_record(line: str, lineno: int = 0, taxonomy: Optional[Taxonomy] = None) -> AnnotationRecord:
    try:
        doc = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DataError(f"line {lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(doc, dict):
        raise DataError(f"line {lineno}: expected an object")
    missing = [k for k in FIELDS if k not in doc]
    extra = sorted(set(doc) - set(FIELDS))
    if missing or extra:
        raise DataError(f"line {lineno}: missing fields {missing} / unexpected fields {extra}")
    for k in ("package_id", "rel_path", "indicator_id", "evidence", "source"):
        if not isinstance(doc[k], str):
            raise DataError(f"line {lineno}: {k} must be a string")
    if doc["annotator_id"] is not None and not isinstance(doc["annotator_id"], str):
        raise DataError(f"line {lineno}: annotator_id must be a string or null")
    try:
        source = Source(doc["source"])
    except ValueError:
        raise DataError(f"line {lineno}: unknown source {doc['source']!r}") from None
    rec = AnnotationRecord(
        doc["package_id"], doc["rel_path"], _int_field(doc, "line_start", lineno), _int_field(doc, "line_end", lineno),
        doc["indicator_id"], doc["evidence"], source, doc["annotator_id"],
    )
    try:
        validate_record(rec, taxonomy)
    except DataError as exc:
        raise DataError(f"line {lineno}: {exc}") from None
    return rec


def loads_annotations(text: str) -> list[AnnotationRecord]:
    taxonomy = default_taxonomy()
    out = []
    for lineno, line in enumerate(text.split("\n"), start=1):
        if line.strip():
            out.append(parse_record(line, lineno, taxonomy))
    return out


def read_annotations(source: str | Path | IO[str]) -> list[AnnotationRecord]:
    if hasattr(source, "read"):
        return loads_annotations(source.read())
    try:
        text = Path(source).read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {source}: {exc.strerror or exc}") from None
    except UnicodeDecodeError:
        raise DataError(f"{source} is not valid UTF-8") from None
    return loads_annotations(text)


# ---------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class DatasetStats:
    package_count: int = 0
    file_count: int = 0
    total_loc: int = 0
    malicious_loc: int = 0
    malicious_loc_fraction: float = 0.0
    indicator_count: int = 0
    mean_indicators_per_package: float = 0.0
    mean_malicious_files_per_package: float = 0.0
    mean_loc_per_indicator: float = 0.0
    per_filename_distribution: dict[str, tuple[int, float]] = field(default_factory=dict)
    per_category_counts: dict[str, int] = field(default_factory=dict)
    top_packages: list[tuple[str, int]] = field(default_factory=list)

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["per_filename_distribution"] = {
            k: {"count": c, "fraction": f} for k, (c, f) in self.per_filename_distribution.items()
        }
        doc["top_packages"] = [{"package_id": p, "indicator_count": n} for p, n in self.top_packages]
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def render_text(self) -> str:
        lines = [
            f"packages                      {self.package_count}",
            f"files                         {self.file_count}",
            f"lines of code                 {self.total_loc}",
            f"malicious lines               {self.malicious_loc} ({self.malicious_loc_fraction:.2%})",
            f"indicator occurrences         {self.indicator_count}",
            f"indicators per package        {self.mean_indicators_per_package:.2f}",
            f"malicious files per package   {self.mean_malicious_files_per_package:.2f}",
            f"LOC per indicator             {self.mean_loc_per_indicator:.2f}",
            "",
            "file name distribution:",
        ]
        for name, (count, frac) in self.per_filename_distribution.items():
            lines.append(f"  {name:<28}{count:>6}  {frac:.1%}")
        lines += ["", "category counts:"]
        for cat, count in self.per_category_counts.items():
            lines.append(f"  {cat:<28}{count:>6}")
        lines += ["", "top packages:"]
        for pkg, count in self.top_packages:
            lines.append(f"  {pkg:<28}{count:>6}")
        return "\n".join(lines) + "\n"


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def compute_stats(records: Sequence[AnnotationRecord], corpus: Sequence[PackageSource], top_n: int = 10) -> DatasetStats:
    """Corpus counters over the records; malicious lines are distinct (file, line) pairs."""
    known = {p.package_id for p in corpus}
    dangling = sorted({r.package_id for r in records} - known)
    if dangling:
        raise DataError(f"records reference packages missing from the corpus: {', '.join(dangling)}")
    taxonomy = default_taxonomy()

    package_count = len(corpus)
    file_count = sum(len(p.files) for p in corpus)
    total_loc = sum(f.line_count for p in corpus for f in p.files)
    lines = {(r.package_id, r.rel_path, ln) for r in records for ln in r.lines()}
    files = {(r.package_id, r.rel_path) for r in records}
    n = len(records)

    by_name = Counter(posixpath.basename(r.rel_path) for r in records)
    distribution = {
        name: (count, _ratio(count, n)) for name, count in sorted(by_name.items(), key=lambda kv: (-kv[1], kv[0]))
    }
    by_cat = Counter(taxonomy.lookup(r.indicator_id).category for r in records)
    categories = {c.value: by_cat[c] for c in Category if by_cat[c]}
    per_pkg = Counter(r.package_id for r in records)
    top = sorted(per_pkg.items(), key=lambda kv: (-kv[1], kv[0]))[:top_n]

    return DatasetStats(
        package_count=package_count,
        file_count=file_count,
        total_loc=total_loc,
        malicious_loc=len(lines),
        malicious_loc_fraction=_ratio(len(lines), total_loc),
        indicator_count=n,
        mean_indicators_per_package=_ratio(n, package_count),
        mean_malicious_files_per_package=_ratio(len(files), package_count),
        mean_loc_per_indicator=_ratio(sum(len(r.lines()) for r in records), n),
        per_filename_distribution=distribution,
        per_category_counts=categories,
        top_packages=top,
    )
