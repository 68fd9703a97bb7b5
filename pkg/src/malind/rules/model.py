"""Finding and report types produced by the rule engine."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

EVIDENCE_LIMIT = 200


class Confidence(str, Enum):
    STRONG = "Strong"
    HEURISTIC = "Heuristic"


@dataclass(frozen=True)
class Hit:
    """A rule match inside one file, before package and path are attached."""

    indicator_id: str
    line_start: int
    line_end: int
    evidence: str
    confidence: Confidence = Confidence.STRONG


@dataclass(frozen=True)
class Finding:
    package_id: str
    rel_path: str
    line_start: int
    line_end: int
    indicator_id: str
    evidence: str
    confidence: Confidence = Confidence.STRONG


@dataclass(frozen=True)
class PackageReport:
    package_id: str
    findings: tuple[Finding, ...] = ()
    files_scanned: int = 0
    lines_scanned: int = 0
    malicious_lines: int = 0
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def indicator_ids(self) -> set[str]:
        return {f.indicator_id for f in self.findings}

    def to_dict(self) -> dict:
        return {
            "package_id": self.package_id,
            "files_scanned": self.files_scanned,
            "lines_scanned": self.lines_scanned,
            "malicious_lines": self.malicious_lines,
            "findings": [
                {
                    "rel_path": f.rel_path,
                    "line_start": f.line_start,
                    "line_end": f.line_end,
                    "indicator_id": f.indicator_id,
                    "confidence": f.confidence.value,
                    "evidence": f.evidence,
                }
                for f in self.findings
            ],
            "warnings": list(self.warnings),
        }
