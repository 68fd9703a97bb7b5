"""Run the detectors over files, packages and whole corpora."""

from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, Optional, Sequence

from malind.corpus import PackageSource, SourceFile
from malind.rules.config import RuleConfig, default_rule_config
from malind.rules.detectors import (
    MANIFEST_RULES,
    STATEMENT_RULES,
    def_006_handlers,
    description_anomaly,
)
from malind.rules.model import Confidence, Finding, Hit, PackageReport
from malind.rules.semantics import FileContext, PackageContext
from malind.syntax import EventKind, ParseOutcome, SetupManifest, parse_source, split_excerpt

logger = logging.getLogger(__name__)

# categories whose findings make a decoy description suspicious
BEHAVIOUR_PREFIXES = ("EXS-", "EXM-", "EXF-", "SYS-", "NET-")


@dataclass(frozen=True)
class ParsedFile:
    file: SourceFile
    outcome: ParseOutcome


def _merge_hits(hits: Iterable[Hit]) -> list[Hit]:
    """One hit per (span, indicator); Strong wins over Heuristic."""
    best: dict[tuple[int, int, str], Hit] = {}
    for h in hits:
        key = (h.line_start, h.line_end, h.indicator_id)
        cur = best.get(key)
        if cur is None or (cur.confidence is Confidence.HEURISTIC and h.confidence is Confidence.STRONG):
            best[key] = h
    return sorted(best.values(), key=lambda h: (h.line_start, h.indicator_id, h.line_end))


def _to_finding(package_id: str, rel_path: str, h: Hit) -> Finding:
    return Finding(package_id, rel_path, h.line_start, h.line_end, h.indicator_id, h.evidence, h.confidence)


def file_hits(ctx: FileContext) -> list[Hit]:
    hits: list[Hit] = []
    for rule in STATEMENT_RULES.values():
        hits.extend(rule(ctx))
    covered = {line for h in hits for line in range(h.line_start, h.line_end + 1)}
    hits.extend(def_006_handlers(ctx, covered))
    return _merge_hits(hits)


def scan_file(
    outcome: ParseOutcome,
    file: SourceFile,
    context: Optional[PackageContext] = None,
    config: Optional[RuleConfig] = None,
) -> list[Finding]:
    """Statement-scope findings for one parsed file."""
    config = config or default_rule_config()
    context = context or package_context([ParsedFile(file, outcome)])
    ctx = FileContext(outcome, file.rel_path, config, context)
    return [_to_finding(context.package_id, file.rel_path, h) for h in file_hits(ctx)]


def _imported_modules(outcome: ParseOutcome) -> set[str]:
    out = set()
    for e in outcome.events:
        if e.kind is EventKind.IMPORT and e.name and not e.name.startswith("."):
            out.add(e.name.split(".")[0])
        elif e.kind is EventKind.CALL and (e.callee_path or "").split(".")[-1] in ("__import__", "import_module"):
            if e.args and e.args[0].is_text:
                out.add(e.args[0].value.split(".")[0])
    for target in outcome.aliases.values():
        if not target.startswith("."):
            out.add(target.split(".")[0])
    return out


def package_context(parsed: Sequence[ParsedFile], package_id: str = "") -> PackageContext:
    hooks: set[str] = set()
    imported: set[str] = set()
    for p in parsed:
        m = p.outcome.manifest
        if m is not None and m.present:
            hooks.update(cls.split(".")[-1] for _, cls in m.cmdclass_hooks)
        imported |= _imported_modules(p.outcome)
    return PackageContext(package_id=package_id, hook_classes=frozenset(hooks), imported=frozenset(imported))


def _root_manifest(parsed: Sequence[ParsedFile]) -> Optional[ParsedFile]:
    for p in parsed:
        if p.file.rel_path == "setup.py" and p.outcome.manifest is not None and p.outcome.manifest.present:
            return p
    return None


def _met_005(ctx: FileContext, m: SetupManifest, findings: Sequence[Finding]) -> list[Hit]:
    if m.description is None or description_anomaly(m.description, False, ctx):
        return []
    if not any(f.indicator_id.startswith(BEHAVIOUR_PREFIXES) for f in findings):
        return []
    evidence = " ".join(m.excerpts.get("description", "").split())[:200] or split_excerpt(ctx.lines, m.line_start, m.line_end)
    return [Hit("MET-005", m.line_start, m.line_end, evidence, Confidence.HEURISTIC)]


def parse_package(package: PackageSource) -> tuple[list[ParsedFile], list[str]]:
    parsed: list[ParsedFile] = []
    warnings: list[str] = list(package.warnings)
    for f in package.files:
        try:
            text = package.read_text(f.rel_path)
        except OSError as exc:
            msg = f"{package.package_id}: skipped unreadable file {f.rel_path}: {exc.strerror or exc}"
            logger.warning(msg)
            warnings.append(msg)
            continue
        parsed.append(ParsedFile(f, parse_source(text, f.rel_path)))
    return parsed, warnings


def scan_parsed(package_id: str, parsed: Sequence[ParsedFile], config: Optional[RuleConfig] = None,
                warnings: Sequence[str] = ()) -> PackageReport:
    config = config or default_rule_config()
    pctx = package_context(parsed, package_id)
    findings: list[Finding] = []
    contexts: dict[str, FileContext] = {}
    for p in parsed:
        ctx = FileContext(p.outcome, p.file.rel_path, config, pctx)
        contexts[p.file.rel_path] = ctx
        findings.extend(_to_finding(package_id, p.file.rel_path, h) for h in file_hits(ctx))

    root = _root_manifest(parsed)
    if root is not None:
        ctx = contexts[root.file.rel_path]
        m = root.outcome.manifest
        hits: list[Hit] = []
        for rule in MANIFEST_RULES.values():
            hits.extend(rule(ctx, m))
        hits.extend(_met_005(ctx, m, findings))
        findings.extend(_to_finding(package_id, root.file.rel_path, h) for h in _merge_hits(hits))

    rank = {p.file.rel_path: p.file.rank for p in parsed}
    findings.sort(key=lambda f: (rank[f.rel_path], f.rel_path, f.line_start, f.indicator_id, f.line_end, f.evidence))
    covered = {(f.rel_path, line) for f in findings for line in range(f.line_start, f.line_end + 1)}
    return PackageReport(
        package_id=package_id,
        findings=tuple(findings),
        files_scanned=len(parsed),
        lines_scanned=sum(p.outcome.line_count for p in parsed),
        malicious_lines=len(covered),
        warnings=tuple(warnings),
    )


def scan_package(package: PackageSource, config: Optional[RuleConfig] = None) -> PackageReport:
    parsed, warnings = parse_package(package)
    # the parsed line count is authoritative for the counters
    parsed = [replace(p, file=replace(p.file, line_count=p.outcome.line_count)) for p in parsed]
    return scan_parsed(package.package_id, parsed, config, warnings)


def _scan_one(args: tuple[PackageSource, RuleConfig]) -> PackageReport:
    return scan_package(*args)


def scan_corpus(packages: Sequence[PackageSource], config: Optional[RuleConfig] = None, jobs: int = 1) -> list[PackageReport]:
    """Reports in package order; ``jobs > 1`` scans packages in worker processes."""
    config = config or default_rule_config()
    if jobs <= 1 or len(packages) <= 1:
        return [scan_package(p, config) for p in packages]
    chunk = max(1, len(packages) // (jobs * 4))
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_scan_one, [(p, config) for p in packages], chunksize=chunk))
