"""Command-line front end.

Every flag can also be set through an environment variable named
``MALIND_<FLAG>`` (``--min-support`` -> ``MALIND_MIN_SUPPORT``); a flag given
on the command line wins. Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from malind.corpus import CorpusError, discover_packages
from malind.dataset import AnnotationRecord, DataError, compute_stats, read_annotations, write_annotations
from malind.kappa import pooled_kappa
from malind.rules.config import ConfigError, load_rule_config
from malind.rules.engine import scan_corpus
from malind.seqmine import build_sequences, export_graph, mine, read_rule_table, rule_table
from malind.taxonomy import render_catalog

ENV_PREFIX = "MALIND_"
EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
ANNOTATIONS_NAME = "annotations.mal.jsonl"
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

logger = logging.getLogger("malind")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits with 2 by default
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


@dataclass(frozen=True)
class RunConfig:
    corpus_root: Optional[Path] = None
    rules_config: Optional[Path] = None
    output_dir: Optional[Path] = None
    min_support: int = 2
    lift_floor: float = 1.0
    top_k: int = 0
    jobs: int = 1
    log_level: str = "WARNING"
    output_format: str = "text"

    def validate(self) -> None:
        if self.min_support < 1:
            raise UsageError("--min-support must be at least 1")
        if self.top_k < 0:
            raise UsageError("--top-k must be non-negative")
        if self.jobs < 1:
            raise UsageError("--jobs must be at least 1")


def _env(name: str, default):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"), default)


def _common(p: argparse.ArgumentParser, *flags: str) -> None:
    if "corpus" in flags:
        p.add_argument("--corpus", type=Path, default=_env("corpus", None), help="corpus root (one directory per package)")
    if "rules" in flags:
        p.add_argument("--rules", type=Path, default=_env("rules", None), help="rule configuration YAML")
    if "out" in flags:
        p.add_argument("--out", type=Path, default=_env("out", None), help="output directory")
    if "mining" in flags:
        p.add_argument("--min-support", type=int, default=_env("min-support", 2))
        p.add_argument("--lift-floor", type=float, default=_env("lift-floor", 1.0))
        p.add_argument("--top-k", type=int, default=_env("top-k", 0), help="keep the k best rules (0 keeps all)")
    if "jobs" in flags:
        p.add_argument("--jobs", type=int, default=_env("jobs", 1))
    p.add_argument("--log-level", type=str.upper, choices=LOG_LEVELS, default=_env("log-level", "WARNING"))
    p.add_argument("--format", dest="output_format", choices=("text", "machine"), default=_env("format", "text"))


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="malind", description="Statement-level malicious indicator scanner and sequence miner.")
    sub = ap.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("scan", help="scan a corpus and write annotations and reports")
    _common(p, "corpus", "rules", "out", "jobs")

    p = sub.add_parser("mine", help="mine association rules from an annotation file")
    p.add_argument("annotations", type=Path)
    _common(p, "corpus", "out", "mining")
    p.add_argument("--graph", action="store_true", help="also write the rule graph")
    p.add_argument("--graph-k", type=int, default=_env("graph-k", 25))

    p = sub.add_parser("stats", help="dataset statistics for an annotation file")
    p.add_argument("annotations", type=Path)
    _common(p, "corpus", "out")

    p = sub.add_parser("kappa", help="pooled Cohen's kappa between two annotation files")
    p.add_argument("first", type=Path)
    p.add_argument("second", type=Path)
    _common(p, "corpus", "out")

    p = sub.add_parser("graph", help="graph files from an existing rule table")
    p.add_argument("table", type=Path)
    _common(p, "out")
    p.add_argument("--top-k", type=int, default=_env("top-k", 25))

    p = sub.add_parser("catalog", help="print the indicator reference")
    _common(p, "out")
    return ap


def _run_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig(
        corpus_root=getattr(args, "corpus", None),
        rules_config=getattr(args, "rules", None),
        output_dir=getattr(args, "out", None),
        min_support=getattr(args, "min_support", 2),
        lift_floor=getattr(args, "lift_floor", 1.0),
        top_k=getattr(args, "top_k", 0),
        jobs=getattr(args, "jobs", 1),
        log_level=args.log_level,
        output_format=args.output_format,
    )
    cfg.validate()
    return cfg


def _require(value, flag: str):
    if value is None:
        raise UsageError(f"{flag} is required (or set {ENV_PREFIX}{flag.lstrip('-').upper().replace('-', '_')})")
    return value


def _write(out_dir: Optional[Path], name: str, text: str) -> Optional[Path]:
    if out_dir is None:
        return None
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(text, encoding="utf-8", newline="\n")
    logger.info("wrote %s", path)
    return path


def _emit(cfg: RunConfig, text: str, machine: dict) -> None:
    if cfg.output_format == "machine":
        sys.stdout.write(json.dumps(machine, indent=2) + "\n")
    else:
        sys.stdout.write(text)


def _corpus(cfg: RunConfig, required: bool = True):
    if cfg.corpus_root is None:
        if required:
            _require(None, "--corpus")
        return None
    if not cfg.corpus_root.is_dir():
        raise DataError(f"corpus root {cfg.corpus_root} is not a directory")
    return discover_packages(cfg.corpus_root)


def cmd_scan(cfg: RunConfig) -> int:
    out = _require(cfg.output_dir, "--out")
    rules = load_rule_config(cfg.rules_config)
    packages = discover_packages(_require(cfg.corpus_root, "--corpus"), rules.thresholds.max_file_bytes)
    logger.info("scanning %d packages with %d job(s)", len(packages), cfg.jobs)
    reports = scan_corpus(packages, rules, cfg.jobs)
    for rep in reports:
        for w in rep.warnings:
            logger.warning(w)
    records = [AnnotationRecord.from_finding(f) for rep in reports for f in rep.findings]
    out.mkdir(parents=True, exist_ok=True)
    write_annotations(records, out / ANNOTATIONS_NAME)
    _write(out, "reports.json", json.dumps([r.to_dict() for r in reports], indent=2, ensure_ascii=False) + "\n")
    summary = {
        "packages": len(reports),
        "files_scanned": sum(r.files_scanned for r in reports),
        "lines_scanned": sum(r.lines_scanned for r in reports),
        "malicious_lines": sum(r.malicious_lines for r in reports),
        "findings": len(records),
        "annotations": str(out / ANNOTATIONS_NAME),
    }
    text = "".join(f"{k:<16}{v}\n" for k, v in summary.items())
    _emit(cfg, text, summary)
    return EXIT_OK


def cmd_mine(cfg: RunConfig, args: argparse.Namespace) -> int:
    records = read_annotations(args.annotations)
    corpus = _corpus(cfg, required=False)
    sequences = build_sequences(records, corpus)
    rules = mine(sequences, cfg.min_support, cfg.lift_floor, cfg.top_k or None)
    table = rule_table(rules)
    _write(cfg.output_dir, "rules.tsv", table)
    if args.graph:
        graph = export_graph(rules, args.graph_k)
        _write(cfg.output_dir, "graph.dot", graph.to_dot())
        _write(cfg.output_dir, "graph.json", graph.to_json())
    machine = {
        "packages": len(sequences),
        "rules": [
            {"antecedent": r.antecedent, "consequent": r.consequent, "pair_presence": r.pair_presence,
             "support": float(r.support), "confidence": float(r.confidence), "lift": float(r.lift)}
            for r in rules
        ],
    }
    _emit(cfg, table, machine)
    return EXIT_OK


def cmd_stats(cfg: RunConfig, args: argparse.Namespace) -> int:
    records = read_annotations(args.annotations)
    stats = compute_stats(records, _corpus(cfg))
    _write(cfg.output_dir, "stats.txt", stats.render_text())
    _write(cfg.output_dir, "stats.json", stats.to_json())
    _emit(cfg, stats.render_text(), stats.to_dict())
    return EXIT_OK


def cmd_kappa(cfg: RunConfig, args: argparse.Namespace) -> int:
    a = read_annotations(args.first)
    b = read_annotations(args.second)
    result = pooled_kappa(a, b, _corpus(cfg))
    _write(cfg.output_dir, "kappa.json", json.dumps(result.to_dict(), indent=2) + "\n")
    _emit(cfg, result.render_text(), result.to_dict())
    return EXIT_OK


def cmd_graph(cfg: RunConfig, args: argparse.Namespace) -> int:
    try:
        text = args.table.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {args.table}: {exc.strerror or exc}") from None
    graph = export_graph(read_rule_table(text), args.top_k)
    _write(cfg.output_dir, "graph.dot", graph.to_dot())
    _write(cfg.output_dir, "graph.json", graph.to_json())
    _emit(cfg, graph.to_dot(), json.loads(graph.to_json()))
    return EXIT_OK


def cmd_catalog(cfg: RunConfig) -> int:
    text = render_catalog()
    _write(cfg.output_dir, "CATALOG.md", text)
    sys.stdout.write(text)
    return EXIT_OK


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _run_config(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE

    logging.basicConfig(
        level=getattr(logging, cfg.log_level),
        stream=sys.stderr,
        format="level=%(levelname)s logger=%(name)s msg=%(message)s",
        force=True,
    )
    try:
        if args.command == "scan":
            return cmd_scan(cfg)
        if args.command == "mine":
            return cmd_mine(cfg, args)
        if args.command == "stats":
            return cmd_stats(cfg, args)
        if args.command == "kappa":
            return cmd_kappa(cfg, args)
        if args.command == "graph":
            return cmd_graph(cfg, args)
        return cmd_catalog(cfg)
    except UsageError as exc:
        print(f"malind: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, CorpusError, ConfigError, OSError) as exc:
        logger.error("%s", exc)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())
