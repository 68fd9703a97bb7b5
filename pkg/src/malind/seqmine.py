"""Indicator sequences per package and contiguous 1/2-gram association rules.

Counting is by package presence: a pattern counts once for a package no
matter how often it repeats there, which keeps loops such as
``A, B, A, B`` from inflating any metric. All metrics are exact fractions.
"""

from __future__ import annotations

import csv
import io
import json
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Protocol, Sequence

from malind.corpus import PackageSource, execution_rank_key
from malind.dataset import AnnotationRecord, DataError
from malind.taxonomy import Taxonomy, UnknownIndicator, default_taxonomy

TABLE_COLUMNS = ("antecedent", "consequent", "pair_presence", "support", "confidence", "lift")


class MiningError(DataError):
    """Inconsistent input to the miner."""


@dataclass(frozen=True)
class PackageSequence:
    package_id: str
    events: tuple[str, ...] = ()


@dataclass(frozen=True)
class NgramCounts:
    n_packages: int
    unigrams: Mapping[str, int] = field(default_factory=dict)
    bigrams: Mapping[tuple[str, str], int] = field(default_factory=dict)


@dataclass(frozen=True)
class AssociationRule:
    antecedent: str
    consequent: str
    pair_presence: int
    a_presence: int
    b_presence: int
    n_packages: int

    @property
    def support(self) -> Fraction:
        return Fraction(self.pair_presence, self.n_packages)

    @property
    def confidence(self) -> Fraction:
        return Fraction(self.pair_presence, self.a_presence)

    @property
    def lift(self) -> Fraction:
        return Fraction(self.pair_presence * self.n_packages, self.a_presence * self.b_presence)


class RuleLike(Protocol):
    antecedent: str
    consequent: str
    pair_presence: int

    @property
    def support(self): ...

    @property
    def confidence(self): ...

    @property
    def lift(self): ...


@dataclass(frozen=True)
class TableRule:
    """A row read back from a rule table; metrics are the rounded values."""

    antecedent: str
    consequent: str
    pair_presence: int
    support: float
    confidence: float
    lift: float


# ---------------------------------------------------------------------------
# sequences


def build_sequence(
    records: Iterable[AnnotationRecord],
    ranks: Optional[Mapping[str, int]] = None,
    package_id: Optional[str] = None,
) -> PackageSequence:
    """Order one package's records by (file rank, line, indicator id).

    Without ``ranks`` the execution-flow tier order of the file paths is used,
    which yields the same relative order as the ranks assigned at discovery.
    """
    recs = list(records)
    pkg = package_id if package_id is not None else (recs[0].package_id if recs else "")

    def key(r: AnnotationRecord):
        if ranks is None:
            return (execution_rank_key(r.rel_path), r.line_start, r.indicator_id)
        if r.rel_path not in ranks:
            raise MiningError(f"{r.package_id}: record in unranked file {r.rel_path}")
        return (ranks[r.rel_path], r.line_start, r.indicator_id)

    return PackageSequence(pkg, tuple(r.indicator_id for r in sorted(recs, key=key)))


def build_sequences(
    records: Iterable[AnnotationRecord], corpus: Optional[Sequence[PackageSource]] = None
) -> list[PackageSequence]:
    """One sequence per package, sorted by package id.

    With a corpus, every corpus package is included (possibly empty) and
    files are ordered by their ranks; otherwise only annotated packages appear.
    """
    by_pkg: dict[str, list[AnnotationRecord]] = defaultdict(list)
    for r in records:
        by_pkg[r.package_id].append(r)
    if corpus is None:
        return [build_sequence(by_pkg[p], None, p) for p in sorted(by_pkg)]
    known = {p.package_id: p for p in corpus}
    dangling = sorted(set(by_pkg) - set(known))
    if dangling:
        raise MiningError(f"records reference packages missing from the corpus: {', '.join(dangling)}")
    out = []
    for pid in sorted(known):
        ranks = {f.rel_path: f.rank for f in known[pid].files}
        out.append(build_sequence(by_pkg.get(pid, ()), ranks, pid))
    return out


# ---------------------------------------------------------------------------
# mining


def mine_ngrams(sequences: Sequence[PackageSequence], min_support: int = 2) -> NgramCounts:
    if min_support < 1:
        raise ValueError("min_support must be at least 1")
    uni: Counter[str] = Counter()
    bi: Counter[tuple[str, str]] = Counter()
    for seq in sequences:
        uni.update(set(seq.events))
        bi.update(set(zip(seq.events, seq.events[1:])))
    kept = {pair: n for pair, n in bi.items() if n >= min_support}
    return NgramCounts(len(sequences), dict(sorted(uni.items())), dict(sorted(kept.items())))


def score_rules(counts: NgramCounts, n_packages: Optional[int] = None) -> list[AssociationRule]:
    n = counts.n_packages if n_packages is None else n_packages
    if n < 1:
        raise ValueError("n_packages must be at least 1")
    rules = []
    for (a, b), pair in sorted(counts.bigrams.items()):
        pa, pb = counts.unigrams.get(a, 0), counts.unigrams.get(b, 0)
        if pa == 0 or pb == 0:
            raise MiningError(f"bigram {a}->{b} has no unigram presence")
        rules.append(AssociationRule(a, b, pair, pa, pb, n))
    return rules


def rank_key(rule: RuleLike):
    return (-rule.lift, -rule.confidence, rule.antecedent, rule.consequent)


def rank_rules(rules: Iterable[RuleLike], lift_floor: float = 1.0, top_k: Optional[int] = None) -> list:
    """Rules with lift strictly above the floor, by lift, confidence, then ids."""
    kept = sorted((r for r in rules if r.lift > lift_floor), key=rank_key)
    if top_k is not None:
        kept = kept[: max(0, top_k)]
    return kept


def mine(
    sequences: Sequence[PackageSequence],
    min_support: int = 2,
    lift_floor: float = 1.0,
    top_k: Optional[int] = None,
) -> list[AssociationRule]:
    counts = mine_ngrams(sequences, min_support)
    if counts.n_packages == 0:
        return []
    return rank_rules(score_rules(counts), lift_floor, top_k)


# ---------------------------------------------------------------------------
# exports


def _fmt(x) -> str:
    return f"{float(x):.6f}"


def rule_table(rules: Iterable[RuleLike]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, delimiter="\t", lineterminator="\n")
    w.writerow(TABLE_COLUMNS)
    for r in rules:
        w.writerow([r.antecedent, r.consequent, r.pair_presence, _fmt(r.support), _fmt(r.confidence), _fmt(r.lift)])
    return buf.getvalue()


def read_rule_table(text: str) -> list[TableRule]:
    rows = list(csv.reader(io.StringIO(text), delimiter="\t"))
    if not rows or tuple(rows[0]) != TABLE_COLUMNS:
        raise DataError(f"rule table must start with the header {' '.join(TABLE_COLUMNS)}")
    out = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(TABLE_COLUMNS):
            raise DataError(f"rule table line {lineno}: expected {len(TABLE_COLUMNS)} columns")
        try:
            out.append(TableRule(row[0], row[1], int(row[2]), float(row[3]), float(row[4]), float(row[5])))
        except ValueError:
            raise DataError(f"rule table line {lineno}: bad number") from None
    return out


@dataclass(frozen=True)
class GraphDoc:
    nodes: tuple[tuple[str, str], ...] = ()  # (indicator id, category)
    edges: tuple[tuple[str, str, str, str, str], ...] = ()  # (a, b, support, confidence, lift)

    def to_json(self) -> str:
        doc = {
            "nodes": [{"id": n, "category": c} for n, c in self.nodes],
            "edges": [
                {"source": a, "target": b, "support": float(s), "confidence": float(c), "lift": float(l)}
                for a, b, s, c, l in self.edges
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    def to_dot(self) -> str:
        lines = ["digraph indicators {", "  rankdir=LR;", "  node [shape=box];"]
        for n, c in self.nodes:
            lines.append(f'  "{n}" [label="{n}\\n{c}", category="{c}"];')
        for a, b, s, c, l in self.edges:
            lines.append(f'  "{a}" -> "{b}" [label="lift {l}", support="{s}", confidence="{c}", lift="{l}"];')
        lines.append("}")
        return "\n".join(lines) + "\n"


def export_graph(rules: Sequence[RuleLike], k: int, taxonomy: Optional[Taxonomy] = None) -> GraphDoc:
    """Directed graph of the first ``k`` (already ranked) rules."""
    if k <= 0:
        return GraphDoc()
    taxonomy = taxonomy or default_taxonomy()
    top = list(rules)[:k]
    ids = sorted({r.antecedent for r in top} | {r.consequent for r in top})
    nodes = []
    for i in ids:
        try:
            nodes.append((i, taxonomy.lookup(i).category.value))
        except UnknownIndicator:
            nodes.append((i, "Unknown"))
    edges = tuple((r.antecedent, r.consequent, _fmt(r.support), _fmt(r.confidence), _fmt(r.lift)) for r in top)
    return GraphDoc(tuple(nodes), edges)
