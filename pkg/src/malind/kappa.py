"""Pooled Cohen's kappa between two annotation sets.

Items are (package, file, line) triples. Every annotator gives each item a
set of labels: the indicator IDs whose spans cover the line, or ``none``.
For each class that either annotator used, a 2x2 table of yes/no decisions
over all items is built; the tables are summed before agreement is computed.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from malind.corpus import PackageSource
from malind.dataset import AnnotationRecord, DataError

NONE_LABEL = "none"

Item = tuple[str, str, int]


@dataclass(frozen=True)
class KappaResult:
    kappa: float
    observed_agreement: float
    expected_agreement: float
    item_count: int
    class_count: int = 0

    def to_dict(self) -> dict:
        return {
            "kappa": self.kappa,
            "observed_agreement": self.observed_agreement,
            "expected_agreement": self.expected_agreement,
            "item_count": self.item_count,
            "class_count": self.class_count,
        }

    def render_text(self) -> str:
        return (
            f"kappa                {self.kappa:.6f}\n"
            f"observed agreement   {self.observed_agreement:.6f}\n"
            f"expected agreement   {self.expected_agreement:.6f}\n"
            f"items                {self.item_count}\n"
            f"classes              {self.class_count}\n"
        )


def line_universe(corpus: Iterable[PackageSource]) -> list[Item]:
    """Every scanned line of every file."""
    return [
        (p.package_id, f.rel_path, line)
        for p in corpus
        for f in p.files
        for line in range(1, f.line_count + 1)
    ]


def _marks(records: Iterable[AnnotationRecord], items: set[Item]) -> dict[Item, set[str]]:
    out: dict[Item, set[str]] = defaultdict(set)
    for r in records:
        for line in r.lines():
            item = (r.package_id, r.rel_path, line)
            if item not in items:
                raise DataError(f"annotation outside the universe: {r.package_id}/{r.rel_path}:{line}")
            out[item].add(r.indicator_id)
    return out


def _labels(marks: dict[Item, set[str]], item: Item) -> set[str]:
    return marks.get(item) or {NONE_LABEL}


def pooled_agreement(a: Sequence[AnnotationRecord], b: Sequence[AnnotationRecord], universe: Iterable[Item]) -> tuple[Fraction, Fraction, int, int]:
    """Exact (p_o, p_e, item count, class count)."""
    items = sorted(set(universe))
    if not items:
        raise DataError("empty universe: agreement is undefined")
    item_set = set(items)
    ma, mb = _marks(a, item_set), _marks(b, item_set)

    # per-class yes counts and joint counts; "no" cells follow from the item total
    yes_a: dict[str, int] = defaultdict(int)
    yes_b: dict[str, int] = defaultdict(int)
    both: dict[str, int] = defaultdict(int)
    for item in items:
        la, lb = _labels(ma, item), _labels(mb, item)
        for c in la:
            yes_a[c] += 1
        for c in lb:
            yes_b[c] += 1
        for c in la & lb:
            both[c] += 1
    classes = sorted(set(yes_a) | set(yes_b))
    n = len(items)
    agree = 0
    for c in classes:
        neither = n - yes_a[c] - yes_b[c] + both[c]
        agree += both[c] + neither
    cells = n * len(classes)
    p_o = Fraction(agree, cells)
    pa = Fraction(sum(yes_a.values()), cells)
    pb = Fraction(sum(yes_b.values()), cells)
    p_e = pa * pb + (1 - pa) * (1 - pb)
    return p_o, p_e, n, len(classes)


def pooled_kappa(
    a: Sequence[AnnotationRecord],
    b: Sequence[AnnotationRecord],
    universe: Sequence[PackageSource] | Iterable[Item],
) -> KappaResult:
    universe = list(universe)
    items = line_universe(universe) if universe and isinstance(universe[0], PackageSource) else universe
    p_o, p_e, n, k = pooled_agreement(a, b, items)
    if p_e == 1:
        kappa = Fraction(1)
    else:
        kappa = (p_o - p_e) / (1 - p_e)
    return KappaResult(float(kappa), float(p_o), float(p_e), n, k)
