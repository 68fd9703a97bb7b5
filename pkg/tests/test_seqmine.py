import json
from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from malind.dataset import AnnotationRecord, DataError
from malind.seqmine import (
    AssociationRule,
    PackageSequence,
    build_sequence,
    build_sequences,
    export_graph,
    mine,
    mine_ngrams,
    rank_rules,
    read_rule_table,
    rule_table,
    score_rules,
)

SYMBOLS = "ABCDE"


def _seqs(*events: str) -> list[PackageSequence]:
    return [PackageSequence(f"p{i}", tuple(e)) for i, e in enumerate(events)]


def brute_force(seqs, min_support=2):
    """Metrics straight from the definitions, one package at a time."""
    n = len(seqs)
    symbols = sorted({e for s in seqs for e in s.events})
    out = {}
    for a, b in product(symbols, repeat=2):
        has_a = sum(1 for s in seqs if a in s.events)
        has_b = sum(1 for s in seqs if b in s.events)
        pair = 0
        for s in seqs:
            if any(s.events[i] == a and s.events[i + 1] == b for i in range(len(s.events) - 1)):
                pair += 1
        if pair >= min_support:
            out[(a, b)] = (Fraction(pair, n), Fraction(pair, has_a), Fraction(pair * n, has_a * has_b))
    return out


def _as_dict(rules):
    return {(r.antecedent, r.consequent): (r.support, r.confidence, r.lift) for r in rules}


corpora = st.lists(
    st.lists(st.sampled_from(SYMBOLS), max_size=6).map(tuple), min_size=1, max_size=8
).map(lambda evs: [PackageSequence(f"p{i}", e) for i, e in enumerate(evs)])


@given(corpora, st.integers(1, 3))
@settings(max_examples=1000, deadline=None)
def test_matches_brute_force(seqs, min_support):
    got = _as_dict(score_rules(mine_ngrams(seqs, min_support)))
    assert got == brute_force(seqs, min_support)


@given(corpora)
@settings(max_examples=300, deadline=None)
def test_support_never_exceeds_confidence(seqs):
    for r in score_rules(mine_ngrams(seqs, 1)):
        assert r.support <= r.confidence
        if r.a_presence == r.n_packages:
            assert r.confidence == r.support


@given(corpora, st.integers(2, 4), st.data())
@settings(max_examples=500, deadline=None)
def test_repeating_a_sequence_only_touches_the_wrap_pair(seqs, times, data):
    idx = data.draw(st.integers(0, len(seqs) - 1))
    ev = seqs[idx].events
    looped = list(seqs)
    looped[idx] = PackageSequence(seqs[idx].package_id, ev * times)
    before = _as_dict(score_rules(mine_ngrams(seqs, 1)))
    after = _as_dict(score_rules(mine_ngrams(looped, 1)))
    wrap = (ev[-1], ev[0]) if ev else None
    assert {k: v for k, v in before.items() if k != wrap} == {k: v for k, v in after.items() if k != wrap}


def test_loop_example():
    plain = _as_dict(score_rules(mine_ngrams(_seqs("AB", "AB", "C", "C"))))
    looped = _as_dict(score_rules(mine_ngrams(_seqs("ABAB", "AB", "C", "C"))))
    assert looped == plain


@given(corpora, st.data())
@settings(max_examples=500, deadline=None)
def test_closed_loop_repetition_changes_nothing(seqs, data):
    # repeating a window whose wrap-around pair already occurs adds no new pattern
    idx = data.draw(st.integers(0, len(seqs) - 1))
    ev = seqs[idx].events
    pairs = set(zip(ev, ev[1:]))
    windows = [(i, j) for i in range(len(ev)) for j in range(i + 1, len(ev) + 1) if (ev[j - 1], ev[i]) in pairs]
    if not windows:
        return
    i, j = data.draw(st.sampled_from(windows))
    looped = list(seqs)
    looped[idx] = PackageSequence(seqs[idx].package_id, ev[:j] + ev[i:j] * data.draw(st.integers(1, 3)) + ev[j:])
    for ms in (1, 2):
        assert _as_dict(score_rules(mine_ngrams(looped, ms))) == _as_dict(score_rules(mine_ngrams(seqs, ms)))


def test_score_examples():
    rules = _as_dict(score_rules(mine_ngrams(_seqs("AB", "AB", "C", "C"))))
    assert rules == {("A", "B"): (Fraction(1, 2), Fraction(1), Fraction(2))}

    rules = _as_dict(score_rules(mine_ngrams(_seqs("AB", "AB", "B"))))
    assert rules == {("A", "B"): (Fraction(2, 3), Fraction(1), Fraction(1))}

    # A and B each in half of 8 packages, together in a quarter, always adjacent
    seqs = _seqs("AB", "AB", "A", "A", "B", "B", "", "")
    (rule,) = score_rules(mine_ngrams(seqs))
    assert abs(float(rule.lift) - 1.0) < 1e-12


def test_ngram_examples():
    counts = mine_ngrams(_seqs("AB", "AB", "B"))
    assert counts.bigrams == {("A", "B"): 2}
    assert counts.unigrams == {"A": 2, "B": 3}
    assert mine_ngrams(_seqs("AAA"), 1).bigrams == {("A", "A"): 1}
    assert mine_ngrams(_seqs("A", "B", "C")).bigrams == {}
    with pytest.raises(ValueError):
        mine_ngrams(_seqs("AB"), 0)


def test_sequence_order():
    recs = [
        AnnotationRecord("p", "pkg/__init__.py", 1, 1, "EXS-001"),
        AnnotationRecord("p", "setup.py", 8, 8, "EXM-001"),
        AnnotationRecord("p", "setup.py", 3, 3, "DEF-003"),
    ]
    ranks = {"setup.py": 0, "pkg/__init__.py": 1}
    assert build_sequence(recs, ranks).events == ("DEF-003", "EXM-001", "EXS-001")
    assert build_sequence(recs).events == ("DEF-003", "EXM-001", "EXS-001")
    assert build_sequence(recs[:1], ranks).events == ("EXS-001",)
    same_line = [AnnotationRecord("p", "setup.py", 4, 4, "EXM-001"), AnnotationRecord("p", "setup.py", 4, 4, "DEF-003")]
    assert build_sequence(same_line, ranks).events == ("DEF-003", "EXM-001")
    with pytest.raises(DataError):
        build_sequence(recs, {"setup.py": 0})


def test_sequences_per_package():
    recs = [AnnotationRecord("b", "setup.py", 1, 1, "EXS-001"), AnnotationRecord("a", "setup.py", 1, 1, "EXS-002")]
    assert [s.package_id for s in build_sequences(recs)] == ["a", "b"]


def _rule(a, b, pair, pa, pb, n):
    return AssociationRule(a, b, pair, pa, pb, n)


def test_rank_confidence_breaks_lift_ties():
    # both lift 2; confidence 0.8 vs 0.9
    r8 = _rule("A", "B", 4, 5, 4, 10)
    r9 = _rule("C", "D", 9, 10, 9, 20)
    assert (r8.lift, r9.lift, r8.confidence, r9.confidence) == (2, 2, Fraction(4, 5), Fraction(9, 10))
    assert rank_rules([r8, r9]) == [r9, r8]


def test_rank_floor_and_top_k():
    flat = _rule("A", "B", 2, 2, 3, 3)
    assert flat.lift == 1
    assert rank_rules([flat]) == []
    assert rank_rules([flat], lift_floor=0.5) == [flat]
    many = [_rule(f"X{i:03d}", "Y", 1, 1, 1, i + 2) for i in range(187)]
    assert len(rank_rules(many, top_k=25)) == 25
    assert rank_rules(many, top_k=25) == rank_rules(many)[:25]
    assert rank_rules(many, top_k=0) == []


@given(corpora)
@settings(max_examples=300, deadline=None)
def test_ranking_is_total_and_sorted(seqs):
    rules = score_rules(mine_ngrams(seqs, 1))
    ranked = rank_rules(rules, lift_floor=0)
    assert ranked == rank_rules(list(reversed(rules)), lift_floor=0)
    for x, y in zip(ranked, ranked[1:]):
        assert (-x.lift, -x.confidence, x.antecedent, x.consequent) < (-y.lift, -y.confidence, y.antecedent, y.consequent)
    assert all(r.lift > 1 for r in rank_rules(rules))


@given(corpora)
@settings(max_examples=300, deadline=None)
def test_ubiquitous_consequent_is_filtered(seqs):
    seqs = [PackageSequence(s.package_id, s.events + ("Z",)) for s in seqs]
    for r in score_rules(mine_ngrams(seqs, 1)):
        if r.consequent == "Z":
            assert r.lift <= 1
    assert not [r for r in mine(seqs, 1) if r.consequent == "Z"]


def test_table_round_trip():
    rules = mine(_seqs("AB", "AB", "C", "C", "BC", "BC"))
    text = rule_table(rules)
    assert text.splitlines()[0].split("\t") == ["antecedent", "consequent", "pair_presence", "support", "confidence", "lift"]
    back = read_rule_table(text)
    assert [(r.antecedent, r.consequent, r.pair_presence) for r in back] == [
        (r.antecedent, r.consequent, r.pair_presence) for r in rules
    ]
    assert rule_table(back) == text
    with pytest.raises(DataError):
        read_rule_table("a\tb\n")


def test_graph_single_edge():
    g = export_graph(mine(_seqs("AB", "AB", "C", "C")), 5)
    assert len(g.nodes) == 2 and len(g.edges) == 1
    assert json.loads(g.to_json())["edges"][0]["lift"] == 2.0
    assert '"A" -> "B"' in g.to_dot()


def test_graph_top_25():
    seqs = []
    for i in range(30):
        a, b = f"EXM-{i % 8 + 1:03d}", f"NET-{i % 10 + 1:03d}"
        seqs += [PackageSequence(f"p{i}a", (a, b)), PackageSequence(f"p{i}b", (a, b))]
    seqs += [PackageSequence(f"filler{i}", ("DEF-001",)) for i in range(20)]
    rules = mine(seqs)
    assert len(rules) >= 25
    g = export_graph(rules, 25)
    endpoints = {r.antecedent for r in rules[:25]} | {r.consequent for r in rules[:25]}
    assert len(g.edges) == 25
    assert len(g.nodes) == len(endpoints)
    assert dict(g.nodes)["NET-001"] == "NetworkOperations"


def test_graph_empty():
    for g in (export_graph([], 10), export_graph(mine(_seqs("AB", "AB")), 0)):
        assert g.nodes == () and g.edges == ()
        assert json.loads(g.to_json()) == {"nodes": [], "edges": []}
        assert g.to_dot().startswith("digraph")


def test_graph_is_deterministic():
    rules = mine(_seqs("AB", "AB", "BC", "BC", "D"))
    assert export_graph(rules, 5).to_dot() == export_graph(list(rules), 5).to_dot()
    assert export_graph(rules, 5).to_json() == export_graph(list(rules), 5).to_json()
