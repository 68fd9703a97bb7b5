import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from malind.corpus import PackageSource, SourceFile
from malind.dataset import (
    FIELDS,
    AnnotationRecord,
    DataError,
    Source,
    compute_stats,
    dumps_annotations,
    loads_annotations,
    read_annotations,
    write_annotations,
)
from malind.taxonomy import list_indicators

IDS = [d.id for d in list_indicators()]


def _corpus() -> list[PackageSource]:
    # 2 packages, 3 files, 100 lines in total
    return [
        PackageSource("alpha", None, (SourceFile("setup.py", 0, 0, 40), SourceFile("alpha/__init__.py", 1, 0, 20))),
        PackageSource("beta", None, (SourceFile("setup.py", 0, 0, 40),)),
    ]


def _records() -> list[AnnotationRecord]:
    # spans 2, 2, 2, 1; lines alpha/setup 3-4, 4-5 overlap on line 4
    return [
        AnnotationRecord("alpha", "setup.py", 3, 4, "EXS-002"),
        AnnotationRecord("alpha", "setup.py", 4, 5, "EXM-001"),
        AnnotationRecord("beta", "setup.py", 10, 11, "NET-006"),
        AnnotationRecord("alpha", "alpha/__init__.py", 7, 7, "EXS-001"),
    ]


def test_round_trip_empty(tmp_path):
    path = tmp_path / "a.mal.jsonl"
    write_annotations([], path)
    assert path.read_text() == ""
    assert read_annotations(path) == []


def test_round_trip_single_record():
    rec = AnnotationRecord("p", "setup.py", 2, 3, "EXM-008", "os.system(cmd)", Source.HUMAN, "ann1")
    text = dumps_annotations([rec])
    assert text.count("\n") == 1
    assert set(json.loads(text)) == set(FIELDS)
    assert loads_annotations(text) == [rec]


def test_sorted_on_disk():
    recs = [
        AnnotationRecord("b", "setup.py", 1, 1, "EXS-001"),
        AnnotationRecord("a", "z.py", 9, 9, "NET-001"),
        AnnotationRecord("a", "setup.py", 5, 5, "DEF-003"),
    ]
    buf = io.StringIO()
    write_annotations(recs, buf)
    order = [(r["package_id"], r["rel_path"]) for r in map(json.loads, buf.getvalue().splitlines())]
    assert order == [("a", "setup.py"), ("a", "z.py"), ("b", "setup.py")]


@pytest.mark.parametrize(
    "line,match",
    [
        ("{not json", "invalid JSON"),
        ("[]", "expected an object"),
        ('{"package_id": "p"}', "missing fields"),
        (json.dumps({"package_id": "p", "rel_path": "a.py", "line_start": 1, "line_end": 1, "indicator_id": "XXX-001",
                     "evidence": "", "source": "Tool", "annotator_id": None}), "unknown indicator"),
        (json.dumps({"package_id": "", "rel_path": "a.py", "line_start": 1, "line_end": 1, "indicator_id": "EXS-001",
                     "evidence": "", "source": "Tool", "annotator_id": None}), "empty package_id"),
        (json.dumps({"package_id": "p", "rel_path": "a.py", "line_start": 3, "line_end": 2, "indicator_id": "EXS-001",
                     "evidence": "", "source": "Tool", "annotator_id": None}), "bad line span"),
        (json.dumps({"package_id": "p", "rel_path": "a.py", "line_start": 1, "line_end": 1, "indicator_id": "EXS-001",
                     "evidence": "", "source": "Tool", "annotator_id": "x"}), "annotator"),
        (json.dumps({"package_id": "p", "rel_path": "a.py", "line_start": 1, "line_end": 1, "indicator_id": "EXS-001",
                     "evidence": "x" * 201, "source": "Tool", "annotator_id": None}), "evidence"),
        (json.dumps({"package_id": "p", "rel_path": "a.py", "line_start": "1", "line_end": 1, "indicator_id": "EXS-001",
                     "evidence": "", "source": "Tool", "annotator_id": None}), "integer"),
    ],
)
def test_malformed_lines_rejected(line, match):
    with pytest.raises(DataError, match=match):
        loads_annotations(line + "\n")


def test_missing_file(tmp_path):
    with pytest.raises(DataError):
        read_annotations(tmp_path / "nope.jsonl")


records = st.builds(
    lambda pkg, path, start, length, ind, ev, human: AnnotationRecord(
        pkg, path, start, start + length, ind, ev, Source.HUMAN if human else Source.TOOL, "ann" if human else None
    ),
    st.sampled_from(["p1", "p2", "p3"]),
    st.sampled_from(["setup.py", "pkg/__init__.py", "pkg/ü.py"]),
    st.integers(1, 50),
    st.integers(0, 4),
    st.sampled_from(IDS),
    st.text(max_size=40),
    st.booleans(),
)


@given(st.lists(records, max_size=20), st.randoms(use_true_random=False))
@settings(max_examples=200)
def test_serialization_is_lossless_and_order_normalizing(recs, rnd):
    text = dumps_annotations(recs)
    back = loads_annotations(text)
    assert sorted(back, key=AnnotationRecord.sort_key) == sorted(recs, key=AnnotationRecord.sort_key)
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    assert dumps_annotations(shuffled) == text
    assert dumps_annotations(back) == text


def test_stats_hand_counted():
    s = compute_stats(_records(), _corpus())
    assert (s.package_count, s.file_count, s.total_loc) == (2, 3, 100)
    # lines: alpha/setup 3,4,5 + beta/setup 10,11 + alpha/__init__ 7 -> 6 distinct
    assert s.malicious_loc == 6
    assert s.malicious_loc_fraction == 0.06
    assert s.indicator_count == 4
    assert s.mean_loc_per_indicator == 1.75
    assert s.mean_indicators_per_package == 2.0
    assert s.mean_malicious_files_per_package == 1.5
    assert s.per_filename_distribution == {"setup.py": (3, 0.75), "__init__.py": (1, 0.25)}
    assert s.per_category_counts == {"ExecutionStage": 2, "ExecutionMechanism": 1, "NetworkOperations": 1}
    assert s.top_packages == [("alpha", 3), ("beta", 1)]


def test_stats_seven_of_hundred():
    recs = _records()
    recs[1] = AnnotationRecord("alpha", "setup.py", 20, 21, "EXM-001")  # no overlap now
    s = compute_stats(recs, _corpus())
    assert s.malicious_loc == 7
    assert s.malicious_loc_fraction == 0.07
    assert s.mean_loc_per_indicator == 1.75


def test_stats_empty():
    s = compute_stats([], _corpus())
    assert s.malicious_loc == 0 and s.indicator_count == 0 and s.mean_loc_per_indicator == 0.0
    assert s.per_filename_distribution == {} and s.per_category_counts == {} and s.top_packages == []
    s = compute_stats([], [])
    assert s.package_count == 0 and s.malicious_loc_fraction == 0.0


def test_stats_rejects_unknown_package():
    with pytest.raises(DataError):
        compute_stats([AnnotationRecord("ghost", "setup.py", 1, 1, "EXS-001")], _corpus())


def test_stats_schema():
    doc = compute_stats(_records(), _corpus()).to_dict()
    for key in (
        "package_count", "file_count", "total_loc", "malicious_loc", "malicious_loc_fraction", "indicator_count",
        "mean_indicators_per_package", "mean_malicious_files_per_package", "mean_loc_per_indicator",
        "per_filename_distribution", "per_category_counts", "top_packages",
    ):
        assert key in doc
    json.loads(compute_stats(_records(), _corpus()).to_json())


@given(st.randoms(use_true_random=False))
@settings(max_examples=50)
def test_stats_permutation_invariant(rnd):
    recs = _records() * 2
    shuffled = list(recs)
    rnd.shuffle(shuffled)
    assert compute_stats(shuffled, _corpus()) == compute_stats(recs, _corpus())


def test_overlapping_records_do_not_double_count():
    recs = [AnnotationRecord("beta", "setup.py", 1, 3, i) for i in ("EXS-002", "EXM-001", "DEF-003")]
    assert compute_stats(recs, _corpus()).malicious_loc == 3
