import json
import subprocess
import sys

import pytest

from conftest import BENIGN, SNIPPETS
from malind.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, RunConfig, UsageError, run
from malind.dataset import AnnotationRecord, read_annotations, write_annotations
from malind.taxonomy import list_indicators


@pytest.fixture(scope="module")
def scanned(tmp_path_factory):
    out = tmp_path_factory.mktemp("scan")
    assert run(["scan", "--corpus", str(SNIPPETS), "--out", str(out)]) == EXIT_OK
    return out


def test_scan_covers_every_indicator(scanned):
    recs = read_annotations(scanned / "annotations.mal.jsonl")
    assert {r.indicator_id for r in recs} >= {d.id for d in list_indicators()}
    reports = json.loads((scanned / "reports.json").read_text())
    assert len(reports) == len([d for d in SNIPPETS.iterdir() if d.is_dir()])


def test_scan_feeds_stats_and_mine(scanned, capsys):
    ann = str(scanned / "annotations.mal.jsonl")
    assert run(["stats", ann, "--corpus", str(SNIPPETS), "--out", str(scanned)]) == EXIT_OK
    assert json.loads((scanned / "stats.json").read_text())["package_count"] == 48
    assert run(["mine", ann, "--corpus", str(SNIPPETS), "--out", str(scanned), "--min-support", "1"]) == EXIT_OK
    assert run(["graph", str(scanned / "rules.tsv"), "--out", str(scanned / "g"), "--top-k", "5"]) == EXIT_OK
    assert json.loads((scanned / "g" / "graph.json").read_text())["edges"]


def test_mine_hand_built(tmp_path, capsys):
    recs = [
        AnnotationRecord("p1", "setup.py", 1, 1, "NET-002"), AnnotationRecord("p1", "setup.py", 2, 2, "SYS-006"),
        AnnotationRecord("p2", "setup.py", 1, 1, "NET-002"), AnnotationRecord("p2", "setup.py", 2, 2, "SYS-006"),
        AnnotationRecord("p3", "setup.py", 1, 1, "DEF-003"), AnnotationRecord("p4", "setup.py", 1, 1, "DEF-003"),
    ]
    ann = tmp_path / "a.mal.jsonl"
    write_annotations(recs, ann)
    capsys.readouterr()
    assert run(["mine", str(ann), "--out", str(tmp_path), "--graph"]) == EXIT_OK
    rows = [line.split("\t") for line in (tmp_path / "rules.tsv").read_text().splitlines()[1:]]
    assert rows == [["NET-002", "SYS-006", "2", "0.500000", "1.000000", "2.000000"]]
    assert (tmp_path / "graph.dot").exists() and (tmp_path / "graph.json").exists()
    assert capsys.readouterr().out == (tmp_path / "rules.tsv").read_text()


def test_kappa_identical(scanned, capsys):
    ann = str(scanned / "annotations.mal.jsonl")
    capsys.readouterr()
    assert run(["kappa", ann, ann, "--corpus", str(SNIPPETS), "--format", "machine"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["kappa"] == 1.0


def test_catalog(capsys):
    assert run(["catalog"]) == EXIT_OK
    assert capsys.readouterr().out.count("| EXS-") == 3


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["frobnicate"],
        ["scan", "--bogus"],
        ["mine", "x.jsonl", "--min-support", "0"],
        ["mine", "x.jsonl", "--top-k", "-1"],
        ["scan", "--corpus", ".", "--out", ".", "--jobs", "0"],
        ["mine", "x.jsonl", "--min-support", "two"],
        ["scan", "--out", "somewhere"],
    ],
)
def test_usage_errors(argv, monkeypatch):
    monkeypatch.delenv("MALIND_CORPUS", raising=False)
    assert run(argv) == EXIT_USAGE


def test_data_errors(tmp_path):
    bad = tmp_path / "bad.mal.jsonl"
    bad.write_text("{broken\n")
    assert run(["stats", str(bad), "--corpus", str(BENIGN)]) == EXIT_DATA
    assert run(["stats", str(tmp_path / "missing.jsonl"), "--corpus", str(BENIGN)]) == EXIT_DATA
    assert run(["scan", "--corpus", str(tmp_path / "nope"), "--out", str(tmp_path / "o")]) == EXIT_DATA
    dangling = tmp_path / "d.mal.jsonl"
    write_annotations([AnnotationRecord("ghost", "setup.py", 1, 1, "EXS-001")], dangling)
    assert run(["stats", str(dangling), "--corpus", str(BENIGN)]) == EXIT_DATA
    rules = tmp_path / "r.yaml"
    rules.write_text("thresholds:\n  randomness: 7\n")
    assert run(["scan", "--corpus", str(BENIGN), "--out", str(tmp_path / "o"), "--rules", str(rules)]) == EXIT_DATA


def test_env_overrides(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("MALIND_CORPUS", str(BENIGN))
    monkeypatch.setenv("MALIND_OUT", str(tmp_path))
    monkeypatch.setenv("MALIND_FORMAT", "machine")
    assert run(["scan"]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["findings"] == 0
    monkeypatch.setenv("MALIND_MIN_SUPPORT", "0")
    assert run(["mine", str(tmp_path / "annotations.mal.jsonl")]) == EXIT_USAGE
    # the command line wins over the environment
    assert run(["mine", str(tmp_path / "annotations.mal.jsonl"), "--min-support", "2"]) == EXIT_OK


def test_outputs_are_byte_identical(tmp_path):
    for tag in ("a", "b"):
        out = tmp_path / tag
        assert run(["scan", "--corpus", str(SNIPPETS), "--out", str(out)]) == EXIT_OK
        assert run(["mine", str(out / "annotations.mal.jsonl"), "--out", str(out), "--graph", "--min-support", "1"]) == 0
        assert run(["stats", str(out / "annotations.mal.jsonl"), "--corpus", str(SNIPPETS), "--out", str(out)]) == 0
    for name in ("annotations.mal.jsonl", "reports.json", "rules.tsv", "graph.dot", "graph.json", "stats.json", "stats.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes(), name


def test_run_config_validation():
    RunConfig().validate()
    with pytest.raises(UsageError):
        RunConfig(jobs=0).validate()


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "malind", "catalog"], capture_output=True, text=True)
    assert proc.returncode == 0 and "EXS-001" in proc.stdout
    proc = subprocess.run([sys.executable, "-m", "malind", "nope"], capture_output=True, text=True)
    assert proc.returncode == 1 and "usage" in proc.stderr
