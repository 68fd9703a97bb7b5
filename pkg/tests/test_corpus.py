import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from malind.corpus import (
    CorpusError,
    PackageSource,
    SourceFile,
    count_lines,
    discover_packages,
    execution_rank_key,
    load_package,
    order_files,
)


def _ranked(pkg: PackageSource) -> list[str]:
    return [f.rel_path for f in sorted(pkg.files, key=lambda f: f.rank)]


def test_empty_root(tmp_path):
    assert discover_packages(tmp_path) == []


def test_missing_root(tmp_path):
    with pytest.raises(CorpusError):
        discover_packages(tmp_path / "nope")


def test_single_setup(make_tree, tmp_path):
    make_tree({"setup.py": "from setuptools import setup\nsetup(name='x')\n"}, name="corpus/x")
    pkgs = discover_packages(tmp_path / "corpus")
    assert len(pkgs) == 1
    assert pkgs[0].package_id == "x"
    assert [f.rel_path for f in pkgs[0].files] == ["setup.py"]
    assert pkgs[0].files[0].line_count == 2


def test_three_packages_readme_excluded(make_tree, tmp_path):
    make_tree({"setup.py": "x = 1\n", "README.md": "# hi\n"}, name="c/alpha")
    make_tree({"beta/__init__.py": "", "beta/core.py": "y = 2\n"}, name="c/beta")
    make_tree({"run.py": "print(1)\n"}, name="c/gamma")
    pkgs = discover_packages(tmp_path / "c")
    assert [p.package_id for p in pkgs] == ["alpha", "beta", "gamma"]
    alpha = pkgs[0]
    assert [f.rel_path for f in alpha.files] == ["setup.py"]
    assert "README.md" in alpha.other_files
    assert _ranked(pkgs[1]) == ["beta/__init__.py", "beta/core.py"]


def test_order_examples(make_tree):
    root = make_tree({"pkg/util.py": "", "pkg/__init__.py": "", "setup.py": ""})
    assert _ranked(load_package(root)) == ["setup.py", "pkg/__init__.py", "pkg/util.py"]
    assert [f.rank for f in sorted(load_package(root).files, key=lambda f: f.rank)] == [0, 1, 2]

    root = make_tree({"pkg/b/__init__.py": "", "pkg/__init__.py": "", "setup.py": ""}, name="two")
    assert _ranked(load_package(root)) == ["setup.py", "pkg/__init__.py", "pkg/b/__init__.py"]

    root = make_tree({"a.py": ""}, name="one")
    assert [(f.rel_path, f.rank) for f in load_package(root).files] == [("a.py", 0)]


def test_nested_setup_is_not_rank_zero():
    assert execution_rank_key("sub/setup.py")[0] == 2
    assert execution_rank_key("setup.py")[0] == 0


def test_count_lines():
    assert count_lines("") == 0
    assert count_lines("a") == 1
    assert count_lines("a\n") == 1
    assert count_lines("a\nb") == 2


_paths = st.lists(
    st.sampled_from(
        ["setup.py", "pkg/__init__.py", "pkg/a.py", "pkg/b/__init__.py", "pkg/b/c.py", "tools/x.py",
         "z.py", "pkg/b/d/__init__.py", "conftest.py"]
    ),
    unique=True,
    min_size=1,
)


@given(_paths, st.randoms(use_true_random=False))
@settings(max_examples=200)
def test_order_is_total_and_stable(paths, rnd):
    shuffled = list(paths)
    rnd.shuffle(shuffled)
    pkg = PackageSource("p", None, tuple(SourceFile(p, 0, 0, 0) for p in shuffled))
    a, b = order_files(pkg), order_files(order_files(pkg))
    assert sorted(f.rank for f in a.files) == list(range(len(paths)))
    assert sorted(f.rel_path for f in a.files) == sorted(paths)
    assert _ranked(a) == _ranked(b)
    # independent of input order
    rnd.shuffle(shuffled)
    c = order_files(PackageSource("p", None, tuple(SourceFile(p, 0, 0, 0) for p in shuffled)))
    assert _ranked(a) == _ranked(c)
    if "setup.py" in paths:
        assert _ranked(a)[0] == "setup.py"


def test_rediscovery_is_idempotent(make_tree, tmp_path):
    make_tree({"setup.py": "a = 1\n", "m/__init__.py": "import os\n", "m/x.py": "b\n"}, name="c/one")
    make_tree({"tool.py": "c = 3\n"}, name="c/two")
    first = discover_packages(tmp_path / "c")
    # write the discovered files back to a fresh tree and rediscover
    for pkg in first:
        for f in pkg.files:
            dst = tmp_path / "copy" / pkg.package_id / f.rel_path
            dst.parent.mkdir(parents=True, exist_ok=True)
            dst.write_text(pkg.read_text(f.rel_path), encoding="utf-8")
    again = discover_packages(tmp_path / "copy")
    assert [(p.package_id, [(f.rel_path, f.rank, f.line_count) for f in p.files]) for p in first] == [
        (p.package_id, [(f.rel_path, f.rank, f.line_count) for f in p.files]) for p in again
    ]


def test_invalid_utf8_is_replaced(make_tree):
    root = make_tree({"setup.py": ""})
    (root / "setup.py").write_bytes(b"x = '\xff\xfe'\n")
    pkg = load_package(root)
    assert "�" in pkg.read_text("setup.py")


def test_random_shuffle_fixture_rank_zero():
    rnd = random.Random(3)
    names = ["setup.py"] + [f"m{i}.py" for i in range(10)]
    rnd.shuffle(names)
    pkg = order_files(PackageSource("p", None, tuple(SourceFile(n, 0, 0, 0) for n in names)))
    assert _ranked(pkg)[0] == "setup.py"
