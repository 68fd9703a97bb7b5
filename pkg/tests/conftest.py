from __future__ import annotations

import textwrap
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
SNIPPETS = FIXTURES / "snippets"
BENIGN = FIXTURES / "benign"
# composite sample modeled on the install-hook reverse shell; not a single indicator
COMPOSITE = {"tencent10"}


def write_tree(root: Path, files: dict[str, str]) -> Path:
    for rel, text in files.items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(textwrap.dedent(text), encoding="utf-8")
    return root


@pytest.fixture
def make_tree(tmp_path):
    def _make(files: dict[str, str], name: str = "pkg") -> Path:
        return write_tree(tmp_path / name, files)

    return _make


def snippet_dirs() -> list[Path]:
    return sorted(d for d in SNIPPETS.iterdir() if d.is_dir() and d.name not in COMPOSITE)
