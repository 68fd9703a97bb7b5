"""Package discovery under a corpus root and execution-flow file ranking."""

from __future__ import annotations

import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path, PurePosixPath

logger = logging.getLogger(__name__)

SOURCE_SUFFIXES = (".py", ".pyw")
DEFAULT_MAX_FILE_BYTES = 5 * 1024 * 1024


class CorpusError(OSError):
    """The corpus root cannot be read."""


@dataclass(frozen=True)
class SourceFile:
    rel_path: str
    rank: int
    byte_len: int
    line_count: int


@dataclass(frozen=True)
class PackageSource:
    package_id: str
    root: Path
    files: tuple[SourceFile, ...] = ()
    # non-source files seen during discovery; cataloged, never ranked
    other_files: tuple[str, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def file(self, rel_path: str) -> SourceFile:
        for f in self.files:
            if f.rel_path == rel_path:
                return f
        raise KeyError(rel_path)

    def read_text(self, rel_path: str) -> str:
        return decode_source((self.root / rel_path).read_bytes())


def decode_source(data: bytes) -> str:
    return data.decode("utf-8", errors="replace")


def count_lines(text: str) -> int:
    """Newline-delimited line count; a trailing partial line counts as one."""
    if "\r" in text:
        text = text.replace("\r\n", "\n").replace("\r", "\n")
    if not text:
        return 0
    n = text.count("\n")
    return n if text.endswith("\n") else n + 1


def execution_rank_key(rel_path: str) -> tuple[int, int, str]:
    """Sort key for the execution-flow order.

    Root ``setup.py`` runs at install time, ``__init__.py`` files at import
    time (shallow packages first), everything else afterwards.
    """
    parts = PurePosixPath(rel_path).parts
    if rel_path == "setup.py":
        return (0, 0, rel_path)
    if parts and parts[-1] == "__init__.py":
        return (1, len(parts), rel_path)
    return (2, 0, rel_path)


def order_files(package: PackageSource) -> PackageSource:
    ordered = sorted(package.files, key=lambda f: execution_rank_key(f.rel_path))
    ranked = tuple(replace(f, rank=i) for i, f in enumerate(ordered))
    return replace(package, files=ranked)


def _is_source(name: str) -> bool:
    return name.endswith(SOURCE_SUFFIXES)


def _walk_package(root: Path, max_bytes: int) -> tuple[list[SourceFile], list[str], list[str]]:
    files: list[SourceFile] = []
    others: list[str] = []
    warnings: list[str] = []

    def onerror(err: OSError) -> None:
        msg = f"unreadable directory {err.filename}: {err.strerror}"
        logger.warning(msg)
        warnings.append(msg)

    for dirpath, dirnames, filenames in os.walk(root, onerror=onerror, followlinks=False):
        dirnames.sort()
        base = Path(dirpath)
        for name in sorted(filenames):
            path = base / name
            rel = path.relative_to(root).as_posix()
            if path.is_symlink() or not path.is_file():
                continue
            if not _is_source(name):
                others.append(rel)
                continue
            try:
                size = path.stat().st_size
                if size > max_bytes:
                    msg = f"skipped {rel}: {size} bytes exceeds limit {max_bytes}"
                    logger.warning(msg)
                    warnings.append(msg)
                    continue
                data = path.read_bytes()
            except OSError as exc:
                msg = f"skipped unreadable file {rel}: {exc.strerror or exc}"
                logger.warning(msg)
                warnings.append(msg)
                continue
            files.append(
                SourceFile(rel_path=rel, rank=0, byte_len=len(data), line_count=count_lines(decode_source(data)))
            )
    return files, others, warnings


def load_package(path: Path, package_id: str | None = None, max_bytes: int = DEFAULT_MAX_FILE_BYTES) -> PackageSource:
    files, others, warnings = _walk_package(path, max_bytes)
    pkg = PackageSource(
        package_id=package_id or path.name,
        root=path,
        files=tuple(files),
        other_files=tuple(others),
        warnings=tuple(warnings),
    )
    return order_files(pkg)


def discover_packages(root: str | Path, max_bytes: int = DEFAULT_MAX_FILE_BYTES) -> list[PackageSource]:
    """One ranked PackageSource per child directory that holds source files."""
    root = Path(root)
    try:
        children = sorted(root.iterdir(), key=lambda p: p.name)
    except OSError as exc:
        raise CorpusError(f"cannot read corpus root {root}: {exc.strerror or exc}") from exc

    packages = []
    for child in children:
        if child.is_symlink() or not child.is_dir():
            continue
        pkg = load_package(child, max_bytes=max_bytes)
        if pkg.files:
            packages.append(pkg)
    return sorted(packages, key=lambda p: p.package_id)
