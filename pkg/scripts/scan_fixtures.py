#!/usr/bin/env python3
"""Scan the snippet and benign fixture corpora and print a per-package table.

Snippet directories are named after the indicator they illustrate, so a row
is OK when that ID is among the findings. Benign rows are OK when empty.
"""

from __future__ import annotations

import sys
import time
from pathlib import Path

from malind.corpus import discover_packages
from malind.rules import scan_corpus

FIXTURES = Path(__file__).resolve().parents[1] / "tests" / "fixtures"


def main() -> int:
    failures = 0
    for kind in ("snippets", "benign"):
        t0 = time.perf_counter()
        reports = scan_corpus(discover_packages(FIXTURES / kind))
        elapsed = time.perf_counter() - t0
        print(f"== {kind}: {len(reports)} packages in {elapsed:.2f}s")
        for rep in reports:
            ids = sorted(rep.indicator_ids())
            if kind == "benign":
                ok = not ids
            else:
                # directories that are not an indicator ID are composite samples
                ok = rep.package_id in ids or "-" not in rep.package_id
            failures += not ok
            print(f"{'OK  ' if ok else 'FAIL'} {rep.package_id:<16} {' '.join(ids)}")
    print(f"failures: {failures}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
