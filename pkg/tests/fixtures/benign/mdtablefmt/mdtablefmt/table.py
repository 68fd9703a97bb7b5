import re

_SEP = re.compile(r"^\s*\|?\s*:?-{3,}:?\s*(\|\s*:?-{3,}:?\s*)*\|?\s*$")


def split_row(line):
    cells = line.strip().strip("|").split("|")
    return [c.strip() for c in cells]


def format_table(lines):
    rows = [split_row(line) for line in lines]
    width = max(len(r) for r in rows)
    rows = [r + [""] * (width - len(r)) for r in rows]
    cols = [max(len(r[i]) for r in rows if not _SEP.match("|".join(r))) for i in range(width)]
    out = []
    for r in rows:
        if _SEP.match("|".join(r)):
            out.append("| " + " | ".join("-" * max(3, w) for w in cols) + " |")
        else:
            out.append("| " + " | ".join(c.ljust(w) for c, w in zip(r, cols)) + " |")
    return out
