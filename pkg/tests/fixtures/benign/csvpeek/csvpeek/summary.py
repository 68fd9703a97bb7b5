import csv
import statistics
from collections import Counter


def summarize(path, limit=None):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        columns = {name: [] for name in reader.fieldnames or []}
        for i, row in enumerate(reader):
            if limit is not None and i >= limit:
                break
            for name, value in row.items():
                columns[name].append(value)
    return {name: _describe(values) for name, values in columns.items()}


def _describe(values):
    numbers = []
    for v in values:
        try:
            numbers.append(float(v))
        except (TypeError, ValueError):
            pass
    if numbers and len(numbers) == len(values):
        return {"kind": "number", "mean": statistics.fmean(numbers), "min": min(numbers), "max": max(numbers)}
    return {"kind": "text", "top": Counter(values).most_common(3)}
