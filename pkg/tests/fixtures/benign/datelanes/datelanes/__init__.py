import datetime as dt
from operator import itemgetter


def assign_lanes(events):
    """Greedy interval partitioning; events are (start, end, label) tuples."""
    lanes = []
    out = []
    for start, end, label in sorted(events, key=itemgetter(0)):
        for i, last_end in enumerate(lanes):
            if last_end <= start:
                lanes[i] = end
                out.append((i, label))
                break
        else:
            lanes.append(end)
            out.append((len(lanes) - 1, label))
    return out


def parse_day(text):
    return dt.datetime.strptime(text, "%Y-%m-%d").date()
