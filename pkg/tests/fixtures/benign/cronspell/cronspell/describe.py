FIELDS = ("minute", "hour", "day of month", "month", "day of week")
DAYS = ["Sunday", "Monday", "Tuesday", "Wednesday", "Thursday", "Friday", "Saturday"]


class CronError(ValueError):
    pass


def _field(value, name):
    if value == "*":
        return f"every {name}"
    if value.startswith("*/"):
        return f"every {value[2:]} {name}s"
    if name == "day of week" and value.isdigit():
        return DAYS[int(value) % 7]
    return f"{name} {value}"


def describe(expr):
    parts = expr.split()
    if len(parts) != 5:
        raise CronError(f"expected 5 fields, got {len(parts)}")
    return ", ".join(_field(v, n) for v, n in zip(parts, FIELDS))
