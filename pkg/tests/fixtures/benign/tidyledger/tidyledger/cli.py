import argparse
import sys

from tidyledger.ledger import Entry, Ledger


def main(argv=None):
    ap = argparse.ArgumentParser(prog="tidyledger")
    ap.add_argument("journal")
    ap.add_argument("--account", default="assets:cash")
    args = ap.parse_args(argv)
    ledger = Ledger()
    try:
        with open(args.journal, encoding="utf-8") as fh:
            for line in fh:
                if line.strip() and not line.startswith("#"):
                    ledger.add(Entry.parse(line))
    except FileNotFoundError:
        print(f"no such journal: {args.journal}", file=sys.stderr)
        return 2
    print(ledger.balance(args.account))
    return 0


if __name__ == "__main__":
    sys.exit(main())
