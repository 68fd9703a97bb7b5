import sys

from mdtablefmt.table import format_table


def main():
    text = sys.stdin.read().splitlines()
    sys.stdout.write("\n".join(format_table(text)) + "\n")


if __name__ == "__main__":
    main()
