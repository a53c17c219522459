#!/usr/bin/env python3
"""Print the bundled published-results tables; optionally refresh the golden
files the test suite compares against.

Usage:
    python3 scripts/render_reported_tables.py
    python3 scripts/render_reported_tables.py --golden-dir tests/golden
"""

import argparse
from pathlib import Path

from floodlense.evaluation import load_reported_tables, render_reported_table


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--golden-dir", help="write each table to <dir>/<name>.txt as well"
    )
    args = parser.parse_args()
    names = sorted(load_reported_tables())
    for name in names:
        text = render_reported_table(name)
        print(text)
        if args.golden_dir:
            out = Path(args.golden_dir) / f"{name}.txt"
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(text, encoding="utf-8")
    if args.golden_dir:
        print(f"wrote {len(names)} golden files to {args.golden_dir}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
