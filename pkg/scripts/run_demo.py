#!/usr/bin/env python3
"""Offline walkthrough of the whole pipeline on the synthetic fixture tree.

Generates fixtures on first run, answers a flood query without starting the
HTTP service, and prints how the flood fraction moves with the threshold.

Usage:
    python3 scripts/run_demo.py
    python3 scripts/run_demo.py --root /tmp/demo --query "Water levels in Madras"
"""

import argparse
import json
from pathlib import Path

from floodlense import GeoPoint, Pipeline, load_config, render_table
from floodlense.fixtures import write_fixtures


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default=".demo", help="fixture tree directory")
    parser.add_argument(
        "--query", default="What is the Flood Situation in Chhheennai"
    )
    parser.add_argument("--seed", type=int, default=42)
    args = parser.parse_args()

    root = Path(args.root)
    if not (root / "config.json").exists():
        print(f"writing fixture tree to {root}")
        write_fixtures(root, seed=args.seed)
    config = load_config(root / "config.json")
    pipeline = Pipeline.from_config(config)

    result = pipeline.query(args.query)
    print(json.dumps(result, indent=2))
    print()

    point = GeoPoint(result["lat"], result["lon"])
    thresholds = (0.3, 0.5, 0.7)
    fractions = [
        pipeline.segment(point, t)["flood_fraction"] for t in thresholds
    ]
    print(
        render_table(
            "Flood fraction by threshold",
            [f"{t:g}" for t in thresholds],
            ["Flood Fraction"],
            [fractions],
            corner="Metric",
        )
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
