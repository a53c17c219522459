#!/usr/bin/env python3
"""Side-by-side engine comparison on the synthetic dataset.

Evaluates the band-ratio baseline and the bundled random-weight UNet on the
fixture dataset, then sweeps thresholds for the stronger engine.

Usage:
    python3 scripts/evaluate_engines.py --root .demo
"""

import argparse
from pathlib import Path

from floodlense import (
    ClassicalEngine,
    UNetConfig,
    UNetEngine,
    load_weights,
    render_table,
    threshold_sweep,
)
from floodlense.evaluation import (
    DEFAULT_THRESHOLDS,
    DatasetSpec,
    evaluate_engine,
    load_dataset,
)
from floodlense.fixtures import write_fixtures

METRIC_ROWS = ["IoU", "Dice", "Precision", "Recall", "F1 Score", "Accuracy"]
ATTRS = ("iou", "dice", "precision", "recall", "f1", "accuracy")


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default=".demo", help="fixture tree directory")
    parser.add_argument("--size", type=int, default=None, help="resize edge length")
    parser.add_argument("--threshold", type=float, default=0.5)
    args = parser.parse_args()

    root = Path(args.root)
    if not (root / "config.json").exists():
        print(f"writing fixture tree to {root}")
        write_fixtures(root)
    dataset = load_dataset(
        DatasetSpec(
            image_dir=root / "dataset" / "images",
            mask_dir=root / "dataset" / "masks",
            resize=args.size,
        )
    )

    engines = [
        ClassicalEngine(),
        UNetEngine(UNetConfig(), load_weights(root / "weights" / "unet_random.flwt")),
    ]
    reports = [
        evaluate_engine(engine, dataset, threshold=args.threshold)
        for engine in engines
    ]
    values = [[getattr(rep, attr) for rep in reports] for attr in ATTRS]
    print(
        render_table(
            f"Engine comparison at threshold {args.threshold:g}",
            [engine.name for engine in engines],
            METRIC_ROWS,
            values,
        )
    )
    print()

    best = max(
        range(len(engines)), key=lambda i: reports[i].iou if reports[i].iou else 0.0
    )
    engine = engines[best]
    maps = [engine.predict(img) for img, _ in dataset]
    gts = [mask for _, mask in dataset]
    sweep = threshold_sweep(maps, gts, DEFAULT_THRESHOLDS)
    columns = [f"{t:g}" for t in sweep.thresholds]
    display = [f"Threshold {columns[0]}"] + columns[1:]
    sweep_values = [
        [getattr(rep, attr) for rep in sweep.reports] for attr in ATTRS
    ]
    print(
        render_table(
            f"{engine.name} metrics for multiple thresholds",
            display,
            METRIC_ROWS,
            sweep_values,
        )
    )
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
