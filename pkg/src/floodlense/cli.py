"""Batch driver: every pipeline and evaluation capability without the service.

Exit codes: 0 success, 1 runtime error, 2 usage error. Tables go to stdout,
logs to stderr; --json <path> additionally writes machine-readable output.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import load_config
from .errors import FloodLenseError
from .evaluation import (
    DatasetSpec,
    evaluate_engine,
    load_dataset,
    render_table,
    report_to_json,
    run_ablation,
    threshold_sweep,
    time_inference,
    DEFAULT_THRESHOLDS,
)
from .fixtures import write_fixtures
from .raster_geo import GeoPoint, save_png
from .segmentation import (
    ClassicalEngine,
    UNetConfig,
    UNetEngine,
    binarize,
    overlay,
)
from .service import Pipeline, create_app
from .weights import load_weights

log = logging.getLogger("floodlense.cli")

METRIC_ROWS = ["IoU", "Dice", "Precision", "Recall", "F1 Score", "Accuracy"]


def _build_engine(args, parser):
    if args.engine == "classical":
        return ClassicalEngine()
    if not args.weights:
        parser.error("--weights is required with --engine unet")
    return UNetEngine(UNetConfig(), load_weights(args.weights))


def _load_cli_dataset(args):
    root = Path(args.dataset)
    spec = DatasetSpec(
        image_dir=root / "images",
        mask_dir=root / "masks",
        resize=args.size,
    )
    return load_dataset(spec)


def _write_json(path, payload) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _point(args, config) -> GeoPoint:
    lat = config.default_point[0] if args.lat is None else args.lat
    lon = config.default_point[1] if args.lon is None else args.lon
    return GeoPoint(lat, lon)


def cmd_serve(args) -> int:
    import uvicorn

    config = load_config(args.config)
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=config.port, log_level="info")
    return 0


def cmd_fetch(args) -> int:
    config = load_config(args.config)
    pipeline = Pipeline.from_config(config)
    box, meta, processed = pipeline.fetch(_point(args, config))
    log.info("scene %s acquired %s bbox %s", meta.source_id, meta.acquired_at, box)
    if args.out:
        save_png(processed, args.out)
        print(args.out)
    else:
        from .imagery import persist

        record = persist(processed, config.image_dir, config.resolved_base_url)
        print(record.url)
    return 0


def cmd_segment(args) -> int:
    config = load_config(args.config)
    pipeline = Pipeline.from_config(config)
    threshold = config.default_threshold if args.threshold is None else args.threshold
    _, _, processed = pipeline.fetch(_point(args, config))
    prob = pipeline.engine.predict(processed)
    mask = binarize(prob, threshold)
    painted = overlay(processed, mask)
    save_png(painted, args.out)
    fraction = mask.positive_fraction()
    print(f"flood_fraction={fraction!r}")
    print(args.out)
    if args.json:
        _write_json(args.json, {"flood_fraction": fraction, "overlay": str(args.out)})
    return 0


def cmd_eval(args, parser) -> int:
    engine = _build_engine(args, parser)
    dataset = _load_cli_dataset(args)
    report = evaluate_engine(engine, dataset, threshold=args.threshold)
    values = [[getattr(report, attr)] for attr in
              ("iou", "dice", "precision", "recall", "f1", "accuracy")]
    print(render_table("Evaluation", [engine.name], METRIC_ROWS, values))
    if args.json:
        _write_json(args.json, report_to_json([engine.name], METRIC_ROWS, values))
    return 0


def cmd_sweep(args, parser) -> int:
    engine = _build_engine(args, parser)
    dataset = _load_cli_dataset(args)
    thresholds = tuple(args.thresholds)
    maps = [engine.predict(img) for img, _ in dataset]
    gts = [mask for _, mask in dataset]
    sweep = threshold_sweep(maps, gts, thresholds)
    columns = [f"{t:g}" for t in sweep.thresholds]
    display = [f"Threshold {columns[0]}"] + columns[1:]
    attrs = ("iou", "dice", "precision", "recall", "f1", "accuracy")
    values = [
        [getattr(rep, attr) for rep in sweep.reports] for attr in attrs
    ]
    print(
        render_table(
            "Metrics for multiple thresholds", display, METRIC_ROWS, values
        )
    )
    if args.json:
        _write_json(args.json, report_to_json(columns, METRIC_ROWS, values))
    return 0


def cmd_ablate(args, parser) -> int:
    engine = _build_engine(args, parser)
    if args.engine != "unet":
        parser.error("--engine unet is required for ablate")
    dataset = _load_cli_dataset(args)
    layers = args.layers.split(",") if args.layers else engine.layer_names()
    rows = run_ablation(engine, layers, dataset, threshold=args.threshold)
    columns = ["Precision", "Recall", "F1 Score"]
    values = [[row.precision, row.recall, row.f1] for row in rows]
    print(
        render_table(
            "Metrics after layer ablation",
            columns,
            [row.layer for row in rows],
            values,
            corner="Ablated Layer",
        )
    )
    if args.json:
        _write_json(
            args.json, report_to_json(columns, [row.layer for row in rows], values)
        )
    return 0


def cmd_bench(args, parser) -> int:
    engine = _build_engine(args, parser)
    dataset = _load_cli_dataset(args)
    report = time_inference(
        engine,
        [img for img, _ in dataset],
        warmups=args.warmups,
        runs=args.runs,
    )
    values = [[report.mean_ms], [report.std_ms]]
    print(
        render_table(
            "Inference time", [engine.name], ["Mean (ms)", "Std (ms)"], values
        )
    )
    log.info("runs=%d environment=%s", report.n, report.environment)
    if args.json:
        _write_json(
            args.json,
            {
                "mean_ms": report.mean_ms,
                "std_ms": report.std_ms,
                "n": report.n,
                "environment": report.environment,
            },
        )
    return 0


def cmd_interface_eval(args) -> int:
    from .location import (
        Gazetteer,
        GazetteerExtractor,
        GazetteerGeocoder,
        evaluate_interface,
        load_interface_cases,
    )

    gazetteer = Gazetteer.load(args.gazetteer)
    cases = load_interface_cases(args.cases)
    report = evaluate_interface(
        cases, GazetteerExtractor(gazetteer), GazetteerGeocoder(gazetteer)
    )
    rows = ["Extraction Accuracy", "Geocoding Success Rate", "Error Rate"]
    values = [
        [report.extraction_accuracy],
        [report.geocoding_success_rate],
        [report.error_rate],
    ]
    print(render_table("Interface evaluation", ["Value"], rows, values))
    if args.json:
        _write_json(args.json, report_to_json(["Value"], rows, values))
    return 0


def cmd_make_fixtures(args) -> int:
    paths = write_fixtures(args.out, seed=args.seed)
    for key in sorted(paths):
        print(f"{key}: {paths[key]}")
    return 0


def _add_dataset_args(sub, with_threshold=True):
    sub.add_argument("--dataset", required=True, help="directory with images/ and masks/")
    sub.add_argument("--engine", choices=("unet", "classical"), default="classical")
    sub.add_argument("--weights", help="weight archive for --engine unet")
    sub.add_argument("--size", type=int, default=None, help="resize edge length")
    sub.add_argument("--json", help="also write results to this JSON file")
    if with_threshold:
        sub.add_argument("--threshold", type=float, default=0.5)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="floodlense",
        description="Flood segmentation pipeline and evaluation toolkit",
    )
    parser.add_argument("--verbose", action="store_true", help="log at INFO level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--host", default="127.0.0.1")

    p = sub.add_parser("fetch", help="fetch, crop and store the latest scene")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--lat", type=float)
    p.add_argument("--lon", type=float)
    p.add_argument("--out", help="write the processed PNG here instead of the store")

    p = sub.add_parser("segment", help="fetch a scene and write the flood overlay")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--lat", type=float)
    p.add_argument("--lon", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--out", required=True, help="overlay PNG path")
    p.add_argument("--json", help="also write flood_fraction to this JSON file")

    p = sub.add_parser("eval", help="evaluate an engine on a dataset")
    _add_dataset_args(p)

    p = sub.add_parser("sweep", help="metrics across multiple thresholds")
    _add_dataset_args(p, with_threshold=False)
    p.add_argument(
        "--thresholds",
        type=lambda s: [float(x) for x in s.split(",")],
        default=list(DEFAULT_THRESHOLDS),
        help="comma-separated, e.g. 0.3,0.4,0.5,0.6,0.7",
    )

    p = sub.add_parser("ablate", help="re-evaluate with layers zeroed one at a time")
    _add_dataset_args(p)
    p.add_argument("--layers", help="comma-separated layer names; default: all")

    p = sub.add_parser("bench", help="time engine inference")
    _add_dataset_args(p, with_threshold=False)
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--warmups", type=int, default=1)

    p = sub.add_parser("interface-eval", help="score extraction and geocoding")
    p.add_argument("--cases", required=True, help="JSON query fixture")
    p.add_argument("--gazetteer", required=True, help="JSONL gazetteer")
    p.add_argument("--json", help="also write rates to this JSON file")

    p = sub.add_parser("make-fixtures", help="write the synthetic fixture tree")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=42)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )
    handlers = {
        "serve": lambda: cmd_serve(args),
        "fetch": lambda: cmd_fetch(args),
        "segment": lambda: cmd_segment(args),
        "eval": lambda: cmd_eval(args, parser),
        "sweep": lambda: cmd_sweep(args, parser),
        "ablate": lambda: cmd_ablate(args, parser),
        "bench": lambda: cmd_bench(args, parser),
        "interface-eval": lambda: cmd_interface_eval(args),
        "make-fixtures": lambda: cmd_make_fixtures(args),
    }
    try:
        return handlers[args.command]()
    except (FloodLenseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
