"""Quantitative machinery: confusion-count metrics, threshold sweeps,
inference timing, ablation runs, dataset loading, and text/JSON report
rendering.

Aggregation across a dataset is micro: confusion counts are summed over all
images first, then metrics are computed once. Any metric whose denominator
is zero is Undefined (None in Python, null in JSON, "undefined" in text),
never coerced to 0 or 1.
"""

from __future__ import annotations

import platform
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DecodeError, InvalidInput, MissingMask, ShapeMismatch, UnknownLayer
from .raster_geo import (
    BinaryMask,
    ImageRaster,
    ProbabilityMap,
    load_png,
    nearest_resize,
    nearest_resize_mask,
    normalize,
)
from .segmentation import ablate, binarize

DEFAULT_THRESHOLDS = (0.3, 0.4, 0.5, 0.6, 0.7)

Metric = float | None  # None = Undefined (0/0 denominator)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise InvalidInput(f"{name} must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            self.tp + other.tp,
            self.fp + other.fp,
            self.fn + other.fn,
            self.tn + other.tn,
        )


@dataclass(frozen=True)
class MetricsReport:
    iou: Metric
    dice: Metric
    precision: Metric
    recall: Metric
    f1: Metric
    accuracy: Metric

    def as_dict(self) -> dict[str, Metric]:
        return {
            "IoU": self.iou,
            "Dice": self.dice,
            "Precision": self.precision,
            "Recall": self.recall,
            "F1 Score": self.f1,
            "Accuracy": self.accuracy,
        }


def confusion(pred: BinaryMask, gt: BinaryMask) -> ConfusionCounts:
    if (pred.height, pred.width) != (gt.height, gt.width):
        raise ShapeMismatch(
            f"pred {pred.height}x{pred.width} vs gt {gt.height}x{gt.width}"
        )
    p = pred.bits
    g = gt.bits
    return ConfusionCounts(
        tp=int(np.count_nonzero(p & g)),
        fp=int(np.count_nonzero(p & ~g)),
        fn=int(np.count_nonzero(~p & g)),
        tn=int(np.count_nonzero(~p & ~g)),
    )


def _ratio(num: int | float, den: int | float) -> Metric:
    if den == 0:
        return None
    return num / den


def metrics(c: ConfusionCounts) -> MetricsReport:
    """Standard confusion-count metrics; 0/0 denominators yield Undefined."""
    precision = _ratio(c.tp, c.tp + c.fp)
    recall = _ratio(c.tp, c.tp + c.fn)
    if precision is None or recall is None:
        f1 = None
    else:
        f1 = _ratio(2.0 * precision * recall, precision + recall)
    return MetricsReport(
        iou=_ratio(c.tp, c.tp + c.fp + c.fn),
        dice=_ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn),
        precision=precision,
        recall=recall,
        f1=f1,
        accuracy=_ratio(c.tp + c.tn, c.total),
    )


@dataclass(frozen=True)
class SweepReport:
    """Ordered threshold -> MetricsReport, with the aggregate confusion kept
    around so predicted-positive counts are inspectable."""

    thresholds: tuple[float, ...]
    reports: tuple[MetricsReport, ...]
    counts: tuple[ConfusionCounts, ...]

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise InvalidInput("thresholds must be strictly increasing")
        if not (len(self.thresholds) == len(self.reports) == len(self.counts)):
            raise InvalidInput("threshold/report/count lengths differ")

    def items(self):
        return list(zip(self.thresholds, self.reports))


def threshold_sweep(
    maps: list[ProbabilityMap],
    gts: list[BinaryMask],
    thresholds=DEFAULT_THRESHOLDS,
) -> SweepReport:
    """Micro-aggregated metrics per threshold over aligned map/mask pairs."""
    if len(maps) != len(gts):
        raise ShapeMismatch(f"{len(maps)} maps vs {len(gts)} ground-truth masks")
    thresholds = tuple(thresholds)
    reports = []
    counts = []
    for t in thresholds:
        agg = ConfusionCounts(0, 0, 0, 0)
        for pm, gt in zip(maps, gts):
            agg = agg + confusion(binarize(pm, t), gt)
        counts.append(agg)
        reports.append(metrics(agg))
    return SweepReport(thresholds, tuple(reports), tuple(counts))


@dataclass(frozen=True)
class TimingReport:
    mean_ms: float
    std_ms: float
    n: int
    environment: str = field(default_factory=platform.platform)

    def __post_init__(self):
        if self.n < 1:
            raise InvalidInput("run count must be >= 1")
        if self.mean_ms < 0:
            raise InvalidInput("mean must be non-negative")


def time_inference(
    engine,
    inputs: list[ImageRaster],
    warmups: int = 1,
    runs: int = 10,
    clock=time.perf_counter,
) -> TimingReport:
    """Wall-clock milliseconds per predict call, cycling through inputs.

    Warmup calls are excluded. std is the sample standard deviation
    (ddof=1), defined as 0 for a single run. The clock is injectable so
    tests can use a deterministic one.
    """
    if runs < 1:
        raise InvalidInput(f"runs must be >= 1, got {runs}")
    if not inputs:
        raise InvalidInput("need at least one input")
    for i in range(warmups):
        engine.predict(inputs[i % len(inputs)])
    samples = []
    for i in range(runs):
        img = inputs[i % len(inputs)]
        t0 = clock()
        engine.predict(img)
        t1 = clock()
        samples.append((t1 - t0) * 1000.0)
    arr = np.asarray(samples, dtype=np.float64)
    std = float(arr.std(ddof=1)) if runs > 1 else 0.0
    return TimingReport(mean_ms=float(arr.mean()), std_ms=std, n=runs)


@dataclass(frozen=True)
class AblationRow:
    layer: str
    precision: Metric
    recall: Metric
    f1: Metric


def run_ablation(
    engine,
    layers: list[str],
    dataset: list[tuple[ImageRaster, BinaryMask]],
    threshold: float = 0.5,
) -> list[AblationRow]:
    """Zero each named layer in turn and re-evaluate over the dataset."""
    for layer in layers:
        if not any(
            n == layer or n.startswith(layer + ".") for n in engine.weights.names()
        ):
            raise UnknownLayer(f"engine {engine.name!r} has no layer {layer!r}")
    rows = []
    for layer in layers:
        crippled = ablate(engine, layer)
        agg = ConfusionCounts(0, 0, 0, 0)
        for img, gt in dataset:
            agg = agg + confusion(binarize(crippled.predict(img), threshold), gt)
        m = metrics(agg)
        rows.append(AblationRow(layer, m.precision, m.recall, m.f1))
    return rows


def evaluate_engine(
    engine,
    dataset: list[tuple[ImageRaster, BinaryMask]],
    threshold: float = 0.5,
) -> MetricsReport:
    """Micro-aggregated metrics for one engine at one threshold."""
    agg = ConfusionCounts(0, 0, 0, 0)
    for img, gt in dataset:
        agg = agg + confusion(binarize(engine.predict(img), threshold), gt)
    return metrics(agg)


# ---------------------------------------------------------------------------
# dataset loading
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DatasetSpec:
    image_dir: Path
    mask_dir: Path
    resize: int | None = None  # None keeps the stored resolution

    def __post_init__(self):
        if self.resize is not None and self.resize < 1:
            raise InvalidInput(f"resize must be >= 1, got {self.resize}")


def load_dataset(spec: DatasetSpec) -> list[tuple[ImageRaster, BinaryMask]]:
    """Load image/mask pairs matched by stem, resized and normalized.

    Mask pixels are positive wherever the stored value is > 0.
    """
    image_dir = Path(spec.image_dir)
    mask_dir = Path(spec.mask_dir)
    if not image_dir.is_dir():
        raise InvalidInput(f"image dir does not exist: {image_dir}")
    if not mask_dir.is_dir():
        raise InvalidInput(f"mask dir does not exist: {mask_dir}")
    pairs = []
    for img_path in sorted(image_dir.glob("*.png")):
        mask_path = mask_dir / img_path.name
        if not mask_path.exists():
            raise MissingMask(f"no mask for image stem {img_path.stem!r}")
        try:
            img = load_png(img_path)
            mask_raster = load_png(mask_path)
        except Exception as exc:
            raise DecodeError(f"cannot decode {img_path.stem!r}: {exc}") from exc
        mask = BinaryMask(np.any(mask_raster.pixels > 0, axis=2))
        if spec.resize is not None:
            img = nearest_resize(img, spec.resize, spec.resize)
            mask = nearest_resize_mask(mask, spec.resize, spec.resize)
        pairs.append((normalize(img), mask))
    return pairs


# ---------------------------------------------------------------------------
# report rendering
# ---------------------------------------------------------------------------


def _format_cell(value) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, str):
        return value
    return f"{value:.5f}"


def render_table(
    title: str,
    columns: list[str],
    rows: list[str],
    values: list[list],
    corner: str = "Metric",
) -> str:
    """Fixed-width text table; numbers get 5 decimals, Undefined prints as
    "undefined". ``values`` is a rows x columns grid."""
    if len(values) != len(rows) or any(len(r) != len(columns) for r in values):
        raise ShapeMismatch(
            f"value grid must be {len(rows)}x{len(columns)} for the given labels"
        )
    cells = [[corner] + list(columns)]
    for label, row in zip(rows, values):
        cells.append([label] + [_format_cell(v) for v in row])
    widths = [max(len(r[j]) for r in cells) for j in range(len(columns) + 1)]
    lines = [title]
    header = " | ".join(c.ljust(w) for c, w in zip(cells[0], widths))
    lines.append(header.rstrip())
    lines.append("-+-".join("-" * w for w in widths))
    for row in cells[1:]:
        lines.append(" | ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def report_to_json(columns: list[str], rows: list[str], values: list[list]) -> dict:
    """{"metric": {"model": value | null}} mirror of a rendered table."""
    if len(values) != len(rows) or any(len(r) != len(columns) for r in values):
        raise ShapeMismatch("value grid does not match row/column labels")
    return {
        row: {col: values[i][j] for j, col in enumerate(columns)}
        for i, row in enumerate(rows)
    }


def load_reported_tables() -> dict:
    """Bundled published-results fixtures, keyed by table name. Each entry
    carries title/corner/columns/rows/values ready for render_table."""
    import importlib.resources as resources
    import json

    path = resources.files("floodlense").joinpath("data/reported_results.json")
    return json.loads(path.read_text(encoding="utf-8"))


def render_reported_table(name: str) -> str:
    tables = load_reported_tables()
    if name not in tables:
        raise InvalidInput(f"unknown reported table {name!r}; have {sorted(tables)}")
    t = tables[name]
    return render_table(
        t["title"], t["columns"], t["rows"], t["values"], corner=t["corner"]
    )
