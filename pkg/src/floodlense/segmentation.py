"""Flood probability maps from scenes: UNet forward pass and the classical
index + Otsu baseline, plus binarization, overlay, ablation, and activation
introspection.

The UNet here is inference-only and runs on plain numpy. Topology is the
symmetric encoder-decoder with skip connections: per encoder level two 3x3
conv + ReLU, 2x2 max-pool between levels; per decoder level a 2x nearest
upsample, a 3x3 conv to halve channels, channel concatenation with the
matching encoder output, then two 3x3 conv + ReLU; a 1x1 conv head squashed
through a logistic gives the per-pixel water probability.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from .errors import (
    BadDimensions,
    EmptyHistogram,
    InvalidInput,
    ShapeMismatch,
    UnknownLayer,
    WeightMismatch,
)
from .raster_geo import BinaryMask, ImageRaster, ProbabilityMap, normalize
from .weights import WeightArchive, WeightEntry

NEAR_ZERO_TOL = 1e-6


# ---------------------------------------------------------------------------
# numeric kernels
# ---------------------------------------------------------------------------


def conv2d(
    x: np.ndarray, kernel: np.ndarray, stride: int = 1, zero_pad: int = 0
) -> np.ndarray:
    """Cross-correlate an HxWxC input with a khxkwxCxF kernel.

    Zero padding is applied symmetrically; output spatial dims are
    floor((H + 2p - kh) / stride) + 1. Kernel spatial dims must be odd.
    The result dtype follows numpy promotion of the operands.
    """
    if x.ndim != 3:
        raise ShapeMismatch(f"input must be HxWxC, got shape {x.shape}")
    if kernel.ndim != 4:
        raise ShapeMismatch(f"kernel must be khxkwxCxF, got shape {kernel.shape}")
    kh, kw, kc, nf = kernel.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise InvalidInput(f"kernel spatial dims must be odd, got {kh}x{kw}")
    if stride < 1:
        raise InvalidInput(f"stride must be >= 1, got {stride}")
    if zero_pad < 0:
        raise InvalidInput(f"zero_pad must be >= 0, got {zero_pad}")
    if kc != x.shape[2]:
        raise ShapeMismatch(
            f"kernel expects {kc} input channels, input has {x.shape[2]}"
        )
    h, w, c = x.shape
    if h + 2 * zero_pad < kh or w + 2 * zero_pad < kw:
        raise ShapeMismatch(
            f"padded input {h + 2 * zero_pad}x{w + 2 * zero_pad} smaller "
            f"than kernel {kh}x{kw}"
        )
    if zero_pad:
        x = np.pad(x, ((zero_pad, zero_pad), (zero_pad, zero_pad), (0, 0)))
    win = sliding_window_view(x, (kh, kw), axis=(0, 1))[::stride, ::stride]
    oh, ow = win.shape[:2]
    # (oh, ow, C, kh, kw) -> rows ordered (kh, kw, C) to match kernel layout
    cols = win.transpose(0, 1, 3, 4, 2).reshape(oh * ow, kh * kw * kc)
    out = cols @ kernel.reshape(kh * kw * kc, nf)
    return out.reshape(oh, ow, nf)


def max_pool2(x: np.ndarray) -> np.ndarray:
    h, w, c = x.shape
    if h % 2 or w % 2:
        raise BadDimensions(f"2x2 max-pool needs even dims, got {h}x{w}")
    return x.reshape(h // 2, 2, w // 2, 2, c).max(axis=(1, 3))


def upsample_nearest2(x: np.ndarray) -> np.ndarray:
    return np.repeat(np.repeat(x, 2, axis=0), 2, axis=1)


def relu(x: np.ndarray) -> np.ndarray:
    return np.maximum(x, 0.0)


# ---------------------------------------------------------------------------
# UNet topology
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UNetConfig:
    levels: int = 4
    base_channels: int = 16
    in_channels: int = 3
    out_channels: int = 1

    def __post_init__(self):
        if self.levels < 1:
            raise InvalidInput(f"levels must be >= 1, got {self.levels}")
        for name in ("base_channels", "in_channels", "out_channels"):
            if getattr(self, name) < 1:
                raise InvalidInput(f"{name} must be >= 1")

    @property
    def downsample_factor(self) -> int:
        return 2 ** (self.levels - 1)


@dataclass(frozen=True)
class LayerSpec:
    name: str
    kernel: tuple[int, int]
    in_channels: int
    out_channels: int
    activation: str  # "relu" | "linear" | "logistic"


def layer_specs(cfg: UNetConfig) -> tuple[LayerSpec, ...]:
    """Named conv layers in forward order for the given topology."""
    specs: list[LayerSpec] = []
    ch = cfg.in_channels
    enc_out = []
    for i in range(1, cfg.levels + 1):
        out = cfg.base_channels * 2 ** (i - 1)
        specs.append(LayerSpec(f"enc{i}.conv1", (3, 3), ch, out, "relu"))
        specs.append(LayerSpec(f"enc{i}.conv2", (3, 3), out, out, "relu"))
        enc_out.append(out)
        ch = out
    for j in range(1, cfg.levels):
        skip = enc_out[cfg.levels - 1 - j]
        specs.append(LayerSpec(f"dec{j}.up", (3, 3), ch, skip, "linear"))
        specs.append(LayerSpec(f"dec{j}.conv1", (3, 3), 2 * skip, skip, "relu"))
        specs.append(LayerSpec(f"dec{j}.conv2", (3, 3), skip, skip, "relu"))
        ch = skip
    specs.append(LayerSpec("head", (1, 1), ch, cfg.out_channels, "logistic"))
    return tuple(specs)


def expected_entry_shapes(cfg: UNetConfig) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {}
    for spec in layer_specs(cfg):
        kh, kw = spec.kernel
        shapes[f"{spec.name}.weight"] = (kh, kw, spec.in_channels, spec.out_channels)
        shapes[f"{spec.name}.bias"] = (spec.out_channels,)
    return shapes


def zero_weights(cfg: UNetConfig) -> WeightArchive:
    entries = [
        WeightEntry(name, shape, np.zeros(shape, dtype=np.float32))
        for name, shape in expected_entry_shapes(cfg).items()
    ]
    return WeightArchive(tuple(entries))


def random_weights(cfg: UNetConfig, seed: int = 0) -> WeightArchive:
    """He-scaled random conv weights with zero biases, reproducible by seed."""
    rng = np.random.default_rng(seed)
    entries = []
    for name, shape in expected_entry_shapes(cfg).items():
        if name.endswith(".bias"):
            vals = np.zeros(shape, dtype=np.float32)
        else:
            kh, kw, cin, _ = shape
            std = np.sqrt(2.0 / (kh * kw * cin))
            vals = rng.normal(0.0, std, size=shape).astype(np.float32)
        entries.append(WeightEntry(name, shape, vals))
    return WeightArchive(tuple(entries))


def _validated_weights(cfg: UNetConfig, weights: WeightArchive) -> dict[str, np.ndarray]:
    expected = expected_entry_shapes(cfg)
    got = weights.as_dict()
    missing = sorted(set(expected) - set(got))
    extra = sorted(set(got) - set(expected))
    if missing or extra:
        raise WeightMismatch(
            f"archive does not match topology (missing={missing}, extra={extra})"
        )
    for name, shape in expected.items():
        if got[name].shape != shape:
            raise WeightMismatch(
                f"entry {name} has shape {got[name].shape}, expected {shape}"
            )
    return got


def _forward(
    cfg: UNetConfig,
    w: dict[str, np.ndarray],
    x: np.ndarray,
    record=None,
) -> np.ndarray:
    def layer(name: str, inp: np.ndarray, pad: int, act: str) -> np.ndarray:
        out = conv2d(inp, w[f"{name}.weight"], stride=1, zero_pad=pad)
        out = out + w[f"{name}.bias"]
        if act == "relu":
            out = relu(out)
        elif act == "logistic":
            out = expit(out)
        if record is not None:
            record(name, out)
        return out

    skips = []
    for i in range(1, cfg.levels + 1):
        x = layer(f"enc{i}.conv1", x, 1, "relu")
        x = layer(f"enc{i}.conv2", x, 1, "relu")
        if i < cfg.levels:
            skips.append(x)
            x = max_pool2(x)
    for j in range(1, cfg.levels):
        x = upsample_nearest2(x)
        x = layer(f"dec{j}.up", x, 1, "linear")
        x = np.concatenate([x, skips[cfg.levels - 1 - j]], axis=2)
        x = layer(f"dec{j}.conv1", x, 1, "relu")
        x = layer(f"dec{j}.conv2", x, 1, "relu")
    return layer("head", x, 0, "logistic")


def unet_forward(
    cfg: UNetConfig, weights: WeightArchive, img: ImageRaster
) -> ProbabilityMap:
    """Run the encoder-decoder on a normalized raster.

    Input dims must be divisible by 2^(levels-1) so pooled feature maps stay
    integral; the output map has the input's height and width.
    """
    if not img.normalized:
        raise InvalidInput("unet_forward expects a normalized raster")
    if img.channels != cfg.in_channels:
        raise BadDimensions(
            f"raster has {img.channels} channels, topology expects {cfg.in_channels}"
        )
    f = cfg.downsample_factor
    if img.height % f or img.width % f:
        raise BadDimensions(
            f"dims {img.height}x{img.width} not divisible by {f} "
            f"(levels={cfg.levels})"
        )
    w = _validated_weights(cfg, weights)
    out = _forward(cfg, w, img.as_float())
    probs = np.clip(out[:, :, 0], 0.0, 1.0)
    return ProbabilityMap(probs)


# ---------------------------------------------------------------------------
# classical baseline: normalized-difference index + Otsu
# ---------------------------------------------------------------------------


def water_index(img: ImageRaster, band_a: int, band_b: int) -> ProbabilityMap:
    """Normalized-difference water index (a-b)/(a+b), rescaled from [-1, 1]
    to [0, 1]. Pixels where a+b = 0 map to 0.5."""
    a = img.channel(band_a).astype(np.float64)
    b = img.channel(band_b).astype(np.float64)
    s = a + b
    with np.errstate(divide="ignore", invalid="ignore"):
        idx = np.where(s == 0.0, 0.0, (a - b) / np.where(s == 0.0, 1.0, s))
    return ProbabilityMap(((idx + 1.0) / 2.0).astype(np.float32))


def otsu_threshold(hist) -> int:
    """Split bin t* in 1..256 maximizing between-class variance
    w0 * w1 * (mu0 - mu1)^2 over {bins < t} vs {bins >= t}.

    Ties break toward the smallest t, so a histogram that cannot be split
    (all mass in one bin) yields t = 1.
    """
    counts = np.asarray(hist, dtype=np.int64)
    if counts.shape != (256,):
        raise InvalidInput(f"expected a 256-bin histogram, got shape {counts.shape}")
    if np.any(counts < 0):
        raise InvalidInput("histogram counts must be non-negative")
    total = int(counts.sum())
    if total == 0:
        raise EmptyHistogram("histogram has zero total count")
    bins = np.arange(256, dtype=np.int64)
    cum = np.cumsum(counts)  # n0 for split t = index + 1
    cum_w = np.cumsum(counts * bins)  # s0 for split t = index + 1
    n0 = cum.astype(np.float64)
    n1 = (total - cum).astype(np.float64)
    s0 = cum_w.astype(np.float64)
    s1 = (cum_w[-1] - cum_w).astype(np.float64)
    valid = (cum > 0) & (cum < total)
    w0 = n0 / total
    w1 = n1 / total
    with np.errstate(divide="ignore", invalid="ignore"):
        mu0 = s0 / n0
        mu1 = s1 / n1
        bcv = np.where(valid, w0 * w1 * (mu0 - mu1) ** 2, 0.0)
    return int(np.argmax(bcv)) + 1


def between_class_variance(hist, t: int) -> float:
    """The variance otsu_threshold maximizes, for one candidate split."""
    counts = np.asarray(hist, dtype=np.int64)
    total = int(counts.sum())
    if total == 0:
        raise EmptyHistogram("histogram has zero total count")
    bins = np.arange(256, dtype=np.int64)
    n0 = int(counts[:t].sum())
    n1 = total - n0
    if n0 == 0 or n1 == 0:
        return 0.0
    mu0 = float((counts[:t] * bins[:t]).sum()) / n0
    mu1 = float((counts[t:] * bins[t:]).sum()) / n1
    return (n0 / total) * (n1 / total) * (mu0 - mu1) ** 2


def map_histogram(pm: ProbabilityMap) -> np.ndarray:
    """256-bin histogram of a probability map (bin = floor(v * 256), capped)."""
    idx = np.minimum((pm.values * 256.0).astype(np.int64), 255)
    return np.bincount(idx.ravel(), minlength=256)


def otsu_cut(pm: ProbabilityMap) -> float:
    """Automatic threshold for a map: the Otsu split bin mapped back to [0, 1]."""
    t = otsu_threshold(map_histogram(pm))
    return t / 256.0


# ---------------------------------------------------------------------------
# binarize / overlay
# ---------------------------------------------------------------------------


def binarize(pm: ProbabilityMap, threshold: float) -> BinaryMask:
    """Pixel is water iff p >= threshold (>= keeps the all-0.5 case stable)."""
    if not 0.0 < threshold < 1.0:
        raise InvalidInput(f"threshold must lie in (0, 1), got {threshold}")
    return BinaryMask(pm.values >= threshold)


def overlay(
    img: ImageRaster,
    mask: BinaryMask,
    color: tuple[int, int, int] = (255, 0, 0),
    alpha: float = 0.5,
) -> ImageRaster:
    """Blend masked pixels toward color: round((1-alpha)*pixel + alpha*color).

    Unmasked pixels pass through untouched. Rounding is half-up.
    """
    if img.channels != 3:
        raise ShapeMismatch(f"overlay needs a 3-channel raster, got {img.channels}")
    if (img.height, img.width) != (mask.height, mask.width):
        raise ShapeMismatch(
            f"raster {img.height}x{img.width} vs mask {mask.height}x{mask.width}"
        )
    if not 0.0 <= alpha <= 1.0:
        raise InvalidInput(f"alpha must lie in [0, 1], got {alpha}")
    base = img.to_uint8().pixels.astype(np.float64)
    tint = np.array(color, dtype=np.float64)
    blended = np.floor((1.0 - alpha) * base + alpha * tint + 0.5)
    out = np.where(mask.bits[:, :, None], blended, base).astype(np.uint8)
    return ImageRaster(out, normalized=False)


# ---------------------------------------------------------------------------
# engines
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UNetEngine:
    """Immutable UNet predictor; safe to share across request handlers."""

    cfg: UNetConfig
    weights: WeightArchive
    name: str = "unet"
    kind: str = field(default="unet", init=False)

    def __post_init__(self):
        _validated_weights(self.cfg, self.weights)

    def predict(self, img: ImageRaster) -> ProbabilityMap:
        if not img.normalized:
            img = normalize(img)
        return unet_forward(self.cfg, self.weights, img)

    def layer_names(self) -> tuple[str, ...]:
        return tuple(spec.name for spec in layer_specs(self.cfg))


@dataclass(frozen=True)
class ClassicalEngine:
    """Normalized-difference index over a fixed channel pair.

    True SWIR is unavailable in 3-channel imagery, so the default pair is
    (green, red); pass other bands for multi-band inputs.
    """

    band_a: int = 1
    band_b: int = 0
    name: str = "classical"
    kind: str = field(default="classical", init=False)

    def predict(self, img: ImageRaster) -> ProbabilityMap:
        return water_index(img, self.band_a, self.band_b)

    def layer_names(self) -> tuple[str, ...]:
        return ()


def ablate(engine, layer: str):
    """New engine with the named layer's weights and biases zeroed.

    ``layer`` may be a conv layer ("enc1.conv2"), a whole block ("enc1"), or
    the head. The original engine is untouched.
    """
    targets = [
        name
        for name in getattr(engine, "weights", WeightArchive(())).names()
        if name == layer or name.startswith(layer + ".")
    ]
    if not targets:
        raise UnknownLayer(f"engine {engine.name!r} has no layer {layer!r}")
    entries = tuple(
        WeightEntry(e.name, e.shape, np.zeros(e.shape, dtype=np.float32))
        if e.name in targets
        else e
        for e in engine.weights.entries
    )
    return UNetEngine(engine.cfg, WeightArchive(entries), name=f"{engine.name}-{layer}")


@dataclass(frozen=True)
class LayerActivation:
    name: str
    shape: tuple[int, ...]
    mean: float
    near_zero_fraction: float


@dataclass(frozen=True)
class ActivationStats:
    entries: tuple[LayerActivation, ...]


def activation_stats(engine: UNetEngine, img: ImageRaster) -> ActivationStats:
    """Per-layer output statistics in forward order, for sparsity inspection."""
    if engine.kind != "unet":
        raise InvalidInput("activation stats are only defined for unet engines")
    if not img.normalized:
        img = normalize(img)
    if img.height % engine.cfg.downsample_factor or img.width % engine.cfg.downsample_factor:
        raise BadDimensions(
            f"dims {img.height}x{img.width} not divisible by "
            f"{engine.cfg.downsample_factor}"
        )
    collected: list[LayerActivation] = []

    def record(name: str, out: np.ndarray):
        collected.append(
            LayerActivation(
                name=name,
                shape=out.shape,
                mean=float(out.mean()),
                near_zero_fraction=float(
                    np.count_nonzero(np.abs(out) <= NEAR_ZERO_TOL) / out.size
                ),
            )
        )

    w = _validated_weights(engine.cfg, engine.weights)
    _forward(engine.cfg, w, img.as_float(), record=record)
    return ActivationStats(tuple(collected))
