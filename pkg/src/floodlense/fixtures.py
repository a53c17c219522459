"""Deterministic synthetic fixtures: a toy dataset, gazetteer, tile store,
weight archives, interface-evaluation queries, and a ready-to-run service
config. Everything derives from one seed so the whole test suite and demo
run with zero network access; paths inside the emitted config are relative
to the config file, keeping output byte-reproducible across roots.
"""

from __future__ import annotations

import json
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .config import DEFAULT_POINT
from .imagery import cell_id, format_scene_stamp
from .raster_geo import BinaryMask, ImageRaster, save_png
from .segmentation import UNetConfig, random_weights, zero_weights
from .weights import save_weights

GAZETTEER_PLACES = [
    {"name": "Chennai", "aliases": ["Madras"], "lat": 13.0827, "lon": 80.2707},
    {"name": "Mumbai", "aliases": ["Bombay"], "lat": 19.0760, "lon": 72.8777},
    {"name": "Delhi", "aliases": [], "lat": 28.7041, "lon": 77.1025},
    {"name": "Kolkata", "aliases": ["Calcutta"], "lat": 22.5726, "lon": 88.3639},
    {"name": "London", "aliases": [], "lat": 51.5074, "lon": -0.1278},
    {"name": "Paris", "aliases": [], "lat": 48.8566, "lon": 2.3522},
    {"name": "Tokyo", "aliases": [], "lat": 35.6762, "lon": 139.6503},
    {"name": "Japan", "aliases": [], "lat": 36.5748, "lon": 139.2394},
    {"name": "India", "aliases": [], "lat": 22.3511, "lon": 78.6677},
    {"name": "New York", "aliases": [], "lat": 40.7128, "lon": -74.0060},
    {"name": "Cairo", "aliases": [], "lat": 30.0444, "lon": 31.2357},
    {"name": "Sydney", "aliases": [], "lat": -33.8688, "lon": 151.2093},
    {"name": "Berlin", "aliases": [], "lat": 52.5200, "lon": 13.4050},
    {"name": "Madrid", "aliases": [], "lat": 40.4168, "lon": -3.7038},
    {"name": "Venice", "aliases": [], "lat": 45.4408, "lon": 12.3155},
    {"name": "Jakarta", "aliases": [], "lat": -6.2088, "lon": 106.8456},
    {"name": "Bangkok", "aliases": [], "lat": 13.7563, "lon": 100.5018},
    {"name": "Miami", "aliases": [], "lat": 25.7617, "lon": -80.1918},
    {"name": "Houston", "aliases": [], "lat": 29.7604, "lon": -95.3698},
    {"name": "Lagos", "aliases": [], "lat": 6.5244, "lon": 3.3792},
]

INTERFACE_CASES = [
    {"query": "What is the Flood Situation in Chhheennai", "expected": "Chennai"},
    {"query": "Tsunami alerts for the coast of Japan", "expected": "Japan"},
    {"query": "Flood risk near Atlantis", "expected": "Atlantis", "geocodable": False},
    {
        "query": "Weather forecast for Mount Everest",
        "expected": "Mount Everest",
        "geocodable": False,
    },
    {"query": "hello there", "expected": None},
    {"query": "Is Mumbai flooded right now?", "expected": "Mumbai"},
    {"query": "Show me water levels in London", "expected": "London"},
    {"query": "Flood status for Paris after the storm", "expected": "Paris"},
    {"query": "How bad is the flooding in Tokyo today", "expected": "Tokyo"},
    {"query": "Heavy rain reported across Delhi", "expected": "Delhi"},
    {"query": "Is Kolkata underwater", "expected": "Kolkata"},
    {"query": "Storm surge near Miami beach", "expected": "Miami"},
    {"query": "Evacuation notice for New York", "expected": "New York"},
    {"query": "Flod situation in Sydnee", "expected": "Sydney"},
    {"query": "Waterlogging complaints from Bangkok", "expected": "Bangkok"},
    {"query": "Has the Nile flooded in Cairo", "expected": "Cairo"},
    {"query": "Flooding around Jakarta harbour", "expected": "Jakarta"},
    {"query": "Berliin flood warnings", "expected": "Berlin"},
    {"query": "Water rising fast in Lnd", "expected": "London"},
    {"query": "Venice canals overflowing again", "expected": "Venice"},
]

SCENE_STAMPS = [
    datetime(2024, 11, 1, 0, 0, 0, tzinfo=timezone.utc),
    datetime(2024, 11, 5, 6, 30, 0, tzinfo=timezone.utc),
    datetime(2024, 11, 12, 12, 0, 0, tzinfo=timezone.utc),
]


def _smooth_field(rng: np.random.Generator, size: int, coarse: int = 8) -> np.ndarray:
    """Blocky random field in [0, 1] via nearest-upsampled coarse noise."""
    noise = rng.random((coarse, coarse))
    reps = size // coarse
    return np.repeat(np.repeat(noise, reps, axis=0), reps, axis=1)


def _scene_image(
    rng: np.random.Generator, height: int, width: int, water_frac: float
) -> ImageRaster:
    """Coastal-looking RGB test scene: land on the left, water on the right."""
    xs = np.linspace(0.0, 1.0, width)[None, :] + 0.08 * np.sin(
        np.linspace(0, 6.0, height)
    )[:, None]
    water = xs > (1.0 - water_frac)
    img = np.zeros((height, width, 3), dtype=np.float64)
    img[..., 0] = np.where(water, 25, 150)
    img[..., 1] = np.where(water, 80, 120)
    img[..., 2] = np.where(water, 170, 60)
    img += rng.normal(0.0, 12.0, size=img.shape)
    return ImageRaster(np.clip(img, 0, 255).astype(np.uint8))


def _dataset_pair(
    rng: np.random.Generator, size: int
) -> tuple[ImageRaster, BinaryMask]:
    field = _smooth_field(rng, size)
    mask = field > 0.55
    img = np.zeros((size, size, 3), dtype=np.float64)
    img[..., 0] = np.where(mask, 35, 145)
    img[..., 1] = np.where(mask, 85, 115)
    img[..., 2] = np.where(mask, 170, 65)
    img += rng.normal(0.0, 10.0, size=img.shape)
    raster = ImageRaster(np.clip(img, 0, 255).astype(np.uint8))
    return raster, BinaryMask(mask)


def write_fixtures(root, seed: int = 42, dataset_pairs: int = 6, dataset_size: int = 64):
    """Generate the full fixture tree under root. Same seed, same bytes."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    image_dir = root / "dataset" / "images"
    mask_dir = root / "dataset" / "masks"
    image_dir.mkdir(parents=True, exist_ok=True)
    mask_dir.mkdir(parents=True, exist_ok=True)
    for i in range(dataset_pairs):
        img, mask = _dataset_pair(rng, dataset_size)
        save_png(img, image_dir / f"sample{i:02d}.png")
        mask_img = ImageRaster(mask.bits[..., None].astype(np.uint8) * 255)
        save_png(mask_img, mask_dir / f"sample{i:02d}.png")

    gaz_path = root / "gazetteer.jsonl"
    with open(gaz_path, "w", encoding="utf-8") as fh:
        for place in GAZETTEER_PLACES:
            fh.write(json.dumps(place) + "\n")

    tile_root = root / "tiles"
    cell = cell_id(*DEFAULT_POINT)
    cell_dir = tile_root / cell
    cell_dir.mkdir(parents=True, exist_ok=True)
    for stamp, frac in zip(SCENE_STAMPS, (0.30, 0.38, 0.45)):
        scene = _scene_image(rng, 200, 300, frac)
        save_png(scene, cell_dir / f"{format_scene_stamp(stamp)}.png")

    weight_dir = root / "weights"
    weight_dir.mkdir(parents=True, exist_ok=True)
    cfg = UNetConfig()
    save_weights(random_weights(cfg, seed=seed), weight_dir / "unet_random.flwt")
    save_weights(zero_weights(cfg), weight_dir / "unet_zero.flwt")

    cases_path = root / "interface_cases.json"
    cases_path.write_text(
        json.dumps(INTERFACE_CASES, indent=2) + "\n", encoding="utf-8"
    )

    config = {
        "image_dir": "images_store",
        "gazetteer_path": "gazetteer.jsonl",
        "tile_root": "tiles",
        "weight_path": "weights/unet_random.flwt",
        "backend_mode": "fixture",
        "engine": "unet",
        "image_size": 128,
        "default_point": list(DEFAULT_POINT),
        "default_threshold": 0.5,
        "half_extent_deg": 0.05,
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config, indent=2) + "\n", encoding="utf-8")

    return {
        "dataset": root / "dataset",
        "gazetteer": gaz_path,
        "tiles": tile_root,
        "weights": weight_dir,
        "interface_cases": cases_path,
        "config": config_path,
    }
