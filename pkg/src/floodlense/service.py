"""HTTP service: natural-language flood queries in, segmented imagery URLs out.

Endpoints
    GET  /download_image?lat&lon          -> {"image_url"}
    GET  /segment?lat&lon&threshold       -> {"image_url", "overlay_url", "flood_fraction"}
    POST /query {"text": ...}             -> QueryResult JSON
    GET  /images/<name>                   -> PNG bytes

Failures never escape as stack traces; every error class maps to a fixed
status: 400 malformed input, 404 nothing found, 422 no location in the
text, 500 broken weights, 502 upstream trouble.
"""

from __future__ import annotations

import json
import logging
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from fastapi import FastAPI, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .config import ServiceConfig
from .errors import (
    BackendUnavailable,
    FloodLenseError,
    InvalidInput,
    NoLocationFound,
    NoSceneAvailable,
    NotFound,
    ServiceError,
    WeightMismatch,
)
from .imagery import (
    FixtureTileStore,
    SentinelTileClient,
    fetch_latest,
    persist,
    process_scene,
)
from .location import (
    Gazetteer,
    GazetteerExtractor,
    GazetteerGeocoder,
    NominatimClient,
    extract_location,
    geocode,
)
from .raster_geo import GeoPoint, bbox_around
from .segmentation import (
    ClassicalEngine,
    UNetConfig,
    UNetEngine,
    binarize,
    overlay,
    random_weights,
)
from .weights import load_weights

log = logging.getLogger("floodlense.service")

IMAGE_NAME_RE = re.compile(r"^sat_[0-9]+_[0-9a-f]{6}\.png$")

STATUS_BY_ERROR = (
    (NoLocationFound, 422),
    (NoSceneAvailable, 404),
    (NotFound, 404),
    (BackendUnavailable, 502),
    (ServiceError, 502),
    (WeightMismatch, 500),
    (InvalidInput, 400),
)


def status_for(exc: Exception) -> int:
    for cls, status in STATUS_BY_ERROR:
        if isinstance(exc, cls):
            return status
    return 500


def build_engine(config: ServiceConfig):
    if config.engine == "classical":
        return ClassicalEngine()
    cfg = UNetConfig()
    if config.weight_path is not None:
        archive = load_weights(config.weight_path)
    else:
        log.warning("no weight_path configured; using seed-0 random weights")
        archive = random_weights(cfg, seed=0)
    return UNetEngine(cfg, archive)


def build_tile_backend(config: ServiceConfig):
    if config.backend_mode == "fixture":
        if config.tile_root is None:
            raise InvalidInput("fixture backend_mode requires tile_root")
        return FixtureTileStore(config.tile_root)
    return SentinelTileClient(config.sh_base_url, api_key=config.sh_api_key)


def _load_gazetteer(config: ServiceConfig) -> Gazetteer:
    if config.gazetteer_path is not None:
        return Gazetteer.load(config.gazetteer_path)
    return Gazetteer([])


def build_extractor(config: ServiceConfig, gazetteer: Gazetteer | None = None):
    return GazetteerExtractor(gazetteer if gazetteer is not None else _load_gazetteer(config))


def build_geocoder(config: ServiceConfig, gazetteer: Gazetteer | None = None):
    if config.backend_mode == "fixture":
        return GazetteerGeocoder(gazetteer if gazetteer is not None else _load_gazetteer(config))
    return NominatimClient(config.geocoder_url)


@dataclass
class Pipeline:
    """All pipeline stages with their backends bound; shared by service and CLI."""

    config: ServiceConfig
    engine: Any
    tiles: Any
    extractor: Any
    geocoder: Any

    @classmethod
    def from_config(cls, config: ServiceConfig, **overrides) -> "Pipeline":
        gaz = overrides.pop("gazetteer", None)
        if gaz is None:
            gaz = _load_gazetteer(config)
        parts = {
            "engine": build_engine(config),
            "tiles": build_tile_backend(config),
            "extractor": build_extractor(config, gaz),
            "geocoder": build_geocoder(config, gaz),
        }
        parts.update(overrides)
        return cls(config=config, **parts)

    def fetch(self, point: GeoPoint):
        """bbox -> latest scene -> crop/resize; returns the processed raster."""
        box = bbox_around(point, self.config.half_extent_deg)
        raw, meta = fetch_latest(box, self.tiles)
        processed = process_scene(raw, self.config.image_size)
        return box, meta, processed

    def download_image(self, point: GeoPoint) -> dict:
        _, _, processed = self.fetch(point)
        record = persist(processed, self.config.image_dir, self.config.resolved_base_url)
        return {"image_url": record.url}

    def segment(self, point: GeoPoint, threshold: float) -> dict:
        box, meta, processed = self.fetch(point)
        record = persist(processed, self.config.image_dir, self.config.resolved_base_url)
        prob = self.engine.predict(processed)
        mask = binarize(prob, threshold)
        painted = overlay(processed, mask)
        overlay_record = persist(
            painted, self.config.image_dir, self.config.resolved_base_url
        )
        log.info(
            "segment bbox=%s scene=%s threshold=%.3f fraction=%.4f",
            box, meta.source_id, threshold, mask.positive_fraction(),
        )
        return {
            "image_url": record.url,
            "overlay_url": overlay_record.url,
            "flood_fraction": mask.positive_fraction(),
        }

    def query(self, text: str) -> dict:
        start = time.perf_counter()
        name, point = self.resolve(text)
        result = self.segment(point, self.config.default_threshold)
        elapsed = time.perf_counter() - start
        log.info(
            "query %r -> %s (%.4f, %.4f) in %.2fs",
            text, name, point.lat, point.lon, elapsed,
        )
        frac = result["flood_fraction"]
        return {
            "location_name": name,
            "lat": point.lat,
            "lon": point.lon,
            "image_url": result["image_url"],
            "overlay_url": result["overlay_url"],
            "flood_fraction": frac,
            "message": (
                f"Latest imagery near {name} shows {frac:.1%} of the scene "
                "flagged as water."
            ),
        }

    def resolve(self, text: str) -> tuple[str, GeoPoint]:
        candidate = extract_location(text, self.extractor)
        point = geocode(candidate.name, self.geocoder)
        return candidate.name, point


def safe_image_path(image_dir: Path, name: str) -> Path:
    """Resolve a stored-image name, rejecting anything but our own filenames."""
    if not IMAGE_NAME_RE.match(name):
        raise InvalidInput(f"illegal image name {name!r}")
    base = Path(image_dir).resolve()
    target = (base / name).resolve()
    if target.parent != base:
        raise InvalidInput("path escapes the image directory")
    return target


def _parse_float(raw: str | None, field: str, default: float) -> float:
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise InvalidInput(f"{field} is not a number: {raw!r}") from exc


def _error_response(exc: Exception) -> JSONResponse:
    status = status_for(exc)
    if status == 500 and not isinstance(exc, FloodLenseError):
        log.exception("unhandled error")
        return JSONResponse({"detail": "internal error"}, status_code=500)
    return JSONResponse({"detail": str(exc)}, status_code=status)


def create_app(config: ServiceConfig, pipeline: Pipeline | None = None) -> FastAPI:
    if pipeline is None:
        pipeline = Pipeline.from_config(config)
    app = FastAPI(title="floodlense", docs_url=None, redoc_url=None)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=[config.cors_origin],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.pipeline = pipeline

    @app.exception_handler(Exception)
    async def _on_error(request: Request, exc: Exception):
        return _error_response(exc)

    def _point(lat_raw: str | None, lon_raw: str | None) -> GeoPoint:
        lat = _parse_float(lat_raw, "lat", config.default_point[0])
        lon = _parse_float(lon_raw, "lon", config.default_point[1])
        return GeoPoint(lat, lon)

    @app.get("/download_image")
    def download_image(lat: str | None = None, lon: str | None = None):
        try:
            return pipeline.download_image(_point(lat, lon))
        except FloodLenseError as exc:
            return _error_response(exc)

    @app.get("/segment")
    def segment(
        lat: str | None = None,
        lon: str | None = None,
        threshold: str | None = None,
    ):
        try:
            value = _parse_float(threshold, "threshold", config.default_threshold)
            return pipeline.segment(_point(lat, lon), value)
        except FloodLenseError as exc:
            return _error_response(exc)

    @app.post("/query")
    async def query(request: Request):
        try:
            try:
                body = json.loads(await request.body())
            except (json.JSONDecodeError, UnicodeDecodeError) as exc:
                raise InvalidInput(f"body is not valid JSON: {exc}") from exc
            if not isinstance(body, dict) or not isinstance(body.get("text"), str):
                raise InvalidInput('body must be a JSON object with a "text" string')
            return pipeline.query(body["text"])
        except FloodLenseError as exc:
            return _error_response(exc)

    @app.get("/images/{name:path}")
    def images(name: str):
        try:
            target = safe_image_path(config.image_dir, name)
            if not target.is_file():
                raise NotFound(f"no stored image {name!r}")
            return Response(target.read_bytes(), media_type="image/png")
        except FloodLenseError as exc:
            return _error_response(exc)

    return app
