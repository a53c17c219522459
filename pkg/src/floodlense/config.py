"""Service configuration: JSON file mirroring the field names, with
FLOODLENSE_* environment overrides applied on top."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from .errors import InvalidInput
from .raster_geo import GeoPoint

# Shipped default query point (matches the bundled fixture gazetteer's
# Chennai entry); not a service-derived constant.
DEFAULT_POINT = (13.0827, 80.2707)


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8000
    image_dir: Path = Path("var/images")
    base_url: str = ""  # "" -> http://127.0.0.1:<port>/images
    gazetteer_path: Path | None = None
    half_extent_deg: float = 0.05
    default_point: tuple[float, float] = DEFAULT_POINT
    default_threshold: float = 0.5
    backend_mode: str = "fixture"  # "fixture" | "live"
    weight_path: Path | None = None
    tile_root: Path | None = None
    engine: str = "unet"  # "unet" | "classical"
    image_size: int = 256
    cors_origin: str = "*"
    sh_base_url: str = ""
    sh_api_key: str = ""
    geocoder_url: str = "https://nominatim.openstreetmap.org"
    llm_api_key: str = ""

    def __post_init__(self):
        if not 1 <= self.port <= 65535:
            raise InvalidInput(f"port {self.port} outside [1, 65535]")
        if self.half_extent_deg <= 0:
            raise InvalidInput("half_extent_deg must be positive")
        if not 0.0 < self.default_threshold < 1.0:
            raise InvalidInput("default_threshold must lie in (0, 1)")
        if self.backend_mode not in ("fixture", "live"):
            raise InvalidInput(f"unknown backend_mode {self.backend_mode!r}")
        if self.engine not in ("unet", "classical"):
            raise InvalidInput(f"unknown engine {self.engine!r}")
        GeoPoint(*self.default_point)  # range check
        for name in ("image_dir", "gazetteer_path", "weight_path", "tile_root"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(self, name, Path(value))

    @property
    def resolved_base_url(self) -> str:
        return self.base_url or f"http://127.0.0.1:{self.port}/images"


def load_config(path=None, env=None) -> ServiceConfig:
    """Build config from an optional JSON file plus environment overrides."""
    env = os.environ if env is None else env
    values = {}
    if path is not None:
        path = Path(path)
        raw = json.loads(path.read_text(encoding="utf-8"))
        known = {f.name for f in fields(ServiceConfig)}
        unknown = set(raw) - known
        if unknown:
            raise InvalidInput(f"unknown config keys: {sorted(unknown)}")
        if "default_point" in raw:
            raw["default_point"] = tuple(raw["default_point"])
        # Path fields are taken relative to the config file's directory so a
        # fixture tree can be moved or regenerated anywhere and still load.
        base = path.resolve().parent
        for name in ("image_dir", "gazetteer_path", "weight_path", "tile_root"):
            if raw.get(name) is not None:
                candidate = Path(raw[name])
                raw[name] = candidate if candidate.is_absolute() else base / candidate
        values.update(raw)
    cfg = ServiceConfig(**values)
    overrides = {}
    if env.get("FLOODLENSE_PORT"):
        try:
            overrides["port"] = int(env["FLOODLENSE_PORT"])
        except ValueError as exc:
            raise InvalidInput(f"FLOODLENSE_PORT is not an integer: {exc}") from exc
    if env.get("FLOODLENSE_SH_KEY"):
        overrides["sh_api_key"] = env["FLOODLENSE_SH_KEY"]
    if env.get("FLOODLENSE_LLM_KEY"):
        overrides["llm_api_key"] = env["FLOODLENSE_LLM_KEY"]
    return replace(cfg, **overrides) if overrides else cfg
