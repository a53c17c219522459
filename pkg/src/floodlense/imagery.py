"""Latest-scene retrieval for a bounding box, preprocessing, and the image
store that mints URLs.

Two tile backends share one contract (list_scenes + load_scene): a
directory-backed fixture store keyed by 0.1-degree grid cells, used
everywhere in CI, and a thin HTTP client for a Sentinel-style tile service.
"""

from __future__ import annotations

import logging
import os
import secrets
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import httpx

from .errors import InvalidInput, NoSceneAvailable, ServiceError
from .raster_geo import (
    BoundingBox,
    ImageRaster,
    from_png_bytes,
    load_png,
    nearest_resize,
    to_png_bytes,
)

logger = logging.getLogger(__name__)

CELL_DEGREES = 0.1
_SCENE_STAMP = "%Y%m%dT%H%M%SZ"


@dataclass(frozen=True)
class SceneMeta:
    acquired_at: datetime
    source_id: str

    def __post_init__(self):
        if self.acquired_at.tzinfo is None:
            object.__setattr__(
                self, "acquired_at", self.acquired_at.replace(tzinfo=timezone.utc)
            )
        if self.acquired_at > datetime.now(timezone.utc):
            raise InvalidInput(f"scene timestamp {self.acquired_at} is in the future")


@dataclass(frozen=True)
class ImageStoreRecord:
    file_path: Path
    url: str
    stored_at: datetime


def cell_id(lat: float, lon: float) -> str:
    """0.1-degree grid cell containing a point, e.g. 'lat130_lon802'."""
    lat_i = int(round(lat / CELL_DEGREES, 6) // 1)
    lon_i = int(round(lon / CELL_DEGREES, 6) // 1)
    return f"lat{lat_i}_lon{lon_i}"


def cells_for_bbox(bbox: BoundingBox) -> list[str]:
    lat_lo = int(round(bbox.min_lat / CELL_DEGREES, 6) // 1)
    lat_hi = int(round(bbox.max_lat / CELL_DEGREES, 6) // 1)
    lon_lo = int(round(bbox.min_lon / CELL_DEGREES, 6) // 1)
    lon_hi = int(round(bbox.max_lon / CELL_DEGREES, 6) // 1)
    return [
        f"lat{la}_lon{lo}"
        for la in range(lat_lo, lat_hi + 1)
        for lo in range(lon_lo, lon_hi + 1)
    ]


def format_scene_stamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime(_SCENE_STAMP)


def parse_scene_stamp(stem: str) -> datetime:
    try:
        return datetime.strptime(stem, _SCENE_STAMP).replace(tzinfo=timezone.utc)
    except ValueError:
        pass
    try:
        return datetime.fromisoformat(stem.replace("Z", "+00:00")).astimezone(
            timezone.utc
        )
    except ValueError as exc:
        raise InvalidInput(f"unparseable scene timestamp {stem!r}") from exc


class FixtureTileStore:
    """Scenes on disk under <root>/<cell_id>/<iso8601>.png."""

    def __init__(self, root):
        self.root = Path(root)

    def list_scenes(self, bbox: BoundingBox) -> list[SceneMeta]:
        scenes = []
        for cell in cells_for_bbox(bbox):
            cell_dir = self.root / cell
            if not cell_dir.is_dir():
                continue
            for path in sorted(cell_dir.glob("*.png")):
                scenes.append(
                    SceneMeta(
                        acquired_at=parse_scene_stamp(path.stem),
                        source_id=f"{cell}/{path.name}",
                    )
                )
        return scenes

    def load_scene(self, meta: SceneMeta) -> ImageRaster:
        return load_png(self.root / meta.source_id)


class SentinelTileClient:
    """HTTP tile backend for a true-color scene service.

    Expects GET <base>/catalog?bbox=w,s,e,n returning a JSON list of
    {"id", "acquired_at"} and GET <base>/scene/<id> returning PNG bytes.
    The API key, when set, travels as an Authorization bearer header
    (FLOODLENSE_SH_KEY supplies it in deployments).
    """

    def __init__(self, base_url: str, api_key: str = "", client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._client = client or httpx.Client(timeout=30.0, headers=headers)

    def list_scenes(self, bbox: BoundingBox) -> list[SceneMeta]:
        params = {
            "bbox": f"{bbox.min_lon},{bbox.min_lat},{bbox.max_lon},{bbox.max_lat}"
        }
        try:
            resp = self._client.get(f"{self.base_url}/catalog", params=params)
            resp.raise_for_status()
            items = resp.json()
        except httpx.HTTPError as exc:
            raise ServiceError(f"scene catalog request failed: {exc}") from exc
        except ValueError as exc:
            raise ServiceError(f"scene catalog was not JSON: {exc}") from exc
        scenes = []
        for item in items:
            scenes.append(
                SceneMeta(
                    acquired_at=parse_scene_stamp(str(item["acquired_at"])),
                    source_id=str(item["id"]),
                )
            )
        return scenes

    def load_scene(self, meta: SceneMeta) -> ImageRaster:
        try:
            resp = self._client.get(f"{self.base_url}/scene/{meta.source_id}")
            resp.raise_for_status()
        except httpx.HTTPError as exc:
            raise ServiceError(f"scene download failed: {exc}") from exc
        return from_png_bytes(resp.content)


def fetch_latest(bbox: BoundingBox, client) -> tuple[ImageRaster, SceneMeta]:
    """The newest scene covering the box; source_id breaks timestamp ties."""
    scenes = client.list_scenes(bbox)
    if not scenes:
        raise NoSceneAvailable(f"no scene covers {bbox}")
    chosen = max(scenes, key=lambda s: (s.acquired_at, s.source_id))
    return client.load_scene(chosen), chosen


def process_scene(raw: ImageRaster, target: int) -> ImageRaster:
    """Center-crop to square, nearest-resize to target x target, emit 3-channel
    8-bit RGB."""
    if raw.channels < 3:
        raise InvalidInput(f"scene must have >= 3 channels, got {raw.channels}")
    if target < 1:
        raise InvalidInput(f"target must be >= 1, got {target}")
    side = min(raw.height, raw.width)
    top = (raw.height - side) // 2
    left = (raw.width - side) // 2
    cropped = ImageRaster(
        raw.pixels[top : top + side, left : left + side, :3],
        normalized=raw.normalized,
    )
    return nearest_resize(cropped, target, target).to_uint8()


def persist(img: ImageRaster, store_dir, base_url: str) -> ImageStoreRecord:
    """Write the raster as sat_<unix_seconds>_<6-hex>.png and mint its URL.

    The random suffix keeps concurrent writers collision-free; an existing
    name is never overwritten.
    """
    store = Path(store_dir)
    store.mkdir(parents=True, exist_ok=True)
    data = to_png_bytes(img)
    stored_at = datetime.now(timezone.utc)
    for _ in range(8):
        name = f"sat_{int(time.time())}_{secrets.token_hex(3)}.png"
        path = store / name
        try:
            fd = os.open(path, os.O_WRONLY | os.O_CREAT | os.O_EXCL, 0o644)
        except FileExistsError:
            continue
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        logger.info(
            "stored %dx%d image at %s (%d bytes)", img.width, img.height, path, len(data)
        )
        return ImageStoreRecord(
            file_path=path,
            url=f"{base_url.rstrip('/')}/{name}",
            stored_at=stored_at,
        )
    raise OSError(f"could not allocate a fresh image name under {store}")
