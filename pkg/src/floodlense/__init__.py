"""Flood detection from satellite imagery: locality text in, flood-highlighted
scene out, plus the evaluation harness used to score segmentation engines."""

from .config import DEFAULT_POINT, ServiceConfig, load_config
from .errors import (
    BackendUnavailable,
    DecodeError,
    FloodLenseError,
    FormatError,
    InvalidInput,
    MissingMask,
    NoLocationFound,
    NoSceneAvailable,
    NotFound,
    ServiceError,
    ShapeMismatch,
    UnknownLayer,
    WeightMismatch,
)
from .evaluation import (
    AblationRow,
    ConfusionCounts,
    DatasetSpec,
    MetricsReport,
    SweepReport,
    TimingReport,
    confusion,
    evaluate_engine,
    load_dataset,
    load_reported_tables,
    metrics,
    render_reported_table,
    render_table,
    report_to_json,
    run_ablation,
    threshold_sweep,
    time_inference,
)
from .imagery import (
    FixtureTileStore,
    SceneMeta,
    SentinelTileClient,
    cell_id,
    fetch_latest,
    persist,
    process_scene,
)
from .location import (
    Gazetteer,
    GazetteerEntry,
    GazetteerExtractor,
    GazetteerGeocoder,
    InterfaceCase,
    InterfaceReport,
    LLMExtractor,
    LocationCandidate,
    NominatimClient,
    edit_distance,
    evaluate_interface,
    extract_location,
    geocode,
    load_interface_cases,
)
from .raster_geo import (
    BinaryMask,
    BoundingBox,
    GeoPoint,
    ImageRaster,
    ProbabilityMap,
    bbox_around,
    from_png_bytes,
    load_png,
    nearest_resize,
    normalize,
    save_png,
    to_png_bytes,
)
from .segmentation import (
    ClassicalEngine,
    UNetConfig,
    UNetEngine,
    ablate,
    activation_stats,
    binarize,
    conv2d,
    map_histogram,
    otsu_cut,
    otsu_threshold,
    overlay,
    random_weights,
    unet_forward,
    water_index,
    zero_weights,
)
from .service import (
    Pipeline,
    build_engine,
    build_tile_backend,
    create_app,
    safe_image_path,
    status_for,
)
from .weights import WeightArchive, WeightEntry, load_weights, save_weights

__version__ = "0.1.0"
