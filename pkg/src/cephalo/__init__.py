"""Cephalometric radiograph decoding and analysis toolkit."""

__version__ = "0.1.0"

from .cephalometrics import (DEFAULT_CATALOG, DecodedLandmark, LandmarkSet,
                             angle_3pt, angle_lines, distance, evaluate)
from .image_io import NormalizedImage, RadiographImage, load_image, normalize
from .inference import (FixtureBackend, HeatmapStack, InputMapping,
                        decode_all, decode_heatmap, infer, load_backend,
                        prepare_input)
from .reporting import CephReport, format_csv, parse_csv, render_overlay

__all__ = [
    "DEFAULT_CATALOG", "DecodedLandmark", "LandmarkSet",
    "angle_3pt", "angle_lines", "distance", "evaluate",
    "NormalizedImage", "RadiographImage", "load_image", "normalize",
    "FixtureBackend", "HeatmapStack", "InputMapping",
    "decode_all", "decode_heatmap", "infer", "load_backend", "prepare_input",
    "CephReport", "format_csv", "parse_csv", "render_overlay",
]
