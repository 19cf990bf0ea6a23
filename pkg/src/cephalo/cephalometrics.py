"""Landmark catalog, measurement geometry and normative evaluation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from .errors import DegenerateAngle, DegenerateLine, Uncalibrated

_EPS = 1e-9

Point = tuple[float, float]


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    name: str


@dataclass(frozen=True)
class LandmarkCatalog:
    """Ordered landmark roster; order equals heatmap channel order."""

    entries: tuple[CatalogEntry, ...]

    def __post_init__(self):
        ids = [e.id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate landmark ids in catalog")

    @property
    def ids(self) -> list[str]:
        return [e.id for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, landmark_id: str) -> bool:
        return any(e.id == landmark_id for e in self.entries)


#: Standard 19-point lateral cephalogram roster, in channel order.
DEFAULT_CATALOG = LandmarkCatalog(entries=tuple(CatalogEntry(i, n) for i, n in [
    ("S", "Sella"),
    ("N", "Nasion"),
    ("A", "A-point (subspinale)"),
    ("B", "B-point (supramentale)"),
    ("Pog", "Pogonion"),
    ("Me", "Menton"),
    ("Gn", "Gnathion"),
    ("Go", "Gonion"),
    ("ANS", "Anterior nasal spine"),
    ("PNS", "Posterior nasal spine"),
    ("Or", "Orbitale"),
    ("Po", "Porion"),
    ("Ar", "Articulare"),
    ("Co", "Condylion"),
    ("U1tip", "Upper incisor tip"),
    ("U1apex", "Upper incisor apex"),
    ("L1tip", "Lower incisor tip"),
    ("L1apex", "Lower incisor apex"),
    ("Ba", "Basion"),
]))


def load_catalog(path: str | Path) -> LandmarkCatalog:
    """Read a `landmarks.json` roster: array of {"id", "name"}."""
    raw = json.loads(Path(path).read_text())
    return LandmarkCatalog(entries=tuple(
        CatalogEntry(id=e["id"], name=e["name"]) for e in raw))


@dataclass(frozen=True)
class DecodedLandmark:
    """One located anatomical point in original-image coordinates."""

    landmark_id: str
    x: float
    y: float
    confidence: float | None  # None once corrected by hand
    provenance: str = "auto"  # "auto" | "manual"

    def __post_init__(self):
        if self.provenance not in ("auto", "manual"):
            raise ValueError(f"bad provenance {self.provenance!r}")
        if self.confidence is not None and not 0.0 <= self.confidence <= 1.0:
            raise ValueError("confidence outside [0, 1]")

    @property
    def point(self) -> Point:
        return (self.x, self.y)


@dataclass(frozen=True)
class LandmarkSet:
    """Located points plus the landmarks that could not be decoded."""

    image_ref: str
    points: dict[str, DecodedLandmark]
    missing: tuple[str, ...] = ()

    def __post_init__(self):
        overlap = set(self.points) & set(self.missing)
        if overlap:
            raise ValueError(f"landmarks both present and missing: {overlap}")

    def get(self, landmark_id: str) -> DecodedLandmark | None:
        return self.points.get(landmark_id)

    def with_point(self, lm: DecodedLandmark) -> "LandmarkSet":
        points = dict(self.points)
        points[lm.landmark_id] = lm
        missing = tuple(m for m in self.missing if m != lm.landmark_id)
        return replace(self, points=points, missing=missing)


KINDS = ("ANGLE_3PT", "ANGLE_LINES", "DISTANCE")
_OPERANDS = {"ANGLE_3PT": 3, "ANGLE_LINES": 4, "DISTANCE": 2}


@dataclass(frozen=True)
class MeasurementDefinition:
    id: str
    kind: str
    points: tuple[str, ...]
    units: str  # "deg" | "mm"
    norm_mean: float
    norm_sd: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown measurement kind {self.kind!r}")
        if len(self.points) != _OPERANDS[self.kind]:
            raise ValueError(
                f"{self.kind} needs {_OPERANDS[self.kind]} points, "
                f"got {len(self.points)}")
        if self.norm_sd < 0:
            raise ValueError("norm_sd must be >= 0")


@dataclass(frozen=True)
class MeasurementResult:
    definition_id: str
    value: float | None
    units: str  # "deg" | "mm" | "px"
    status: str  # BELOW | WITHIN | ABOVE | UNAVAILABLE
    inputs_manual: bool = False


def load_measurements(path: str | Path) -> list[MeasurementDefinition]:
    """Read a `measurements.json` battery."""
    raw = json.loads(Path(path).read_text())
    return [MeasurementDefinition(
        id=e["id"], kind=e["kind"], points=tuple(e["points"]),
        units=e["units"], norm_mean=float(e["norm_mean"]),
        norm_sd=float(e["norm_sd"])) for e in raw]


def default_measurements() -> list[MeasurementDefinition]:
    from importlib.resources import files
    return load_measurements(files("cephalo").joinpath("data/measurements.json"))


def validate_definitions(definitions: Iterable[MeasurementDefinition],
                         catalog: LandmarkCatalog) -> None:
    for d in definitions:
        for pid in d.points:
            if pid not in catalog:
                raise ValueError(
                    f"measurement {d.id} references unknown landmark {pid}")


def angle_3pt(a: Point, vertex: Point, c: Point) -> float:
    """Unsigned planar angle at `vertex`, in degrees within [0, 180].

    Uses atan2(|cross|, dot) of the two rays, which stays well
    conditioned near 0 and 180 degrees.
    """
    ax, ay = a[0] - vertex[0], a[1] - vertex[1]
    cx, cy = c[0] - vertex[0], c[1] - vertex[1]
    if math.hypot(ax, ay) < _EPS or math.hypot(cx, cy) < _EPS:
        raise DegenerateAngle("angle endpoint coincides with the vertex")
    cross = ax * cy - ay * cx
    dot = ax * cx + ay * cy
    return math.degrees(math.atan2(abs(cross), dot))


def angle_lines(p1: Point, p2: Point, q1: Point, q2: Point) -> float:
    """Acute angle in [0, 90] degrees between undirected lines p1p2, q1q2."""
    ux, uy = p2[0] - p1[0], p2[1] - p1[1]
    vx, vy = q2[0] - q1[0], q2[1] - q1[1]
    if math.hypot(ux, uy) < _EPS or math.hypot(vx, vy) < _EPS:
        raise DegenerateLine("line endpoints coincide")
    cross = ux * vy - uy * vx
    dot = ux * vx + uy * vy
    return math.degrees(math.atan2(abs(cross), abs(dot)))


def distance(p: Point, q: Point, pixel_spacing: float | None) -> float:
    """Euclidean distance in millimetres via the calibration factor."""
    if pixel_spacing is None or pixel_spacing <= 0:
        raise Uncalibrated("pixel spacing required for millimetre distances")
    return math.hypot(q[0] - p[0], q[1] - p[1]) * pixel_spacing


def pixel_distance(p: Point, q: Point) -> float:
    return math.hypot(q[0] - p[0], q[1] - p[1])


def _norm_status(value: float, mean: float, sd: float, k: float) -> str:
    if abs(value - mean) <= sd * k:
        return "WITHIN"
    return "ABOVE" if value > mean else "BELOW"


def evaluate(landmarks: LandmarkSet,
             definitions: Sequence[MeasurementDefinition],
             pixel_spacing: float | None,
             norm_multiplier: float = 1.0) -> list[MeasurementResult]:
    """Compute every defined measurement against the landmark set.

    Per-definition failures degrade to UNAVAILABLE rather than raising;
    uncalibrated distances are still reported, in pixels.
    """
    results: list[MeasurementResult] = []
    for d in definitions:
        operands = [landmarks.get(pid) for pid in d.points]
        if any(lm is None for lm in operands):
            results.append(MeasurementResult(
                definition_id=d.id, value=None, units=d.units,
                status="UNAVAILABLE"))
            continue
        pts = [lm.point for lm in operands]
        manual = any(lm.provenance == "manual" for lm in operands)
        try:
            if d.kind == "ANGLE_3PT":
                value, units = angle_3pt(pts[0], pts[1], pts[2]), d.units
            elif d.kind == "ANGLE_LINES":
                value, units = angle_lines(*pts), d.units
            else:  # DISTANCE
                if pixel_spacing is None:
                    results.append(MeasurementResult(
                        definition_id=d.id, value=pixel_distance(pts[0], pts[1]),
                        units="px", status="UNAVAILABLE", inputs_manual=manual))
                    continue
                value, units = distance(pts[0], pts[1], pixel_spacing), d.units
        except (DegenerateAngle, DegenerateLine, Uncalibrated):
            results.append(MeasurementResult(
                definition_id=d.id, value=None, units=d.units,
                status="UNAVAILABLE", inputs_manual=manual))
            continue
        results.append(MeasurementResult(
            definition_id=d.id, value=value, units=units,
            status=_norm_status(value, d.norm_mean, d.norm_sd, norm_multiplier),
            inputs_manual=manual))
    return results
