"""CSV reports, annotated overlays and confidence charts."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Sequence

import numpy as np
from PIL import Image, ImageDraw

from .cephalometrics import (DecodedLandmark, LandmarkSet,
                             MeasurementDefinition, MeasurementResult)
from .image_io import RadiographImage

CSV_HEADER = ["record", "id", "x_or_value", "y_or_units",
              "confidence_or_status", "provenance"]

MARKER_COLOR = (255, 64, 64)
MANUAL_COLOR = (64, 160, 255)
LINE_COLOR = (64, 255, 96)
MARKER_RADIUS = 4


@dataclass(frozen=True)
class CephReport:
    """Everything the pipeline produced for one case."""

    case_id: str
    created_at: datetime
    landmarks: LandmarkSet
    measurements: list[MeasurementResult]
    pixel_spacing: float | None = None
    timings_ms: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.case_id:
            raise ValueError("case_id must be nonempty")
        if any(v < 0 for v in self.timings_ms.values()):
            raise ValueError("timings must be nonnegative")


def round2(value: float) -> str:
    """Format with 2 decimals, rounding half-up (stable golden files)."""
    return str(Decimal(repr(float(value))).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_UP))


def _timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def report_rows(report: CephReport) -> list[list[str]]:
    spacing = "" if report.pixel_spacing is None else f"{report.pixel_spacing:g}"
    rows = [
        ["META", "case_id", report.case_id, "", "", ""],
        ["META", "created_at", _timestamp(report.created_at), "", "", ""],
        ["META", "pixel_spacing_mm", spacing, "", "", ""],
    ]
    for lm in report.landmarks.points.values():
        conf = "" if lm.confidence is None else round2(lm.confidence)
        rows.append(["LANDMARK", lm.landmark_id, round2(lm.x), round2(lm.y),
                     conf, lm.provenance])
    for lid in report.landmarks.missing:
        rows.append(["LANDMARK", lid, "", "", "", "missing"])
    for m in report.measurements:
        value = "" if m.value is None else round2(m.value)
        rows.append(["MEASUREMENT", m.definition_id, value, m.units,
                     m.status, ""])
    return rows


def format_csv(report: CephReport) -> str:
    """Serialize per the fixed report layout (RFC 4180, CRLF)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n",
                        quoting=csv.QUOTE_MINIMAL)
    writer.writerow(CSV_HEADER)
    writer.writerows(report_rows(report))
    return buf.getvalue()


def write_csv(report: CephReport, path: str | Path) -> None:
    Path(path).write_text(format_csv(report), newline="")


@dataclass
class ParsedReport:
    case_id: str
    created_at: str
    pixel_spacing: float | None
    landmarks: LandmarkSet
    measurements: list[MeasurementResult]


def parse_csv(text: str) -> ParsedReport:
    """Read back a report CSV; inverse of format_csv modulo timings."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != CSV_HEADER:
        raise ValueError(f"unexpected header {header}")
    meta: dict[str, str] = {}
    points: dict[str, DecodedLandmark] = {}
    missing: list[str] = []
    measurements: list[MeasurementResult] = []
    for row in reader:
        if not row:
            continue
        record, rid, a, b, c, d = row
        if record == "META":
            meta[rid] = a
        elif record == "LANDMARK":
            if d == "missing":
                missing.append(rid)
            else:
                points[rid] = DecodedLandmark(
                    landmark_id=rid, x=float(a), y=float(b),
                    confidence=float(c) if c else None, provenance=d)
        elif record == "MEASUREMENT":
            measurements.append(MeasurementResult(
                definition_id=rid, value=float(a) if a else None,
                units=b, status=c))
        else:
            raise ValueError(f"unknown record type {record!r}")
    spacing = meta.get("pixel_spacing_mm", "")
    return ParsedReport(
        case_id=meta.get("case_id", ""),
        created_at=meta.get("created_at", ""),
        pixel_spacing=float(spacing) if spacing else None,
        landmarks=LandmarkSet(image_ref=meta.get("case_id", ""),
                              points=points, missing=tuple(missing)),
        measurements=measurements)


def _display_base(image: RadiographImage) -> Image.Image:
    pixels = image.pixels
    if pixels.dtype == np.uint16:
        pixels = (pixels.astype(np.float64) * (255.0 / 65535.0) + 0.5)
        pixels = pixels.astype(np.uint8)
    return Image.fromarray(pixels, mode="L").convert("RGB")


def _measurement_segments(landmarks: LandmarkSet,
                          definitions: Sequence[MeasurementDefinition]):
    for d in definitions:
        pts = [landmarks.get(pid) for pid in d.points]
        if any(p is None for p in pts):
            continue
        xy = [(p.x, p.y) for p in pts]
        if d.kind == "ANGLE_3PT":
            yield xy[0], xy[1]
            yield xy[1], xy[2]
        elif d.kind == "ANGLE_LINES":
            yield xy[0], xy[1]
            yield xy[2], xy[3]
        else:
            yield xy[0], xy[1]


def render_overlay(image: RadiographImage, landmarks: LandmarkSet,
                   definitions: Sequence[MeasurementDefinition] = ()) -> bytes:
    """PNG of the radiograph with markers, labels and analysis polylines.

    Output is deterministic for fixed inputs.
    """
    canvas = _display_base(image)
    draw = ImageDraw.Draw(canvas)
    for a, b in _measurement_segments(landmarks, definitions):
        draw.line([a, b], fill=LINE_COLOR, width=1)
    for lm in landmarks.points.values():
        color = MANUAL_COLOR if lm.provenance == "manual" else MARKER_COLOR
        r = MARKER_RADIUS
        draw.ellipse([lm.x - r, lm.y - r, lm.x + r, lm.y + r],
                     outline=color, width=1)
        draw.text((lm.x + r + 1, lm.y - r - 1), lm.landmark_id, fill=color)
    buf = io.BytesIO()
    canvas.save(buf, format="PNG")
    return buf.getvalue()


def plot_confidences(report: CephReport) -> bytes:
    """Bar chart of per-landmark confidence; missing points get hatched
    zero-height bars."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ids, heights, hatched = [], [], []
    for lm in report.landmarks.points.values():
        ids.append(lm.landmark_id)
        heights.append(lm.confidence if lm.confidence is not None else 0.0)
        hatched.append(lm.confidence is None)
    for lid in report.landmarks.missing:
        ids.append(lid)
        heights.append(0.0)
        hatched.append(True)

    fig, ax = plt.subplots(figsize=(max(4, 0.45 * len(ids) + 1), 3.2))
    bars = ax.bar(range(len(ids)), heights, color="#4878cf",
                  edgecolor="black", linewidth=0.5)
    for bar, is_hatched in zip(bars, hatched):
        if is_hatched:
            bar.set_hatch("///")
            bar.set_facecolor("none")
            bar.set_height(0.02)  # visible sliver marking absence
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("confidence")
    ax.set_xticks(range(len(ids)))
    ax.set_xticklabels(ids, rotation=60, fontsize=7)
    ax.set_title(f"decode confidence: {report.case_id}")
    fig.tight_layout()
    buf = io.BytesIO()
    fig.savefig(buf, format="png", dpi=110)
    plt.close(fig)
    return buf.getvalue()
