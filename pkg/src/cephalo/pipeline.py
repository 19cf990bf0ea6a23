"""End-to-end decode: load -> normalize -> infer -> decode -> measure."""

from __future__ import annotations

import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import image_io, inference
from .cephalometrics import (LandmarkSet, MeasurementDefinition,
                             MeasurementResult, evaluate)
from .image_io import RadiographImage
from .reporting import CephReport


@dataclass
class DecodeOutcome:
    image: RadiographImage
    landmarks: LandmarkSet
    measurements: list[MeasurementResult]
    timings_ms: dict[str, float]


class _Stopwatch:
    def __init__(self):
        self.timings: dict[str, float] = {}

    def time(self, stage: str):
        sw = self

        class _Timer:
            def __enter__(self_inner):
                self_inner.t0 = time.perf_counter()

            def __exit__(self_inner, *exc):
                sw.timings[stage] = (time.perf_counter() - self_inner.t0) * 1e3

        return _Timer()


def decode_image(image: RadiographImage, backend,
                 definitions: Sequence[MeasurementDefinition],
                 image_ref: str = "",
                 timings: dict[str, float] | None = None) -> DecodeOutcome:
    """Run the pipeline on an already-loaded radiograph."""
    sw = _Stopwatch()
    if timings:
        sw.timings.update(timings)
    with sw.time("normalize"):
        norm = image_io.normalize(image)
        matrix, mapping = inference.prepare_input(norm, backend)
    with sw.time("infer"):
        stack = inference.infer(matrix, backend)
    with sw.time("decode"):
        landmarks = inference.decode_all(stack, mapping, image,
                                         image_ref=image_ref)
    with sw.time("measure"):
        measurements = evaluate(landmarks, definitions, image.pixel_spacing)
    return DecodeOutcome(image=image, landmarks=landmarks,
                         measurements=measurements, timings_ms=sw.timings)


def decode_file(path: str | Path, backend,
                definitions: Sequence[MeasurementDefinition],
                case_id: str | None = None) -> tuple[DecodeOutcome, CephReport]:
    """Load a radiograph from disk and decode it into a full report."""
    path = Path(path)
    sw = _Stopwatch()
    with sw.time("load"):
        image = image_io.load_image(path)
    case_id = case_id or path.stem
    outcome = decode_image(image, backend, definitions,
                           image_ref=case_id, timings=sw.timings)
    report = CephReport(case_id=case_id,
                        created_at=datetime.now(timezone.utc),
                        landmarks=outcome.landmarks,
                        measurements=outcome.measurements,
                        pixel_spacing=image.pixel_spacing,
                        timings_ms=outcome.timings_ms)
    return outcome, report
