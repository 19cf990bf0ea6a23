"""Pluggable heatmap backends, letterbox geometry and peak decoding."""

from __future__ import annotations

import json
import math
import threading
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .cephalometrics import DecodedLandmark, LandmarkSet
from .errors import EmptyHeatmap, ModelLoadError, ShapeMismatch
from .image_io import NormalizedImage, RadiographImage


@dataclass(frozen=True)
class InputMapping:
    """Letterbox transform: original (x, y) -> model (x*scale + pad)."""

    scale: float
    pad_x: int
    pad_y: int

    def to_model(self, x: float, y: float) -> tuple[float, float]:
        return (x * self.scale + self.pad_x, y * self.scale + self.pad_y)

    def to_original(self, x: float, y: float) -> tuple[float, float]:
        return ((x - self.pad_x) / self.scale, (y - self.pad_y) / self.scale)


@dataclass(frozen=True)
class HeatmapStack:
    """Per-landmark confidence maps in model-input space."""

    maps: np.ndarray  # (landmark_count, input_height, input_width), >= 0
    landmark_ids: tuple[str, ...]

    def __post_init__(self):
        if self.maps.ndim != 3 or self.maps.shape[0] != len(self.landmark_ids):
            raise ShapeMismatch(
                f"stack shape {self.maps.shape} vs "
                f"{len(self.landmark_ids)} landmark ids")


@dataclass(frozen=True)
class FixtureSpot:
    landmark_id: str
    x: float  # model-input space
    y: float
    sigma: float


class FixtureBackend:
    """Deterministic backend emitting unnormalized Gaussians at planted
    model-space positions; lets the whole pipeline run with no model file."""

    kind = "fixture"

    def __init__(self, input_width: int, input_height: int,
                 spots: list[FixtureSpot]):
        if input_width <= 0 or input_height <= 0:
            raise ValueError("input dimensions must be positive")
        self.input_width = input_width
        self.input_height = input_height
        self.spots = list(spots)
        self.landmark_ids = tuple(s.landmark_id for s in self.spots)

    @property
    def landmark_count(self) -> int:
        return len(self.spots)

    def run(self, matrix: np.ndarray) -> np.ndarray:
        if matrix.shape != (self.input_height, self.input_width):
            raise ShapeMismatch(
                f"input {matrix.shape} vs model "
                f"({self.input_height}, {self.input_width})")
        params = np.array([[s.x, s.y, s.sigma] for s in self.spots],
                          dtype=np.float64)
        return kernels.gaussian_stack(params, self.input_height,
                                      self.input_width)


class OnnxBackend:
    """ONNX-graph backend: [1,1,H,W] in [0,1] in, [1,C,H,W] heatmaps out.

    A session must not be invoked from two threads at once; use a
    SessionPool for concurrency.
    """

    kind = "portable_graph"

    def __init__(self, model_path: str | Path, input_width: int,
                 input_height: int, landmark_ids: tuple[str, ...]):
        try:
            import onnxruntime as ort
        except ImportError as exc:
            raise ModelLoadError(
                "portable_graph backend requires the onnxruntime package"
            ) from exc
        path = Path(model_path)
        if not path.exists():
            raise ModelLoadError(f"model file not found: {path}")
        try:
            self._session = ort.InferenceSession(
                str(path), providers=["CPUExecutionProvider"])
        except Exception as exc:
            raise ModelLoadError(f"cannot load {path.name}: {exc}") from exc
        self.input_width = input_width
        self.input_height = input_height
        self.landmark_ids = landmark_ids
        self._input_name = self._session.get_inputs()[0].name

    @property
    def landmark_count(self) -> int:
        return len(self.landmark_ids)

    def run(self, matrix: np.ndarray) -> np.ndarray:
        if matrix.shape != (self.input_height, self.input_width):
            raise ShapeMismatch(
                f"input {matrix.shape} vs model "
                f"({self.input_height}, {self.input_width})")
        tensor = matrix.astype(np.float32)[None, None, :, :]
        (out,) = self._session.run(None, {self._input_name: tensor})
        stack = np.asarray(out, dtype=np.float64)[0]
        if stack.shape[0] != self.landmark_count:
            raise ShapeMismatch(
                f"model produced {stack.shape[0]} channels, "
                f"descriptor declares {self.landmark_count}")
        return np.maximum(stack, 0.0)


def load_backend(descriptor_path: str | Path):
    """Build a backend from a `model.json` descriptor."""
    path = Path(descriptor_path)
    try:
        desc = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise ModelLoadError(f"cannot read descriptor {path}: {exc}")
    kind = desc.get("kind")
    width = int(desc.get("input_width", 0))
    height = int(desc.get("input_height", 0))
    if kind == "fixture":
        spots = [FixtureSpot(landmark_id=str(e[0]), x=float(e[1]),
                             y=float(e[2]), sigma=float(e[3]))
                 for e in desc["fixture_spec"]]
        ids = desc.get("landmarks")
        if ids is not None and list(ids) != [s.landmark_id for s in spots]:
            raise ModelLoadError("fixture_spec order disagrees with landmarks")
        return FixtureBackend(width, height, spots)
    if kind == "portable_graph":
        model_path = Path(desc["model_path"])
        if not model_path.is_absolute():
            model_path = path.parent / model_path
        return OnnxBackend(model_path, width, height,
                           tuple(desc["landmarks"]))
    raise ModelLoadError(f"unknown backend kind {kind!r}")


def prepare_input(image: NormalizedImage, backend) -> tuple[np.ndarray, InputMapping]:
    """Aspect-preserving bilinear resize, centered with zero padding."""
    in_w, in_h = backend.input_width, backend.input_height
    scale = min(in_w / image.width, in_h / image.height)
    new_w = max(1, round(image.width * scale))
    new_h = max(1, round(image.height * scale))
    pad_x = (in_w - new_w) // 2
    pad_y = (in_h - new_h) // 2
    resized = kernels.resize_bilinear(image.values, new_h, new_w)
    canvas = np.zeros((in_h, in_w), dtype=np.float64)
    canvas[pad_y:pad_y + new_h, pad_x:pad_x + new_w] = resized
    return canvas, InputMapping(scale=scale, pad_x=pad_x, pad_y=pad_y)


def infer(matrix: np.ndarray, backend) -> HeatmapStack:
    """Run the backend over a prepared model-input matrix."""
    maps = backend.run(np.asarray(matrix, dtype=np.float64))
    if maps.shape[0] != backend.landmark_count:
        raise ShapeMismatch(
            f"{maps.shape[0]} channels vs {backend.landmark_count} landmarks")
    return HeatmapStack(maps=maps, landmark_ids=tuple(backend.landmark_ids))


def decode_heatmap(channel: np.ndarray, mapping: InputMapping,
                   landmark_id: str = "?") -> DecodedLandmark:
    """Subpixel peak of one channel, mapped back to original-image space.

    Integer argmax (row-major first occurrence on ties) refined per axis
    by quadratic interpolation of the peak triple, clamped to half a
    pixel; refinement is skipped on borders and non-concave triples.
    """
    coords, confs, empty = kernels.decode_peaks(
        np.asarray(channel, dtype=np.float64)[None, :, :])
    if empty[0]:
        raise EmptyHeatmap(f"channel for {landmark_id} is all zeros")
    x, y = mapping.to_original(coords[0, 0], coords[0, 1])
    return DecodedLandmark(landmark_id=landmark_id, x=x, y=y,
                           confidence=float(confs[0]), provenance="auto")


def decode_all(stack: HeatmapStack, mapping: InputMapping,
               image: RadiographImage, image_ref: str = "") -> LandmarkSet:
    """Decode every channel; empty channels become `missing` entries.

    Coordinates are clamped into the half-open image bounds.
    """
    coords, confs, empty = kernels.decode_peaks(stack.maps)
    x_hi = math.nextafter(float(image.width), 0.0)
    y_hi = math.nextafter(float(image.height), 0.0)
    points: dict[str, DecodedLandmark] = {}
    missing: list[str] = []
    for i, lid in enumerate(stack.landmark_ids):
        if empty[i]:
            missing.append(lid)
            continue
        x, y = mapping.to_original(coords[i, 0], coords[i, 1])
        points[lid] = DecodedLandmark(
            landmark_id=lid,
            x=min(max(x, 0.0), x_hi),
            y=min(max(y, 0.0), y_hi),
            confidence=float(confs[i]),
            provenance="auto")
    return LandmarkSet(image_ref=image_ref, points=points,
                       missing=tuple(missing))


class SessionPool:
    """Bounded pool of backend sessions for concurrent inference.

    The fixture backend is stateless, so the pool shares one instance;
    graph backends get `size` independent sessions.
    """

    def __init__(self, descriptor_path: str | Path, size: int = 1):
        self.descriptor_path = Path(descriptor_path)
        size = max(1, int(size))
        first = load_backend(self.descriptor_path)
        if first.kind == "fixture":
            # stateless: the same instance may serve every lease
            self._sessions = [first] * size
        else:
            self._sessions = [first] + [
                load_backend(self.descriptor_path) for _ in range(size - 1)]
        self._free = list(self._sessions)
        self._cond = threading.Condition()
        self.kind = first.kind
        self.landmark_count = first.landmark_count
        self.landmark_ids = first.landmark_ids

    def acquire(self):
        pool = self

        class _Lease:
            def __enter__(self_inner):
                with pool._cond:
                    while not pool._free:
                        pool._cond.wait()
                    self_inner.backend = pool._free.pop()
                return self_inner.backend

            def __exit__(self_inner, *exc):
                with pool._cond:
                    pool._free.append(self_inner.backend)
                    pool._cond.notify()

        return _Lease()
