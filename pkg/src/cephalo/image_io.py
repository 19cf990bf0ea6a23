"""Radiograph loading, grayscale reduction and min-max normalization."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from . import kernels
from .errors import CorruptImage, TooSmall, UnsupportedFormat

MIN_DIMENSION = 64

_EXTENSIONS = {
    ".jpg": "JPEG",
    ".jpeg": "JPEG",
    ".png": "PNG",
    ".tif": "TIFF",
    ".tiff": "TIFF",
}

_MAGIC = (
    (b"\xff\xd8\xff", "JPEG"),
    (b"\x89PNG\r\n\x1a\n", "PNG"),
    (b"II*\x00", "TIFF"),
    (b"MM\x00*", "TIFF"),
)

# Rec. 601 luma weights for color reduction.
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float64)


@dataclass(frozen=True)
class RadiographImage:
    """Grayscale radiograph with optional physical calibration."""

    pixels: np.ndarray  # 2-D uint8 or uint16, shape (height, width)
    source_format: str  # "JPEG" | "PNG" | "TIFF"
    pixel_spacing: float | None = None  # mm per pixel

    def __post_init__(self):
        if self.pixels.ndim != 2:
            raise ValueError("pixels must be a 2-D matrix")
        if self.pixels.dtype not in (np.uint8, np.uint16):
            raise ValueError("pixels must be 8- or 16-bit unsigned")
        if self.width < MIN_DIMENSION or self.height < MIN_DIMENSION:
            raise TooSmall(
                f"{self.width}x{self.height} below the "
                f"{MIN_DIMENSION}x{MIN_DIMENSION} minimum"
            )
        if self.pixel_spacing is not None:
            if not math.isfinite(self.pixel_spacing) or self.pixel_spacing <= 0:
                raise ValueError("pixel_spacing must be finite and positive")
        self.pixels.setflags(write=False)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def bit_depth(self) -> int:
        return 8 if self.pixels.dtype == np.uint8 else 16


@dataclass(frozen=True)
class NormalizedImage:
    """Unit-interval view of a radiograph: (X - min) / (max - min)."""

    values: np.ndarray  # 2-D float64 in [0, 1]
    source_min: float
    source_max: float
    degenerate: bool  # true iff source_min == source_max

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


def rgb_to_gray(rgb: np.ndarray, bit_depth: int = 8) -> np.ndarray:
    """Reduce an (H, W, 3) buffer with Rec. 601 weights, rounding half-up."""
    luma = rgb[..., :3].astype(np.float64) @ _LUMA
    gray = np.floor(luma + 0.5)
    dtype = np.uint8 if bit_depth == 8 else np.uint16
    return np.clip(gray, 0, 2**bit_depth - 1).astype(dtype)


def _sniff_format(path: Path) -> str:
    fmt = _EXTENSIONS.get(path.suffix.lower())
    if fmt is None:
        raise UnsupportedFormat(f"unsupported extension: {path.suffix!r}")
    with open(path, "rb") as fh:
        head = fh.read(8)
    for magic, magic_fmt in _MAGIC:
        if head.startswith(magic):
            if magic_fmt != fmt:
                raise UnsupportedFormat(
                    f"extension says {fmt} but contents look like {magic_fmt}"
                )
            return fmt
    raise UnsupportedFormat("magic bytes are not JPEG/PNG/TIFF")


def read_calibration_sidecar(image_path: Path) -> float | None:
    """Read `<stem>.calib.json` next to the image; None when absent."""
    sidecar = image_path.with_name(image_path.stem + ".calib.json")
    if not sidecar.exists():
        return None
    try:
        body = json.loads(sidecar.read_text())
        spacing = float(body["pixel_spacing_mm"])
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptImage(f"invalid calibration sidecar {sidecar.name}: {exc}")
    if not math.isfinite(spacing) or spacing <= 0:
        raise CorruptImage(f"non-positive pixel spacing in {sidecar.name}")
    return spacing


def image_from_pil(img: Image.Image, source_format: str,
                   pixel_spacing: float | None = None) -> RadiographImage:
    """Convert a decoded PIL image to a grayscale RadiographImage."""
    if img.mode in ("L", "I;16", "I;16B", "I;16L", "I"):
        arr = np.asarray(img)
        if arr.dtype == np.int32:  # PIL "I" mode; 16-bit PNG/TIFF payloads
            arr = np.clip(arr, 0, 65535).astype(np.uint16)
        gray = arr.copy()
    elif img.mode in ("RGB", "RGBA", "P", "CMYK", "YCbCr"):
        rgb = np.asarray(img.convert("RGB"))
        gray = rgb_to_gray(rgb, bit_depth=8)
    else:
        raise CorruptImage(f"unsupported pixel mode {img.mode}")
    return RadiographImage(pixels=gray, source_format=source_format,
                           pixel_spacing=pixel_spacing)


def load_image(path: str | Path) -> RadiographImage:
    """Load a JPEG/PNG/TIFF radiograph from disk.

    Color inputs are reduced to grayscale with Rec. 601 weights; pixel
    spacing comes from the optional `<stem>.calib.json` sidecar.
    """
    path = Path(path)
    fmt = _sniff_format(path)
    try:
        with Image.open(path) as img:
            img.load()
            record = image_from_pil(img, fmt)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise CorruptImage(f"cannot decode {path.name}: {exc}")
    spacing = read_calibration_sidecar(path)
    if spacing is not None:
        record = RadiographImage(pixels=record.pixels.copy(),
                                 source_format=fmt, pixel_spacing=spacing)
    return record


def load_image_bytes(data: bytes, declared_format: str | None = None,
                     pixel_spacing: float | None = None) -> RadiographImage:
    """Decode an in-memory payload (service upload path)."""
    import io

    for magic, fmt in _MAGIC:
        if data.startswith(magic):
            break
    else:
        raise UnsupportedFormat("magic bytes are not JPEG/PNG/TIFF")
    if declared_format and declared_format.upper() != fmt:
        raise UnsupportedFormat(
            f"declared {declared_format} but contents look like {fmt}")
    try:
        with Image.open(io.BytesIO(data)) as img:
            img.load()
            return image_from_pil(img, fmt, pixel_spacing)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise CorruptImage(f"cannot decode upload: {exc}")


def normalize(image: RadiographImage) -> NormalizedImage:
    """Min-max normalize to [0, 1]; constant images come back all-zero
    with the degenerate flag set."""
    values, vmin, vmax = kernels.minmax_normalize(image.pixels)
    return NormalizedImage(values=values, source_min=vmin, source_max=vmax,
                           degenerate=(vmin == vmax))
