"""On-disk case persistence: one directory per case, no database.

Layout per case: `image.<ext>`, `case.json` (atomic temp+rename writes)
and `history.jsonl` (append-only correction log). Current landmarks are
always reconstructed by replaying the history over the stored AUTO
decode, so a restart recovers exactly the last acknowledged write.
"""

from __future__ import annotations

import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from .cephalometrics import DecodedLandmark, LandmarkSet
from .errors import CaseNotFound, CaseStateError
from .image_io import RadiographImage, load_image_bytes

_EXT_BY_FORMAT = {"JPEG": "jpg", "PNG": "png", "TIFF": "tif"}

STATUS_ORDER = {"UPLOADED": 0, "DECODED": 1, "REVIEWED": 2}


def new_case_id() -> str:
    """URL-safe token, 22 chars / 128 bits."""
    return secrets.token_urlsafe(16)


@dataclass
class CaseRecord:
    case_id: str
    image_file: str
    width: int
    height: int
    pixel_spacing: float | None
    status: str = "UPLOADED"
    auto_points: list[dict] = field(default_factory=list)
    missing: list[str] = field(default_factory=list)
    timings_ms: dict[str, float] = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "case_id": self.case_id,
            "image_file": self.image_file,
            "width": self.width,
            "height": self.height,
            "pixel_spacing_mm": self.pixel_spacing,
            "status": self.status,
            "auto_points": self.auto_points,
            "missing": self.missing,
            "timings_ms": self.timings_ms,
        }

    @classmethod
    def from_json(cls, body: dict) -> "CaseRecord":
        return cls(
            case_id=body["case_id"],
            image_file=body["image_file"],
            width=body["width"],
            height=body["height"],
            pixel_spacing=body.get("pixel_spacing_mm"),
            status=body.get("status", "UPLOADED"),
            auto_points=body.get("auto_points", []),
            missing=body.get("missing", []),
            timings_ms=body.get("timings_ms", {}),
        )


def _point_to_json(lm: DecodedLandmark) -> dict:
    return {"id": lm.landmark_id, "x": lm.x, "y": lm.y,
            "confidence": lm.confidence, "provenance": lm.provenance}


def _point_from_json(body: dict) -> DecodedLandmark:
    return DecodedLandmark(landmark_id=body["id"], x=body["x"], y=body["y"],
                           confidence=body.get("confidence"),
                           provenance=body.get("provenance", "auto"))


class CaseStore:
    """Thread-safe store; corrections and decodes serialize per case."""

    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    # -- locking ---------------------------------------------------------

    def lock(self, case_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(case_id, threading.Lock())

    # -- low-level files -------------------------------------------------

    def _case_dir(self, case_id: str, must_exist: bool = True) -> Path:
        if not case_id or "/" in case_id or case_id.startswith("."):
            raise CaseNotFound(f"unknown case {case_id!r}")
        d = self.data_dir / case_id
        if must_exist and not (d / "case.json").exists():
            raise CaseNotFound(f"unknown case {case_id!r}")
        return d

    def _write_record(self, record: CaseRecord) -> None:
        d = self._case_dir(record.case_id, must_exist=False)
        tmp = d / "case.json.tmp"
        with open(tmp, "w") as fh:
            json.dump(record.to_json(), fh, indent=1)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, d / "case.json")

    def read_record(self, case_id: str) -> CaseRecord:
        d = self._case_dir(case_id)
        return CaseRecord.from_json(json.loads((d / "case.json").read_text()))

    def read_history(self, case_id: str) -> list[dict]:
        path = self._case_dir(case_id) / "history.jsonl"
        if not path.exists():
            return []
        entries = []
        for line in path.read_text().splitlines():
            if line.strip():
                entries.append(json.loads(line))
        return entries

    def _append_history(self, case_id: str, entry: dict) -> None:
        path = self._case_dir(case_id) / "history.jsonl"
        with open(path, "a") as fh:
            fh.write(json.dumps(entry) + "\n")
            fh.flush()
            os.fsync(fh.fileno())

    # -- public API ------------------------------------------------------

    def list_cases(self) -> list[str]:
        return sorted(p.parent.name
                      for p in self.data_dir.glob("*/case.json"))

    def create_case(self, image_bytes: bytes,
                    pixel_spacing: float | None = None) -> str:
        """Validate and persist an upload; the payload is stored verbatim."""
        image = load_image_bytes(image_bytes, pixel_spacing=pixel_spacing)
        case_id = new_case_id()
        d = self._case_dir(case_id, must_exist=False)
        d.mkdir(parents=True)
        ext = _EXT_BY_FORMAT[image.source_format]
        image_file = f"image.{ext}"
        tmp = d / (image_file + ".tmp")
        tmp.write_bytes(image_bytes)
        os.replace(tmp, d / image_file)
        self._write_record(CaseRecord(
            case_id=case_id, image_file=image_file,
            width=image.width, height=image.height,
            pixel_spacing=pixel_spacing))
        return case_id

    def load_radiograph(self, case_id: str) -> RadiographImage:
        record = self.read_record(case_id)
        data = (self._case_dir(case_id) / record.image_file).read_bytes()
        return load_image_bytes(data, pixel_spacing=record.pixel_spacing)

    def store_decode(self, case_id: str, landmarks: LandmarkSet,
                     timings_ms: dict[str, float]) -> None:
        """Persist a fresh AUTO decode; clears any correction history."""
        record = self.read_record(case_id)
        record.auto_points = [_point_to_json(lm)
                              for lm in landmarks.points.values()]
        record.missing = list(landmarks.missing)
        record.timings_ms = dict(timings_ms)
        record.status = "DECODED"
        history = self._case_dir(case_id) / "history.jsonl"
        if history.exists():
            history.unlink()
        self._write_record(record)

    def current_landmarks(self, case_id: str) -> LandmarkSet:
        """AUTO decode with the correction history replayed in order."""
        record = self.read_record(case_id)
        if record.status == "UPLOADED":
            raise CaseStateError(f"case {case_id} not decoded yet")
        points = {p["id"]: _point_from_json(p) for p in record.auto_points}
        for entry in self.read_history(case_id):
            lid = entry["landmark_id"]
            points[lid] = DecodedLandmark(
                landmark_id=lid, x=entry["new_x"], y=entry["new_y"],
                confidence=None, provenance="manual")
        # a correction may place a landmark the decoder reported missing
        missing = tuple(m for m in record.missing if m not in points)
        return LandmarkSet(image_ref=case_id, points=points, missing=missing)

    def apply_correction(self, case_id: str, landmark_id: str,
                         x: float, y: float, actor: str = "ui") -> LandmarkSet:
        """Append one correction and return the updated landmark set.

        Caller must hold the case lock.
        """
        record = self.read_record(case_id)
        if record.status == "UPLOADED":
            raise CaseStateError(f"case {case_id} not decoded yet")
        current = self.current_landmarks(case_id)
        old = current.get(landmark_id)
        known_ids = set(current.points) | set(current.missing)
        if landmark_id not in known_ids:
            raise CaseNotFound(f"unknown landmark {landmark_id!r}")
        if not (0 <= x < record.width and 0 <= y < record.height):
            raise ValueError(
                f"({x}, {y}) outside {record.width}x{record.height}")
        self._append_history(case_id, {
            "timestamp": time.time(),
            "landmark_id": landmark_id,
            "old_x": old.x if old else None,
            "old_y": old.y if old else None,
            "new_x": float(x),
            "new_y": float(y),
            "actor": actor,
        })
        if record.status != "REVIEWED":
            record.status = "REVIEWED"
            self._write_record(record)
        return self.current_landmarks(case_id)
