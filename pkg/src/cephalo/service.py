"""HTTP service for the upload -> decode -> correct -> report cycle."""

from __future__ import annotations

import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from fastapi import FastAPI, File, Form, HTTPException, Request, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, PlainTextResponse, Response

from . import reporting
from .cephalometrics import (LandmarkSet, MeasurementDefinition,
                             MeasurementResult, default_measurements,
                             evaluate)
from .errors import (CaseNotFound, CaseStateError, CephaloError, CorruptImage,
                     TooSmall, UnsupportedFormat)
from .inference import SessionPool
from .pipeline import decode_image
from .reporting import CephReport
from .store import CaseStore

MAX_UPLOAD_BYTES = 64 * 1024 * 1024


def _landmark_json(lm) -> dict:
    return {"id": lm.landmark_id, "x": lm.x, "y": lm.y,
            "confidence": lm.confidence, "provenance": lm.provenance}


def _measurement_json(m: MeasurementResult) -> dict:
    return {"id": m.definition_id, "value": m.value, "units": m.units,
            "status": m.status, "inputs_manual": m.inputs_manual}


def _landmarks_payload(landmarks: LandmarkSet) -> dict:
    return {"landmarks": [_landmark_json(lm)
                          for lm in landmarks.points.values()],
            "missing": list(landmarks.missing)}


def create_app(data_dir: str | Path | None = None,
               model_json: str | Path | None = None,
               pool_size: int | None = None,
               definitions: Sequence[MeasurementDefinition] | None = None,
               ) -> FastAPI:
    """Build the service; arguments default to the CEPH_* environment."""
    data_dir = Path(data_dir or os.environ.get("CEPH_DATA_DIR", "./ceph-data"))
    model_json = Path(model_json or os.environ["CEPH_MODEL_JSON"])
    if pool_size is None:
        pool_size = int(os.environ.get("CEPH_SESSION_POOL",
                                       str(os.cpu_count() or 1)))
    definitions = list(definitions if definitions is not None
                       else default_measurements())

    store = CaseStore(data_dir)
    pool = SessionPool(model_json, size=pool_size)
    app = FastAPI(title="cephalo case service")
    app.add_middleware(CORSMiddleware, allow_origins=["*"],
                       allow_methods=["*"], allow_headers=["*"])
    app.state.store = store
    app.state.pool = pool

    @app.exception_handler(CephaloError)
    async def _domain_error(request: Request, exc: CephaloError):
        status = 500
        if isinstance(exc, (UnsupportedFormat, CorruptImage, TooSmall)):
            status = 400
        elif isinstance(exc, CaseNotFound):
            status = 404
        elif isinstance(exc, CaseStateError):
            status = 409
        return JSONResponse(status_code=status, content={
            "error": type(exc).__name__, "detail": str(exc)})

    def _measure(case_id: str) -> list[MeasurementResult]:
        record = store.read_record(case_id)
        return evaluate(store.current_landmarks(case_id), definitions,
                        record.pixel_spacing)

    def _report(case_id: str) -> CephReport:
        record = store.read_record(case_id)
        if record.status == "UPLOADED":
            raise CaseStateError(f"case {case_id} not decoded yet")
        return CephReport(
            case_id=case_id,
            created_at=datetime.now(timezone.utc),
            landmarks=store.current_landmarks(case_id),
            measurements=_measure(case_id),
            pixel_spacing=record.pixel_spacing,
            timings_ms=record.timings_ms)

    @app.get("/healthz")
    def healthz():
        return {"model": pool.kind, "landmark_count": pool.landmark_count}

    @app.post("/cases", status_code=201)
    async def create_case(image: UploadFile = File(...),
                          pixel_spacing_mm: float | None = Form(None)):
        data = await image.read()
        if len(data) > MAX_UPLOAD_BYTES:
            raise HTTPException(413, detail="payload exceeds 64 MB")
        if pixel_spacing_mm is not None and pixel_spacing_mm <= 0:
            raise HTTPException(422, detail="pixel_spacing_mm must be > 0")
        case_id = store.create_case(data, pixel_spacing=pixel_spacing_mm)
        return {"case_id": case_id}

    @app.post("/cases/{case_id}/decode")
    def decode_case(case_id: str):
        with store.lock(case_id):
            radiograph = store.load_radiograph(case_id)
            with pool.acquire() as backend:
                outcome = decode_image(radiograph, backend, definitions,
                                       image_ref=case_id)
            store.store_decode(case_id, outcome.landmarks,
                               outcome.timings_ms)
        payload = _landmarks_payload(outcome.landmarks)
        payload["timings_ms"] = outcome.timings_ms
        return payload

    @app.get("/cases/{case_id}/landmarks")
    def get_landmarks(case_id: str):
        payload = _landmarks_payload(store.current_landmarks(case_id))
        payload["status"] = store.read_record(case_id).status
        return payload

    @app.put("/cases/{case_id}/landmarks/{landmark_id}")
    def correct_landmark(case_id: str, landmark_id: str, body: dict):
        try:
            x, y = float(body["x"]), float(body["y"])
        except (KeyError, TypeError, ValueError):
            raise HTTPException(422, detail="body must carry numeric x, y")
        with store.lock(case_id):
            try:
                store.apply_correction(case_id, landmark_id, x, y)
            except ValueError as exc:
                raise HTTPException(422, detail=str(exc))
            measurements = _measure(case_id)
        return {"measurements": [_measurement_json(m) for m in measurements]}

    @app.get("/cases/{case_id}/report")
    def get_report(case_id: str, format: str = "csv"):
        report = _report(case_id)
        if format == "json":
            return {
                "case_id": report.case_id,
                "created_at": report.created_at.isoformat(),
                "pixel_spacing_mm": report.pixel_spacing,
                **_landmarks_payload(report.landmarks),
                "measurements": [_measurement_json(m)
                                 for m in report.measurements],
                "timings_ms": report.timings_ms,
            }
        if format != "csv":
            raise HTTPException(422, detail="format must be csv or json")
        return PlainTextResponse(reporting.format_csv(report),
                                 media_type="text/csv")

    @app.get("/cases/{case_id}/overlay.png")
    def get_overlay(case_id: str):
        report = _report(case_id)
        radiograph = store.load_radiograph(case_id)
        png = reporting.render_overlay(radiograph, report.landmarks,
                                       definitions)
        return Response(content=png, media_type="image/png")

    return app


def main() -> None:
    """Entry point used by `ceph serve`."""
    import uvicorn

    bind = os.environ.get("CEPH_BIND_ADDR", "127.0.0.1:8000")
    host, _, port = bind.rpartition(":")
    uvicorn.run(create_app(), host=host or "127.0.0.1", port=int(port))
