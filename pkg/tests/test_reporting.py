import csv
import io
from datetime import datetime, timezone

import numpy as np
import pytest
from PIL import Image

from cephalo.cephalometrics import (DecodedLandmark, LandmarkSet,
                                    MeasurementDefinition, MeasurementResult)
from cephalo.image_io import RadiographImage
from cephalo.reporting import (CephReport, format_csv, parse_csv,
                               plot_confidences, render_overlay, round2)

TS = datetime(2024, 5, 1, 12, 0, 0, tzinfo=timezone.utc)


def _report(points=None, missing=(), measurements=(), spacing=None,
            case_id="case-1"):
    points = points if points is not None else {
        "S": DecodedLandmark("S", 123.5, 456.25, 0.91),
    }
    return CephReport(
        case_id=case_id, created_at=TS,
        landmarks=LandmarkSet(image_ref=case_id, points=points,
                              missing=tuple(missing)),
        measurements=list(measurements), pixel_spacing=spacing)


class TestCsvLayout:
    def test_landmark_row(self):
        text = format_csv(_report())
        assert "LANDMARK,S,123.50,456.25,0.91,auto\r\n" in text

    def test_measurement_row(self):
        text = format_csv(_report(measurements=[MeasurementResult(
            "SNA", 85.0, "deg", "WITHIN")]))
        assert "MEASUREMENT,SNA,85.00,deg,WITHIN,\r\n" in text

    def test_unavailable_measurement_empty_value(self):
        text = format_csv(_report(measurements=[MeasurementResult(
            "GoMe", None, "mm", "UNAVAILABLE")]))
        assert "MEASUREMENT,GoMe,,mm,UNAVAILABLE,\r\n" in text

    def test_meta_rows(self):
        text = format_csv(_report(spacing=0.1))
        lines = text.split("\r\n")
        assert lines[0] == ("record,id,x_or_value,y_or_units,"
                            "confidence_or_status,provenance")
        assert lines[1] == "META,case_id,case-1,,,"
        assert lines[2] == "META,created_at,2024-05-01T12:00:00Z,,,"
        assert lines[3] == "META,pixel_spacing_mm,0.1,,,"

    def test_manual_landmark_empty_confidence(self):
        text = format_csv(_report(points={
            "N": DecodedLandmark("N", 10.0, 20.0, None, "manual")}))
        assert "LANDMARK,N,10.00,20.00,,manual\r\n" in text

    def test_crlf_terminators_throughout(self):
        text = format_csv(_report())
        assert text.endswith("\r\n")
        assert text.replace("\r\n", "").count("\n") == 0

    def test_rfc4180_quoting(self):
        text = format_csv(_report(case_id='we,ird "case"'))
        assert '"we,ird ""case"""' in text
        # strict reparse keeps the original field
        parsed = parse_csv(text)
        assert parsed.case_id == 'we,ird "case"'


class TestRounding:
    @pytest.mark.parametrize("value,expected", [
        (85.005, "85.01"),  # half-up, not banker's
        (85.004999, "85.00"),
        (0.125, "0.13"),
        (2.0, "2.00"),
        (-1.005, "-1.01"),
    ])
    def test_half_up(self, value, expected):
        assert round2(value) == expected


class TestRoundTrip:
    def test_fields_survive(self):
        report = _report(
            points={
                "S": DecodedLandmark("S", 123.456, 456.251, 0.914),
                "N": DecodedLandmark("N", 5.0, 7.125, None, "manual"),
            },
            missing=("Ba",),
            measurements=[
                MeasurementResult("SNA", 85.456, "deg", "ABOVE"),
                MeasurementResult("GoMe", None, "mm", "UNAVAILABLE"),
            ],
            spacing=0.094)
        parsed = parse_csv(format_csv(report))
        assert parsed.case_id == "case-1"
        assert parsed.pixel_spacing == 0.094
        assert parsed.landmarks.missing == ("Ba",)
        s = parsed.landmarks.points["S"]
        assert (s.x, s.y, s.confidence, s.provenance) == (123.46, 456.25,
                                                          0.91, "auto")
        n = parsed.landmarks.points["N"]
        assert (n.x, n.y, n.confidence, n.provenance) == (5.0, 7.13, None,
                                                          "manual")
        m = {m.definition_id: m for m in parsed.measurements}
        assert m["SNA"].value == 85.46 and m["SNA"].status == "ABOVE"
        assert m["GoMe"].value is None
        assert m["GoMe"].status == "UNAVAILABLE"

    def test_reserialization_is_stable(self):
        report = _report(measurements=[
            MeasurementResult("SNA", 85.0, "deg", "WITHIN")])
        once = format_csv(report)
        parsed = parse_csv(once)
        again = CephReport(case_id=parsed.case_id, created_at=TS,
                           landmarks=parsed.landmarks,
                           measurements=parsed.measurements,
                           pixel_spacing=parsed.pixel_spacing)
        assert format_csv(again) == once


def rfc4180_validate(text: str) -> None:
    """Minimal RFC 4180 conformance check."""
    assert text.endswith("\r\n")
    body = text[:-2]
    records = body.split("\r\n")
    widths = set()
    for record in records:
        fields = next(csv.reader(io.StringIO(record), strict=True))
        widths.add(len(fields))
        for raw, parsed in zip(record.split(","), fields):
            # unquoted fields may not contain quotes or commas
            if not raw.startswith('"'):
                assert '"' not in raw and "," not in parsed or raw == parsed
    assert widths == {6}


def test_output_is_rfc4180(tmp_path):
    report = _report(missing=("Ba",), measurements=[
        MeasurementResult("SNA", 85.0, "deg", "WITHIN")], spacing=0.1)
    rfc4180_validate(format_csv(report))


def _image(width=100, height=80, fill=30):
    return RadiographImage(
        pixels=np.full((height, width), fill, dtype=np.uint8),
        source_format="PNG")


def _decode_png(data: bytes) -> np.ndarray:
    return np.asarray(Image.open(io.BytesIO(data)).convert("RGB"))


class TestOverlay:
    def test_marker_drawn_at_landmark(self):
        lset = LandmarkSet("c", {"S": DecodedLandmark("S", 30, 40, 1.0)})
        rgb = _decode_png(render_overlay(_image(), lset))
        region = rgb[35:46, 25:36]
        assert (region == (255, 64, 64)).all(axis=-1).any()

    def test_empty_set_is_plain_image(self):
        lset = LandmarkSet("c", {})
        rgb = _decode_png(render_overlay(_image(), lset))
        assert rgb.shape == (80, 100, 3)
        assert (rgb == 30).all()

    def test_corner_marker_clipped(self):
        lset = LandmarkSet("c", {"S": DecodedLandmark("S", 0, 0, 1.0)})
        rgb = _decode_png(render_overlay(_image(), lset))
        assert rgb.shape == (80, 100, 3)  # no resize, no crash

    def test_deterministic_bytes(self):
        lset = LandmarkSet("c", {
            "S": DecodedLandmark("S", 30.5, 40.5, 1.0),
            "N": DecodedLandmark("N", 70.0, 10.0, None, "manual"),
        })
        defs = [MeasurementDefinition("d", "DISTANCE", ("S", "N"), "mm",
                                      1.0, 1.0)]
        a = render_overlay(_image(), lset, defs)
        b = render_overlay(_image(), lset, defs)
        assert a == b

    def test_polyline_drawn_for_measurement(self):
        lset = LandmarkSet("c", {
            "S": DecodedLandmark("S", 10, 40, 1.0),
            "N": DecodedLandmark("N", 90, 40, 1.0),
        })
        defs = [MeasurementDefinition("d", "DISTANCE", ("S", "N"), "mm",
                                      1.0, 1.0)]
        rgb = _decode_png(render_overlay(_image(), lset, defs))
        assert (rgb[40, 50] == (64, 255, 96)).all()

    def test_16bit_source_renders(self):
        img = RadiographImage(
            pixels=np.full((80, 100), 30000, dtype=np.uint16),
            source_format="TIFF")
        lset = LandmarkSet("c", {"S": DecodedLandmark("S", 30, 40, 1.0)})
        rgb = _decode_png(render_overlay(img, lset))
        assert rgb.shape == (80, 100, 3)


class TestConfidenceChart:
    def test_all_confident(self):
        points = {f"L{i}": DecodedLandmark(f"L{i}", 10, 10, 1.0)
                  for i in range(12)}
        png = plot_confidences(_report(points=points))
        assert png.startswith(b"\x89PNG")

    def test_missing_landmark_included(self):
        points = {f"L{i}": DecodedLandmark(f"L{i}", 10, 10, 1.0)
                  for i in range(11)}
        png = plot_confidences(_report(points=points, missing=("Ba",)))
        assert png.startswith(b"\x89PNG")

    def test_empty_set(self):
        png = plot_confidences(_report(points={}))
        assert png.startswith(b"\x89PNG")
