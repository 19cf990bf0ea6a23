"""Acceptance gate: one test per release criterion.

Each test prints a single `criterion N: PASS/FAIL` line (visible with
`pytest -s` or in the captured output). Tolerances are pinned here and
must not be loosened to make a failing build green.
"""

import io
import json
import threading
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
from click.testing import CliRunner
from fastapi.testclient import TestClient

from cephalo import kernels
from cephalo.cephalometrics import angle_3pt, angle_lines
from cephalo.cli import main as cli_main
from cephalo.image_io import RadiographImage, normalize
from cephalo.inference import FixtureBackend, decode_all, infer, prepare_input
from cephalo.reporting import parse_csv
from cephalo.service import create_app

from . import oracles
from .conftest import make_radiograph_array, planted_spots, png_bytes
from .test_reporting import rfc4180_validate

DATA = Path(__file__).parent / "data"


@contextmanager
def criterion(num: int, title: str):
    try:
        yield
    except BaseException:
        print(f"criterion {num} ({title}): FAIL", flush=True)
        raise
    print(f"criterion {num} ({title}): PASS", flush=True)


def test_criterion_1_normalization_law():
    rng = np.random.default_rng(101)
    with criterion(1, "normalization law, 200 randomized images"):
        t0 = time.perf_counter()
        for i in range(200):
            w = int(rng.integers(64, 513))
            h = int(rng.integers(64, 513))
            if i % 2:
                arr = rng.integers(0, 65536, (h, w)).astype(np.uint16)
            else:
                arr = rng.integers(0, 256, (h, w)).astype(np.uint8)
            if arr.min() == arr.max():  # keep the sample non-constant
                arr.flat[0] = arr.flat[0] + 1 if arr.min() == 0 else 0
            image = RadiographImage(pixels=arr, source_format="PNG")
            norm = normalize(image)
            assert not norm.degenerate
            assert abs(norm.values.min() - 0.0) <= 1e-9
            assert abs(norm.values.max() - 1.0) <= 1e-9

            # order preservation on sampled pixel pairs
            flat = arr.ravel()
            nflat = norm.values.ravel()
            idx = rng.integers(0, flat.size, size=(50, 2))
            for a, b in idx:
                assert np.sign(nflat[a] - nflat[b]) == np.sign(
                    int(flat[a]) - int(flat[b]))

            # affine invariance of the kernel on the same data
            gain = float(rng.uniform(0.1, 10.0))
            offset = float(rng.uniform(-100.0, 100.0))
            base, _, _ = kernels.minmax_normalize(arr.astype(np.float64))
            mapped, _, _ = kernels.minmax_normalize(
                arr.astype(np.float64) * gain + offset)
            assert np.abs(mapped - base).max() <= 1e-9
        elapsed = time.perf_counter() - t0
        assert elapsed < 5.0, f"took {elapsed:.2f}s"


def test_criterion_2_decode_round_trip():
    with criterion(2, "subpixel decode round trip <= 0.25 px"):
        spots = planted_spots(input_size=256, content_pad_x=25, seed=1)
        sigmas = {s.sigma for s in spots}
        assert sigmas == {1.5, 2.0, 3.0, 4.0}
        assert any(s.x != round(s.x) for s in spots)  # non-integer centers

        arr = make_radiograph_array(1935, 2400, seed=2)
        image = RadiographImage(pixels=arr, source_format="PNG")
        backend = FixtureBackend(256, 256, spots)
        matrix, mapping = prepare_input(normalize(image), backend)
        stack = infer(matrix, backend)
        landmarks = decode_all(stack, mapping, image)
        assert not landmarks.missing

        for i, s in enumerate(spots):
            lm = landmarks.points[s.landmark_id]
            # accuracy against the plant, in original-image pixels
            ox, oy = mapping.to_original(s.x, s.y)
            err = np.hypot(lm.x - ox, lm.y - oy)
            assert err <= 0.25, f"{s.landmark_id}: {err:.4f} px"
            # independent oracle: dense 0.001-px correlation grid search
            gx, gy = oracles.gaussian_peak_grid_search(stack.maps[i], s.sigma)
            mx, my = mapping.to_model(lm.x, lm.y)
            assert abs(mx - gx) <= 0.003 and abs(my - gy) <= 0.003, \
                f"{s.landmark_id}: decode ({mx}, {my}) vs oracle ({gx}, {gy})"


def test_criterion_3_geometry_oracle():
    rng = np.random.default_rng(303)

    def point():
        return tuple(rng.uniform(-1000, 1000, size=2))

    with criterion(3, "geometry vs extended-precision arccos oracle"):
        for _ in range(1000):
            a, v, c = point(), point(), point()
            got = angle_3pt(a, v, c)
            ref = oracles.angle_3pt_arccos(a, v, c)
            assert abs(got - ref) <= 1e-6, (a, v, c)
        for _ in range(1000):
            p1, p2, q1, q2 = point(), point(), point(), point()
            got = angle_lines(p1, p2, q1, q2)
            ref = oracles.angle_lines_arccos(p1, p2, q1, q2)
            assert abs(got - ref) <= 1e-6, (p1, p2, q1, q2)

        # similarity invariance: rotation + uniform scale + translation
        a, v, c = point(), point(), point()
        base = angle_3pt(a, v, c)
        for _ in range(100):
            theta = rng.uniform(0, 2 * np.pi)
            scale = rng.uniform(0.1, 10)
            tx, ty = rng.uniform(-500, 500, size=2)
            rot = np.array([[np.cos(theta), -np.sin(theta)],
                            [np.sin(theta), np.cos(theta)]])

            def xf(p):
                q = scale * (rot @ np.asarray(p)) + (tx, ty)
                return (float(q[0]), float(q[1]))

            assert abs(angle_3pt(xf(a), xf(v), xf(c)) - base) <= 1e-6


def test_criterion_4_timing_envelope(big_scan, model_json):
    with criterion(4, "timing envelope on a 1935x2400 image"):
        result = CliRunner().invoke(cli_main, [
            "--model", str(model_json), "bench", str(big_scan),
            "-n", "5", "--json"])
        assert result.exit_code == 0, result.output
        rows = {r["stage"]: r for r in json.loads(result.output)}
        assert rows["end_to_end"]["median_ms"] < 3000
        non_inference = sum(rows[s]["median_ms"]
                            for s in ("load", "normalize", "decode",
                                      "measure", "report"))
        assert non_inference < 500, f"non-inference stages: {non_inference} ms"


def test_criterion_5_csv_golden_file(tmp_path):
    with criterion(5, "CSV golden file + round trip + RFC 4180"):
        result = CliRunner().invoke(cli_main, [
            "--model", str(DATA / "fixture_model.json"), "decode",
            str(DATA / "fixture_scan.png"), "--csv",
            "--out-dir", str(tmp_path)])
        assert result.exit_code == 0, result.output
        produced = (tmp_path / "fixture_scan.report.csv"
                    ).read_bytes().decode()
        golden = (DATA / "golden_report.csv").read_bytes().decode()

        def stable(text):
            return [line for line in text.split("\r\n")
                    if not (line.startswith("META,case_id")
                            or line.startswith("META,created_at"))]

        assert stable(produced) == stable(golden)
        rfc4180_validate(produced)

        parsed = parse_csv(produced)
        for line in produced.split("\r\n"):
            fields = line.split(",")
            if line.startswith("LANDMARK,") and fields[2]:
                lm = parsed.landmarks.points[fields[1]]
                assert (f"{lm.x:.2f}", f"{lm.y:.2f}") == (fields[2], fields[3])
            elif line.startswith("MEASUREMENT,"):
                m = next(p for p in parsed.measurements
                         if p.definition_id == fields[1])
                assert (f"{m.value:.2f}" if m.value is not None
                        else "") == fields[2]
                assert (m.units, m.status) == (fields[3], fields[4])


def _upload_and_decode(client, seed):
    r = client.post("/cases", files={
        "image": ("scan.png",
                   io.BytesIO(png_bytes(make_radiograph_array(1935, 2400,
                                                              seed))),
                   "image/png")}, data={"pixel_spacing_mm": "0.1"})
    assert r.status_code == 201
    cid = r.json()["case_id"]
    assert client.post(f"/cases/{cid}/decode").status_code == 200
    return cid


def test_criterion_6_correction_semantics(tmp_path, model_json, definitions):
    with criterion(6, "HTTP correction semantics + replay + interleaving"):
        data_dir = tmp_path / "cases"
        app = create_app(data_dir=data_dir, model_json=model_json,
                         pool_size=2)
        client = TestClient(app)

        # moving N changes exactly the measurements that reference N
        cid = _upload_and_decode(client, seed=60)
        before = {m["id"]: m["value"] for m in client.get(
            f"/cases/{cid}/report?format=json").json()["measurements"]}
        n = next(lm for lm in client.get(
            f"/cases/{cid}/landmarks").json()["landmarks"]
            if lm["id"] == "N")
        r = client.put(f"/cases/{cid}/landmarks/N",
                       json={"x": n["x"] + 40, "y": n["y"] - 25})
        assert r.status_code == 200
        after = {m["id"]: m["value"] for m in r.json()["measurements"]}
        references_n = {d.id for d in definitions if "N" in d.points}
        changed = {mid for mid in before if after[mid] != before[mid]}
        assert changed == references_n, (changed, references_n)

        # forced restart: a fresh app over the same directory replays history
        reborn = TestClient(create_app(data_dir=data_dir,
                                       model_json=model_json, pool_size=1))
        lm = next(l for l in reborn.get(
            f"/cases/{cid}/landmarks").json()["landmarks"] if l["id"] == "N")
        assert (lm["x"], lm["y"]) == (n["x"] + 40, n["y"] - 25)
        assert lm["provenance"] == "manual"

        # 50 interleaved corrections across 5 cases
        cids = [_upload_and_decode(client, seed=70 + i) for i in range(5)]
        finals = {}

        def worker(case_id, base):
            local = TestClient(app)
            for k in range(10):
                x, y = float(base + k), float(base + 2 * k)
                assert local.put(f"/cases/{case_id}/landmarks/S",
                                 json={"x": x, "y": y}).status_code == 200
            finals[case_id] = (x, y)

        threads = [threading.Thread(target=worker, args=(c, 100 + 10 * i))
                   for i, c in enumerate(cids)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()

        from cephalo.store import CaseStore
        store = CaseStore(data_dir)
        for case_id in cids:
            history = store.read_history(case_id)
            assert len(history) == 10
            assert all(e["landmark_id"] == "S" for e in history)
            s = next(l for l in client.get(
                f"/cases/{case_id}/landmarks").json()["landmarks"]
                if l["id"] == "S")
            assert (s["x"], s["y"]) == finals[case_id]


def test_criterion_7_cli_service_parity(tmp_path, model_json):
    with criterion(7, "CLI vs service CSV parity for 5 images"):
        client = TestClient(create_app(data_dir=tmp_path / "cases",
                                       model_json=model_json, pool_size=1))
        runner = CliRunner()

        def strip_meta(text):
            return [line for line in text.split("\r\n")
                    if not line.startswith("META,")]

        for seed in range(5):
            arr = make_radiograph_array(1935, 2400, seed=seed)
            img = tmp_path / f"scan{seed}.png"
            img.write_bytes(png_bytes(arr))
            (tmp_path / f"scan{seed}.calib.json").write_text(
                '{"pixel_spacing_mm": 0.1}')

            result = runner.invoke(cli_main, [
                "--model", str(model_json), "decode", str(img),
                "--out-dir", str(tmp_path / "out")])
            assert result.exit_code == 0, result.output
            cli_csv = (tmp_path / "out"
                       / f"scan{seed}.report.csv").read_bytes().decode()

            r = client.post("/cases", files={
                "image": (img.name, io.BytesIO(img.read_bytes()),
                          "image/png")}, data={"pixel_spacing_mm": "0.1"})
            cid = r.json()["case_id"]
            client.post(f"/cases/{cid}/decode")
            svc_csv = client.get(f"/cases/{cid}/report?format=csv").text
            assert strip_meta(cli_csv) == strip_meta(svc_csv)
