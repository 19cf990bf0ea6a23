import io
import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from cephalo.cephalometrics import DEFAULT_CATALOG, default_measurements
from cephalo.inference import FixtureBackend, FixtureSpot, load_backend

SIGMAS = (1.5, 2.0, 3.0, 4.0)


def png_bytes(arr: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(arr).save(buf, format="PNG")
    return buf.getvalue()


def make_radiograph_array(width=1935, height=2400, seed=7) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.integers(0, 256, (height, width)).astype(np.uint8)


def planted_spots(input_size=256, seed=1, jitter=True,
                  content_pad_x=0, content_pad_y=0) -> list[FixtureSpot]:
    """One spot per catalog landmark, sigma cycling through SIGMAS,
    non-integer centers at least 3*sigma from the borders.

    content_pad_* shrink the planting region to the letterboxed content
    area so every plant maps inside the source image.
    """
    rng = np.random.default_rng(seed)
    spots = []
    for i, lid in enumerate(DEFAULT_CATALOG.ids):
        sigma = SIGMAS[i % len(SIGMAS)]
        margin = 3 * sigma + 1
        x = float(rng.uniform(content_pad_x + margin,
                              input_size - content_pad_x - margin))
        y = float(rng.uniform(content_pad_y + margin,
                              input_size - content_pad_y - margin))
        if jitter:  # force awkward fractional offsets too
            x = round(x) + float(rng.uniform(-0.5, 0.5))
            y = round(y) + float(rng.uniform(-0.5, 0.5))
        spots.append(FixtureSpot(landmark_id=lid, x=x, y=y, sigma=sigma))
    return spots


def write_fixture_model(path: Path, spots, input_size=256) -> Path:
    body = {
        "kind": "fixture",
        "input_width": input_size,
        "input_height": input_size,
        "landmarks": [s.landmark_id for s in spots],
        "fixture_spec": [[s.landmark_id, s.x, s.y, s.sigma] for s in spots],
    }
    path.write_text(json.dumps(body, indent=1))
    return path


@pytest.fixture(scope="session")
def spots():
    # content area of a 1935x2400 source letterboxed into 256x256:
    # scale = 256/2400, scaled width round(1935*scale) = 206, pad_x = 25
    return planted_spots(content_pad_x=25)


@pytest.fixture(scope="session")
def backend(spots):
    return FixtureBackend(256, 256, spots)


@pytest.fixture(scope="session")
def definitions():
    return default_measurements()


@pytest.fixture(scope="session")
def big_scan(tmp_path_factory):
    """1935x2400 8-bit PNG with a calibration sidecar (0.1 mm/px)."""
    d = tmp_path_factory.mktemp("scan")
    path = d / "scan.png"
    path.write_bytes(png_bytes(make_radiograph_array()))
    (d / "scan.calib.json").write_text('{"pixel_spacing_mm": 0.1}')
    return path


@pytest.fixture(scope="session")
def model_json(tmp_path_factory, spots):
    d = tmp_path_factory.mktemp("model")
    return write_fixture_model(d / "model.json", spots)


@pytest.fixture()
def app_client(tmp_path, model_json):
    from fastapi.testclient import TestClient

    from cephalo.service import create_app

    app = create_app(data_dir=tmp_path / "cases", model_json=model_json,
                     pool_size=2)
    return TestClient(app)
