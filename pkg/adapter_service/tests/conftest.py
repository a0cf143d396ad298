from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from adapter_service.app import create_app
from adapter_service.scenario import config_from_obj

CONFIG_OBJ = {
    "seed": 0,
    "embed_dim": 16,
    "roles": {role: {"kind": "canned"} for role in (
        "describer", "text_llm", "detector", "tracker", "referrer", "embedder", "scene_detector"
    )},
    "videos": {
        "vid0": {
            "width_px": 128,
            "height_px": 96,
            "fps": 3.0,
            "duration_s": 10.0,
            "cuts": [{"t": 4.0, "strength": 27.0}, {"t": 7.5, "strength": 12.0}],
            "objects": [
                {
                    "label": "person",
                    "referring": "person on the left",
                    "box": [4.0, 4.0, 24.0, 32.0],
                    "frames": [0, 29],
                    "score": 0.9,
                },
                {
                    "label": "person",
                    "referring": "person on the right",
                    "box": [80.0, 6.0, 110.0, 40.0],
                    "frames": [6, 29],
                    "score": 0.85,
                },
                {
                    "label": "dog",
                    "referring": "dog by the fence",
                    "box": [40.0, 60.0, 90.0, 90.0],
                    "frames": [0, 29],
                    "score": 0.95,
                },
            ],
        }
    },
}


@pytest.fixture(scope="session")
def service_config():
    return config_from_obj(CONFIG_OBJ)


@pytest.fixture()
def client(service_config):
    return TestClient(create_app(service_config))
