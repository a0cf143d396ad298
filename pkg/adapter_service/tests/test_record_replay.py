"""Record mode must produce fixtures the primary gateway replays byte-exactly."""

from __future__ import annotations

import threading
import time

import pytest
import uvicorn
from fastapi.testclient import TestClient

from videoforge import protocol
from videoforge.backends.base import BackendConfig, Detection, build_request
from videoforge.backends.gateway import Gateway
from videoforge.backends.replay import ReplayBackend, fixture_path

from adapter_service.app import create_app
from adapter_service.canonical import request_digest, wire_json

from conftest import CONFIG_OBJ
from adapter_service.scenario import config_from_obj


def test_digest_agrees_with_primary_client():
    request = build_request(
        "detect", video_id="vid0", frame_index=3, labels=["dog", "person"]
    )
    from videoforge.protocol import request_digest as primary_digest

    assert request_digest(request) == primary_digest(request)


def test_wire_json_agrees_with_primary():
    from videoforge.protocol import wire_json as primary_wire

    obj = {"a": 3.0, "b": [1, 2.5, None, True], "c": {"d": "text", "e": 0.000431}}
    assert wire_json(obj) == primary_wire(obj)


def _recorded_roundtrip(tmp_path, op, request, typed_call):
    """Record one exchange through the service, then replay via the gateway."""
    config = config_from_obj(CONFIG_OBJ)
    client = TestClient(create_app(config, record_dir=tmp_path))
    live = client.post(protocol.ENDPOINTS[op], json=request)
    assert live.status_code == 200

    path = fixture_path(tmp_path, op, request)
    assert path.exists(), f"fixture not recorded at {path}"

    replay = ReplayBackend(
        BackendConfig(role="describer", mode="replay", seed=7, fixture_dir=str(tmp_path))
    )
    assert replay.replay_body(op, request) == live.text
    return typed_call(replay)


def test_describe_fixture_replays_byte_identical(tmp_path):
    request = build_request(
        "describe",
        video_id="vid0",
        prompt="Summarize the activity.",
        frame_indexes=[0, 1],
        clip=None,
        seed=7,
    )
    value = _recorded_roundtrip(
        tmp_path,
        "describe",
        request,
        lambda replay: replay.describe_video("vid0", "Summarize the activity.", frame_indexes=[0, 1]),
    )
    assert value.startswith("Canned description of vid0")


def test_detect_fixture_replays_identical_values(tmp_path):
    request = build_request("detect", video_id="vid0", frame_index=10, labels=["dog", "person"])
    dets = _recorded_roundtrip(
        tmp_path,
        "detect",
        request,
        lambda replay: replay.detect("vid0", 10, ["dog", "person"]),
    )
    assert len(dets) == 3
    assert all(isinstance(d, Detection) for d in dets)


def test_live_gateway_records_then_replays(tmp_path):
    """Full loop over real HTTP: remote gateway records, replay gateway serves."""
    config = config_from_obj(CONFIG_OBJ)
    app = create_app(config)
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.time() + 10
    while not server.started:
        if time.time() > deadline:
            pytest.fail("uvicorn did not start")
        time.sleep(0.05)
    port = server.servers[0].sockets[0].getsockname()[1]

    try:
        url = f"http://127.0.0.1:{port}"
        remote = Gateway.remote(url, seed=7, record_dir=tmp_path, max_retries=1)
        live_dets = remote.detect("vid0", 10, ["dog", "person"])
        live_cuts = remote.detect_scene_changes("vid0", 20.0)
        live_text = remote.generate_text("Name one color.")

        replay = Gateway.replay(tmp_path, seed=7)
        assert replay.detect("vid0", 10, ["dog", "person"]) == live_dets
        assert replay.detect_scene_changes("vid0", 20.0) == live_cuts
        assert replay.generate_text("Name one color.") == live_text
    finally:
        server.should_exit = True
        thread.join(timeout=5)


def test_record_is_idempotent(tmp_path):
    config = config_from_obj(CONFIG_OBJ)
    client = TestClient(create_app(config, record_dir=tmp_path))
    request = build_request("scenes", video_id="vid0", threshold=20.0)
    first = client.post("/v1/scenes", json=request).text
    second = client.post("/v1/scenes", json=request).text
    assert first == second
    fixtures = list(tmp_path.rglob("*.json"))
    assert len(fixtures) == 1
