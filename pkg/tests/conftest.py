from __future__ import annotations

import pytest

from videoforge.annotator import annotate_video
from videoforge.backends.gateway import Gateway
from videoforge.backends.world import two_children_dog_world


@pytest.fixture(scope="session")
def fixture_world():
    return two_children_dog_world()


@pytest.fixture(scope="session")
def stub_gateway(fixture_world):
    return Gateway.stub({fixture_world.record.video_id: fixture_world}, seed=7)


@pytest.fixture(scope="session")
def fixture_metadata(fixture_world, stub_gateway):
    return annotate_video(fixture_world.record, stub_gateway).metadata
