import datetime

import numpy as np
import pytest

from burnscan import Scene

from _acceptance_log import RESULTS


def pytest_terminal_summary(terminalreporter):
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)


RGBN = {"red": 0, "green": 1, "blue": 2, "nir": 3}


def make_scene(seed=0, h=48, w=48, band_map=RGBN, day=1, scene_id=None,
               dtype=np.float32):
    rng = np.random.default_rng(seed)
    c = max(band_map.values()) + 1
    px = rng.uniform(0.0, 1.2, size=(h, w, c)).astype(dtype)
    return Scene(pixels=px, band_map=dict(band_map),
                 geo=(300000.0, 4100000.0, 10.0), crs_id="synthetic-utm",
                 timestamp=datetime.date(2020, 6, day),
                 scene_id=scene_id or f"scene-{seed}-d{day}")


@pytest.fixture
def scene():
    return make_scene()
