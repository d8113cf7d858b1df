import json
import math

import pytest

from heightlab.harness import golden


@pytest.mark.parametrize("name", sorted(golden.CASES))
def test_fixture_matches_recomputation(name):
    assert golden.path_for(name).exists(), "missing fixture; run `heightlab --fixtures-regen`"
    assert golden.render(name) == golden.load(name)


def test_pigeonhole_fixture_content():
    data = json.loads(golden.load("pigeonhole-c10"))
    assert data["status"] == "ok" and len(data["Y"]) >= data["threshold"] == 2


def test_escape_radius_fixture_c0():
    row = json.loads(golden.load("escape-radius-vs-M-d2"))["rows"][0]
    # z^2/2: C = |4| max{...} = 8, and 0 is fixed so M = 0
    assert row["c"] == 0 and row["M"]["value"] == 0
    assert row["log_C"] == pytest.approx(math.log(8))
