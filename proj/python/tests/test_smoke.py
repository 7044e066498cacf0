import math
from pathlib import Path

import numpy as np
import pytest

import gromov

CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def test_ball_distance_worked_value():
    assert gromov.distance("ball", [0.0, 0.0], [0.6, 0.0]) == pytest.approx(math.log(2), abs=1e-12)


def test_conversion_preserves_distance():
    x, y = [0.3, -0.2, 0.1], [-0.5, 0.4, 0.2]
    d = gromov.distance("ball", x, y)
    hx, hy = gromov.convert(x, "ball", "halfspace"), gromov.convert(y, "ball", "halfspace")
    assert gromov.distance("halfspace", hx, hy) == pytest.approx(d, abs=1e-10)


@pytest.mark.parametrize("k", [2, 3, 4])
def test_free_group_exponent(k):
    delta, divergent = gromov.free_product_exponent([1.0] * k)
    assert delta == pytest.approx(math.log(2 * k - 1), abs=1e-10)
    assert divergent


def test_bim_tripod():
    d = [[0, 1, 1, 1], [1, 0, 2, 2], [1, 2, 0, 2], [1, 2, 2, 0]]
    pts, residual = gromov.bim_embed(d)
    assert pts.shape == (4, 4)
    assert residual < 1e-8
    # first point sits at the hyperboloid origin
    assert np.allclose(pts[:, 0], [1, 0, 0, 0], atol=1e-12)


def test_catalog_and_filter():
    all_entries = gromov.list_experiments(CONFIGS)
    assert len(all_entries) >= 10
    names = [e["name"] for e in gromov.list_experiments(CONFIGS, "measure")]
    assert names == ["cusped_global_measure"]


def test_run_bundled_config_is_deterministic(tmp_path):
    a = gromov.run_file(CONFIGS / "worked_numbers.json")
    b = gromov.run_file(CONFIGS / "worked_numbers.json", jobs=2)
    assert a.passed
    assert a.report == b.report and a.tables == b.tables
    assert "data.csv" in a.tables
    a.write(tmp_path)
    assert (tmp_path / "report.json").exists()


def test_bad_config_raises_with_code():
    with pytest.raises(gromov.GromovError) as info:
        gromov.run({"kind": "no-such-kind"})
    assert info.value.code == "CONFIG_INVALID"
