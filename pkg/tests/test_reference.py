import math

import numpy as np
import pytest

from plateaulab import reference as ref
from plateaulab.reference import TwoCircleConfig


@pytest.mark.parametrize("h", [0.05, 0.1, 0.2, 0.3])
def test_two_circle_values_match_frozen_oracle(h, oracle_values):
    o = oracle_values[f"h={h}"]
    cfg = TwoCircleConfig(1.0, h)
    assert ref.catenoid_parameter(cfg) == pytest.approx(o["catenoid_c"], rel=1e-12)
    assert ref.catenoid_area(cfg) == pytest.approx(o["catenoid_area"], rel=1e-10)
    y = ref.y_film(cfg)
    assert y.rho == pytest.approx(o["y_rho"], rel=1e-12)
    assert y.c == pytest.approx(o["y_c"], rel=1e-12)
    assert y.area == pytest.approx(o["y_area"], rel=1e-10)
    assert y.junction_angle_deg == pytest.approx(o["y_angle_deg"], abs=1e-9)


def test_ordering_at_h_0_1():
    cfg = TwoCircleConfig(1.0, 0.1)
    assert ref.catenoid_area(cfg) < ref.y_film_area(cfg) < ref.two_disk_area(cfg)


def test_monotone_in_h():
    hs = np.linspace(0.02, 0.4, 20)
    cat = [ref.catenoid_area(TwoCircleConfig(1.0, h)) for h in hs]
    yf = [ref.y_film_area(TwoCircleConfig(1.0, h)) for h in hs]
    assert all(b > a for a, b in zip(cat, cat[1:]))
    assert all(b > a for a, b in zip(yf, yf[1:]))
    assert ref.catenoid_area(TwoCircleConfig(1.0, 1e-4)) == pytest.approx(4 * math.pi * 1e-4, rel=1e-3)
    assert ref.y_film_area(TwoCircleConfig(1.0, 1e-4)) == pytest.approx(math.pi, rel=1e-3)


def test_existence_thresholds():
    hmax = ref.catenoid_max_h()
    assert ref.catenoid_area(TwoCircleConfig(1.0, hmax * 0.999)) is not None
    assert ref.catenoid_area(TwoCircleConfig(1.0, hmax * 1.001)) is None
    t = ref.thresholds()
    assert 0 < t["catenoid_vs_two_disks_h"] < t["catenoid_max_h"]
    assert t["y_film_max_h"] > 0
    with pytest.raises(ValueError):
        ref.y_film(TwoCircleConfig(1.0, t["y_film_max_h"] * 1.01))


def test_cone_densities(oracle_values):
    d = ref.cone_densities()
    assert d["Y"]["exact"] == pytest.approx(1.5 * math.pi)
    assert d["T"]["exact"] == pytest.approx(oracle_values["t_cone_unit_ball_area"], rel=1e-14)
    assert 1.5 * math.pi < d["T"]["numeric"] < 2 * math.pi
    for k in d:
        assert d[k]["numeric"] == pytest.approx(d[k]["exact"], rel=1e-8)


def test_quadrature_is_converged():
    a = ref.cone_densities(64)["T"]["numeric"]
    b = ref.cone_densities(128)["T"]["numeric"]
    assert abs(a - b) / b < 1e-3


def test_config_validation():
    with pytest.raises(ValueError):
        TwoCircleConfig(1.0, 0.0)
