import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plateaulab.grid_ff import CubicalGrid, InputSet, SafeRegion, ff_project
from plateaulab.measure import (LABEL, MeasureError, audit_cover, hausdorff_of_faceset,
                                hausdorff_upper, normalizing_constant, sample_faceset,
                                sample_segment, sample_square, sample_triangles)


def test_normalizing_constants():
    assert normalizing_constant(0) == 1.0
    assert normalizing_constant(1) == pytest.approx(1.0)
    assert normalizing_constant(2) == pytest.approx(math.pi / 4)
    assert normalizing_constant(3) == pytest.approx(math.pi / 6)


def test_empty_set_and_bad_delta():
    assert hausdorff_upper(np.zeros((0, 3)), 2, 0.1).value == 0
    with pytest.raises(MeasureError):
        hausdorff_upper(np.zeros((3, 3)), 1, 0.0)
    with pytest.raises(MeasureError):
        hausdorff_upper(np.zeros((3, 3)), 1, -1.0)


def test_single_point_and_label():
    est = hausdorff_upper(np.array([[0.3, 0.1, 0.0]]), 1, 0.1)
    assert est.value == 0 and est.n_balls == 1
    assert est.to_json()["label"] == LABEL


def test_two_far_points_need_two_balls():
    est = hausdorff_upper(np.array([[0, 0, 0], [1, 0, 0.0]]), 1, 0.1)
    assert est.n_balls == 2


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.integers(1, 2), st.floats(0.02, 0.3))
def test_cover_is_valid(seed, d, delta):
    rng = np.random.default_rng(seed)
    P = sample_segment(300, rng) if d == 1 else sample_square(500, rng)
    est = hausdorff_upper(P, d, delta)
    assert audit_cover(P, est)
    assert np.all(est.diameters <= delta)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from([0.5, 2.0, 3.0]))
def test_scaling_law(seed, lam):
    rng = np.random.default_rng(seed)
    P = sample_square(800, rng)
    a = hausdorff_upper(P, 2, 0.1)
    b = hausdorff_upper(lam * P, 2, lam * 0.1)
    assert b.value == pytest.approx(lam ** 2 * a.value, rel=1e-12)


def test_audit_detects_a_hole():
    rng = np.random.default_rng(0)
    P = sample_segment(200, rng)
    est = hausdorff_upper(P, 1, 0.05)
    est.diameters[:] = 0.0
    assert not audit_cover(P, est)


def test_triangle_sampler_is_area_weighted():
    V = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 3], [1, 0, 3], [0, 3, 3.0]])
    T = np.array([[0, 1, 2], [3, 4, 5]])
    P = sample_triangles(V, T, 20_000, np.random.default_rng(1))
    frac = np.mean(P[:, 2] > 1)
    assert frac == pytest.approx(3 / 4, abs=0.01)


def test_faceset_measure_against_sampled_cover():
    g = CubicalGrid((0, 0, 0), (8, 8, 8), 3)
    a, b, c, d = [0.2, 0.2, 0.56], [0.8, 0.2, 0.56], [0.8, 0.8, 0.608], [0.2, 0.8, 0.608]
    res = ff_project(InputSet(np.array([[a, b, c], [a, c, d]])), g, SafeRegion.everything(g))
    exact = hausdorff_of_faceset(res.faces)
    assert exact == pytest.approx(0.25)
    P = sample_faceset(res.faces, 10_000, np.random.default_rng(0))
    est = hausdorff_upper(P, 2, 0.05)
    assert abs(est.value - exact) / exact <= 0.10
