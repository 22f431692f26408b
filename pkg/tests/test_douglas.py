import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.spatial.transform import Rotation

from plateaulab.douglas import (BoundaryParam, ClosedCurve, DouglasError, HarmonicMap,
                                area_integral, douglas_energy, harmonic_extension,
                                max_single_knot_decrease, mean_value_residual, minimize_douglas,
                                pinned_indices, polar_grid_mesh)


def naive_energy(G):
    """Direct O(N^2) double sum with the diagonal from a centered difference."""
    N = len(G)
    h = 2 * math.pi / N
    total = 0.0
    for i in range(N):
        for j in range(N):
            if i == j:
                d = (G[(i + 1) % N] - G[i - 1]) / (2 * h)
                total += 4 * float(d @ d)
            else:
                diff = G[i] - G[j]
                total += float(diff @ diff) / math.sin(math.pi * (i - j) / N) ** 2
    return total * h * h / (16 * math.pi)


@pytest.fixture(scope="module")
def ellipse_result():
    return minimize_douglas(ClosedCurve.ellipse(1.0, 0.5), N=512)


def test_circle_energy_is_pi():
    g = BoundaryParam.uniform(ClosedCurve.circle(), 512)
    assert abs(douglas_energy(g) - math.pi) < 1e-3


def test_energy_matches_direct_double_sum():
    rng = np.random.default_rng(1)
    knots = np.sort(rng.random(48))
    g = BoundaryParam(ClosedCurve.ellipse(1.3, 0.4), knots)
    assert douglas_energy(g) == pytest.approx(naive_energy(g.points), rel=1e-12)


def test_uniform_ellipse_matches_dirichlet_energy():
    # uniform angle: the extension is linear, energy (a^2 + b^2) pi / 2
    a, b = 1.0, 0.5
    g = BoundaryParam.uniform(ClosedCurve.ellipse(a, b), 512)
    assert douglas_energy(g) == pytest.approx(math.pi * (a * a + b * b) / 2, rel=1e-3)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_energy_is_invariant_under_rigid_motions(seed):
    rng = np.random.default_rng(seed)
    g = BoundaryParam(ClosedCurve.ellipse(1.0, 0.6), np.sort(rng.random(64)))
    R = Rotation.random(random_state=seed).as_matrix()
    shift = rng.normal(size=3)
    moved = BoundaryParam(ClosedCurve(lambda t: g.curve.point(t) @ R.T + shift,
                                      lambda t: g.curve.deriv(t) @ R.T), g.knots)
    assert douglas_energy(moved) == pytest.approx(douglas_energy(g), rel=1e-12)


def test_energy_invariant_under_cyclic_shift():
    rng = np.random.default_rng(5)
    knots = np.sort(rng.random(64))
    g = BoundaryParam(ClosedCurve.ellipse(1.0, 0.6), knots)
    shifted = BoundaryParam(g.curve, np.concatenate([knots[7:], knots[:7] + 1.0]))
    assert douglas_energy(shifted) == pytest.approx(douglas_energy(g), rel=1e-12)


def test_invalid_parameterizations():
    c = ClosedCurve.circle()
    with pytest.raises(DouglasError):
        BoundaryParam(c, np.linspace(0, 1, 8, endpoint=False))
    with pytest.raises(DouglasError):
        BoundaryParam(c, np.linspace(1, 0, 32, endpoint=False))
    with pytest.raises(DouglasError):
        ClosedCurve(lambda t: np.zeros((len(t), 3)), lambda t: np.zeros((len(t), 3)))


def test_pins():
    assert pinned_indices(512) == (0, 171, 341)


def test_circle_is_already_optimal():
    res = minimize_douglas(ClosedCurve.circle(), N=256, iterations=50)
    start = BoundaryParam.uniform(ClosedCurve.circle(), 256)
    assert np.max(np.abs(res.param.knots - start.knots)) < 1e-9
    assert res.energy <= res.initial_energy


def test_ellipse_minimization(ellipse_result):
    res = ellipse_result
    assert res.energy < res.initial_energy
    assert all(b <= a + 1e-15 for a, b in zip(res.history, res.history[1:]))
    assert res.max_single_knot_decrease <= 1e-12
    f = harmonic_extension(res.param, 64, 256)
    A = area_integral(f)
    assert A >= math.pi * 0.5 - 5e-3
    assert abs(A - res.energy) / res.energy < 0.01
    assert max_single_knot_decrease(res.param, 1e-7) <= 1e-12


def test_constant_extension():
    G = np.tile([1.0, -2.0, 3.0], (64, 1))
    f = harmonic_extension(G, 16, 64)
    assert np.allclose(f.values, [1.0, -2.0, 3.0], atol=1e-14)


def test_identity_extension():
    g = BoundaryParam.uniform(ClosedCurve.circle(), 512)
    f = harmonic_extension(g, 32, 128)
    r, phi = np.meshgrid(f.r, f.phi, indexing="ij")
    expect = np.stack([r * np.cos(phi), r * np.sin(phi), 0 * r], axis=2)
    assert np.max(np.abs(f.values - expect)) < 1e-6


def test_linear_coordinates_stay_equal():
    th = 2 * np.pi * np.arange(128) / 128
    G = np.stack([np.cos(th), np.sin(th), np.cos(th)], axis=1)
    f = harmonic_extension(G, 16, 64)
    assert np.allclose(f.values[..., 2], f.values[..., 0], atol=1e-13)


def test_boundary_ring_and_mean_value():
    u = np.arange(128) / 128
    g = BoundaryParam(ClosedCurve.ellipse(1.0, 0.7), u + 0.02 * np.sin(2 * np.pi * u))
    f = harmonic_extension(g, 64, 128)
    assert np.allclose(f.values[-1], g.points, atol=1e-12)
    assert mean_value_residual(f) < 1e-2


def test_area_of_unit_disk_and_scaling():
    g = BoundaryParam.uniform(ClosedCurve.circle(), 512)
    f = harmonic_extension(g, 64, 256)
    A = area_integral(f)
    assert abs(A - math.pi) < 1e-2
    scaled = HarmonicMap(f.r, f.phi, 2.5 * f.values)
    assert area_integral(scaled) == pytest.approx(2.5 ** 2 * A, rel=1e-12)
    assert abs(A - douglas_energy(g)) / douglas_energy(g) < 0.01


def test_polar_mesh_area():
    g = BoundaryParam.uniform(ClosedCurve.circle(), 256)
    f = harmonic_extension(g, 16, 64)
    V, T = polar_grid_mesh(f)
    a = 0.5 * np.linalg.norm(np.cross(V[T[:, 1]] - V[T[:, 0]], V[T[:, 2]] - V[T[:, 0]]), axis=1)
    assert a.sum() == pytest.approx(64 / 2 * math.sin(2 * math.pi / 64), rel=1e-9)
    assert len(T) == 64 + 2 * 64 * 15
