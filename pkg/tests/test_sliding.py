import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plateaulab.builders import cylinder_mesh, disk_fan_mesh, scene_mesh, y_cone_scene, y_seed_mesh
from plateaulab.reference import TwoCircleConfig, catenoid_area, catenoid_parameter, y_film
from plateaulab.sliding import (FREE, BoundaryPiece, MeshError, MinimalityProbe, SlidingMesh,
                                apply_displacement, area_gradient, check_local_sliding_minimality,
                                evolve, singular_edge_stats, total_area)


def circles(h, R=1.0):
    return [BoundaryPiece.circle((0, 0, h), (0, 0, 1), R), BoundaryPiece.circle((0, 0, -h), (0, 0, 1), R)]


def random_mesh(seed, n=5):
    """Perturbed grid patch with some vertices on a plane and a circle piece."""
    rng = np.random.default_rng(seed)
    xs = np.linspace(0, 1, n)
    V = np.array([[x, y, 0.0] for y in xs for x in xs]) + 0.05 * rng.normal(size=(n * n, 3))
    T = []
    for j in range(n - 1):
        for i in range(n - 1):
            a, b, c, d = j * n + i, j * n + i + 1, (j + 1) * n + i + 1, (j + 1) * n + i
            T += [(a, b, c), (a, c, d)]
    return V, np.array(T)


def fd_gradient(mesh, eps=1e-6):
    G = np.zeros_like(mesh.vertices)
    for v in range(len(mesh.vertices)):
        for k in range(3):
            m = mesh.copy()
            m.vertices[v, k] += eps
            up = total_area(m)
            m.vertices[v, k] -= 2 * eps
            G[v, k] = (up - total_area(m)) / (2 * eps)
    return G


@pytest.mark.parametrize("seed", range(10))
def test_gradient_matches_finite_differences(seed):
    V, T = random_mesh(seed)
    m = SlidingMesh(V, T)
    G = area_gradient(m, project=False)
    F = fd_gradient(m)
    assert np.linalg.norm(G - F) / np.linalg.norm(F) < 1e-5


def test_square_area_and_flat_gradient():
    V = np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float)
    m = SlidingMesh(V, [(0, 1, 2), (0, 2, 3)])
    assert total_area(m) == pytest.approx(1.0)
    V, T = random_mesh(0, 4)
    V[:, 2] = 0
    V[5] = [0.4, 0.35, 0.0]
    G = area_gradient(SlidingMesh(V, T), project=False)
    assert np.all(np.abs(G[:, 2]) < 1e-15)


def test_plane_labeled_gradient_is_tangent():
    V, T = random_mesh(2)
    plane = BoundaryPiece.plane((0, 0, 0), (0, 1, 1))
    lab = np.full(len(V), FREE)
    lab[:5] = 0
    m = SlidingMesh(V, T, lab, [plane], tol=1.0)
    m.vertices = m.project()
    G = area_gradient(m)
    n = np.array([0, 1, 1]) / math.sqrt(2)
    assert np.all(np.abs(G[:5] @ n) < 1e-14)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["circle", "plane", "torus", "polyline"]),
       st.lists(st.floats(-3, 3), min_size=3, max_size=3))
def test_closest_point_is_on_piece_and_idempotent(kind, p):
    piece = {"circle": BoundaryPiece.circle((0.1, 0, 0), (1, 2, 3), 0.7),
             "plane": BoundaryPiece.plane((0, 0, 1), (0, 1, 0)),
             "torus": BoundaryPiece.torus((0, 0, 0), (0, 0, 1), 1.0, 0.3),
             "polyline": BoundaryPiece.polyline([(0, 0, 0), (1, 0, 0), (1, 1, 0)])}[kind]
    q = piece.closest_point(np.array(p))
    assert piece.residual(q)[0] < 1e-9
    assert np.allclose(piece.closest_point(q), q, atol=1e-12)


def test_y_cone_mesh_angles():
    cs = y_cone_scene(n_arc=8)
    stats = singular_edge_stats(scene_mesh(cs))
    assert stats.count == 2
    assert np.allclose(stats.angles_deg, 120.0, atol=1e-9)


def test_y_strips_area():
    cs = y_cone_scene(n_arc=8)
    m = scene_mesh(cs)
    assert total_area(m) == pytest.approx(3 * 8 / 2 * math.sin(math.pi / 8))


def test_manifold_mesh_has_no_singular_edges():
    m = disk_fan_mesh(circles(0.0)[:1], 0, 24, 3)
    assert singular_edge_stats(m).summary() == {"count": 0}


def test_flat_disk_does_not_move():
    m = disk_fan_mesh(circles(0.0)[:1], 0, 24, 4)
    out, rep = evolve(m, tol=1e-6)
    assert rep.converged
    assert np.max(np.abs(out.vertices - m.vertices)) < 1e-6


def test_catenoid_at_h_0_3():
    m = cylinder_mesh(circles(0.3), (0, 1), 32, 16)
    out, rep = evolve(m, tol=1e-6, max_iters=3000)
    assert rep.converged
    assert rep.final_area < rep.initial_area
    assert all(b < a for a, b in zip(rep.area_history, rep.area_history[1:]))
    assert rep.max_constraint_residual < 1e-7
    A = catenoid_area(TwoCircleConfig(1.0, 0.3))
    assert abs(rep.final_area - A) / A < 0.01


def test_y_film_at_h_0_15():
    m = y_seed_mesh(circles(0.15), (0, 1), 24, 16, 8)
    assert singular_edge_stats(m).count == 24
    out, rep = evolve(m, tol=1e-6, max_iters=3000)
    assert rep.converged
    s = singular_edge_stats(out).summary()
    assert s["count"] == 24
    assert abs(s["mean"] - 120.0) < 2.0
    assert s["max_abs_dev_from_120"] < 2.0
    A = y_film(TwoCircleConfig(1.0, 0.15)).area
    assert abs(rep.final_area - A) / A < 0.02


def test_labeled_vertex_off_piece_is_rejected():
    pieces = circles(0.0)[:1]
    m = disk_fan_mesh(pieces, 0, 12, 1)
    V = m.vertices.copy()
    V[0] *= 1.1
    with pytest.raises(MeshError):
        SlidingMesh(V, m.triangles, m.labels, pieces)


@pytest.fixture(scope="module")
def spiked_disk():
    pieces = circles(0.0)[:1]
    m = disk_fan_mesh(pieces, 0, 24, 6)
    c = int(np.argmin(np.linalg.norm(m.vertices, axis=1)))
    m.vertices[c, 2] = 0.3
    return m


def test_spiked_disk_fails_and_replays(spiked_disk):
    probe = MinimalityProbe((0, 0, 0.1), 0.45, trials=200, seed=4)
    res = check_local_sliding_minimality(spiked_disk, probe)
    assert not res.passed
    moved = apply_displacement(spiked_disk, res.worst_displacement)
    assert total_area(spiked_disk) - total_area(moved) == pytest.approx(res.worst_decrease, rel=1e-9)
    c = int(np.argmin(np.linalg.norm(spiked_disk.vertices[:, :2], axis=1)))
    assert moved.vertices[c, 2] < spiked_disk.vertices[c, 2]
    again = check_local_sliding_minimality(spiked_disk, probe)
    assert again.worst_trial == res.worst_trial and again.worst_decrease == res.worst_decrease


def test_huge_gauge_passes_vacuously(spiked_disk):
    probe = MinimalityProbe((0, 0, 0.1), 0.45, trials=50, h=1e3)
    assert check_local_sliding_minimality(spiked_disk, probe).passed


def test_probe_threads_merge_deterministically(spiked_disk):
    a = check_local_sliding_minimality(spiked_disk, MinimalityProbe((0, 0, 0.1), 0.45, 64, seed=2))
    b = check_local_sliding_minimality(spiked_disk, MinimalityProbe((0, 0, 0.1), 0.45, 64, seed=2,
                                                                    threads=4))
    assert a.to_json() == b.to_json()


def test_probe_validation():
    with pytest.raises(ValueError):
        MinimalityProbe((0, 0, 0), 0.0)
    with pytest.raises(ValueError):
        MinimalityProbe((0, 0, 0), 0.1, trials=0)


def test_converged_catenoid_passes_probe():
    cfg = TwoCircleConfig(1.0, 0.1)
    m = cylinder_mesh(circles(0.1), (0, 1), 24, 16)
    out, rep = evolve(m, tol=1e-6)
    c = catenoid_parameter(cfg)
    res = check_local_sliding_minimality(out, MinimalityProbe((c, 0, 0), 0.1, 200))
    assert res.passed
