import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plateaulab.grid_ff import (CubicalGrid, FaceSet, GridError, InputSet, SafeRegion,
                                discrete_minimize, ff_project, mark_safe_region, replay_moves)
from plateaulab.measure import hausdorff_of_faceset
from plateaulab.reference import brute_force_face_min
from plateaulab.sliding import BoundaryPiece


def square(z0, z1, lo=0.2, hi=0.8):
    """Planar square over [lo, hi]^2 rising linearly in y from z0 to z1."""
    a, b, c, d = [lo, lo, z0], [hi, lo, z0], [hi, hi, z1], [lo, hi, z1]
    return np.array([[a, b, c], [a, c, d]], dtype=float)


@pytest.fixture(scope="module")
def grid8():
    return CubicalGrid((0, 0, 0), (8, 8, 8), 3)


def test_incidence(grid8):
    g = grid8
    for f in range(0, g.n_faces, 37):
        for c in g.face_cubes(f):
            assert f in g.cube_faces(c)
        for e in g.face_edges(f):
            assert f in g.edge_faces(e)
    c = g.cube_id(3, 4, 5)
    assert g.cube_index(c) == (3, 4, 5)
    assert len(set(g.cube_faces(c))) == 6
    interior_face = g.face_id(2, 3, 3, 3)
    assert len(g.face_cubes(interior_face)) == 2
    assert len(g.face_cubes(g.face_id(2, 3, 3, 0))) == 1
    assert g.side == 0.125


def test_empty_gamma_region():
    g = CubicalGrid((0, 0, 0), (4, 4, 4), 2)
    r = mark_safe_region(g, [], 0.1)
    assert r.V == frozenset(range(64))
    assert r.V_inner == frozenset(g.cube_id(i, j, k) for i in (1, 2) for j in (1, 2) for k in (1, 2))


def test_margin_larger_than_box():
    g = CubicalGrid((0, 0, 0), (4, 4, 4), 2)
    circle = BoundaryPiece.circle((0.5, 0.5, 0.5), (0, 0, 1), 0.3)
    r = mark_safe_region(g, [circle], 5.0)
    assert not r.V and not r.V_inner


def test_circle_margin_against_sampled_distances():
    g = CubicalGrid((0, 0, 0), (16, 16, 16), 4)
    circle = BoundaryPiece.circle((0.5, 0.5, 0.5), (0, 1, 1), 0.3)
    margin = 4 * g.side
    r = mark_safe_region(g, [circle], margin)
    u = np.linspace(0, 1, 5)
    offs = np.array([[a, b, c] for a in u for b in u for c in u]) * g.side
    half_diag = 0.5 * math.sqrt(3) * g.side
    for c in range(g.n_cubes):
        lo, _ = g.cube_bounds(c)
        P = lo + offs
        d = np.linalg.norm(P - circle.closest_point(P), axis=1).min()
        if c in r.V:
            assert d >= margin - 1e-12
        elif d >= margin + 2 * half_diag:
            pytest.fail(f"cube {c} far from the circle was excluded")


def test_aligned_square_is_fixed(grid8):
    sq = square(0.5, 0.5, 0.25, 0.75)
    res = ff_project(InputSet(sq), grid8, SafeRegion.everything(grid8))
    assert len(res.faces.faces) == 16
    assert all(grid8.face_index(f)[0] == 2 and grid8.face_index(f)[3] == 4 for f in res.faces.faces)
    assert res.faces.area == pytest.approx(0.25)


@pytest.fixture(scope="module")
def tilted(grid8):
    inp = InputSet(square(0.56, 0.608, 0.2, 0.8))
    return inp, ff_project(inp, grid8, SafeRegion.everything(grid8))


def test_tilted_square_projection(grid8, tilted):
    inp, res = tilted
    assert res.faces.area <= 1.25 * inp.area
    assert res.max_locality_error < 1e-9
    for f in res.faces.faces:
        center = grid8.face_corners(f).mean(axis=0)
        # distance from the face center to the input plane patch, in cells
        y = np.clip(center[1], 0.2, 0.8)
        x = np.clip(center[0], 0.2, 0.8)
        z = 0.56 + 0.048 * (y - 0.2) / 0.6
        assert np.linalg.norm(center - [x, y, z]) <= grid8.side + 1e-12


def test_replay_is_bit_exact(grid8, tilted):
    inp, res = tilted
    again = ff_project(inp, grid8, SafeRegion.everything(grid8), replay=res.log)
    assert again.faces == res.faces
    assert again.to_json() == res.to_json()
    threaded = ff_project(inp, grid8, SafeRegion.everything(grid8), threads=4)
    assert threaded.to_json() == res.to_json()


def test_hair_leaves_no_faces(grid8):
    sq = square(0.5, 0.5, 0.25, 0.75)
    hair = np.array([[[0.4, 0.4, 0.5], [0.43, 0.41, 0.95]]])
    res = ff_project(InputSet(sq, hair), grid8, SafeRegion.everything(grid8))
    assert len(res.faces.faces) == 16
    hair_only = ff_project(InputSet(np.zeros((0, 3, 3)), hair), grid8, SafeRegion.everything(grid8))
    assert hair_only.faces.faces == ()


def test_outside_region_is_untouched(grid8):
    sq = square(0.5, 0.5, 0.25, 0.75)
    region = SafeRegion(grid8, frozenset(), frozenset())
    res = ff_project(InputSet(sq), grid8, region)
    assert res.faces.faces == () and len(res.outside) > 0


def test_faceset_measure_and_export_counts():
    g = CubicalGrid((0, 0, 0), (4, 4, 4), 2)
    fs = FaceSet(g, tuple(g.face_id(2, i, j, 2) for i in range(4) for j in range(4)))
    assert hausdorff_of_faceset(fs) == pytest.approx(1.0)
    assert hausdorff_of_faceset(FaceSet(g, ())) == 0
    V, T = fs.mesh()
    assert len(T) == 32 and len(V) == 25
    assert FaceSet.from_json(fs.to_json()) == fs
    with pytest.raises(GridError):
        FaceSet(g, (g.n_faces,))


def bump_faces():
    g = CubicalGrid((0, 0, 0), (8, 8, 5), 2)
    faces = {g.face_id(2, i, j, 2) for i in range(8) for j in range(8)}
    faces ^= set(g.cube_faces(g.cube_id(3, 3, 2)))
    return g, faces


def test_bump_is_removed():
    g, faces = bump_faces()
    region = mark_safe_region(g, [], 0.0)
    fs = FaceSet(g, tuple(faces))
    out, cert = discrete_minimize(fs, region)
    assert cert.certified
    assert len(fs.faces) - len(out.faces) == 4
    assert fs.area - out.area == pytest.approx(4 * 4.0 ** -2)
    assert replay_moves(fs, cert.moves) == out


def test_flat_sheet_is_unchanged():
    g = CubicalGrid((0, 0, 0), (6, 6, 6), 2)
    sheet = FaceSet(g, tuple(g.face_id(2, i, j, 3) for i in range(6) for j in range(6)))
    out, cert = discrete_minimize(sheet, mark_safe_region(g, [], 0.0))
    assert out == sheet and cert.certified and cert.moves == []


def _oracle_args(g, fs, region):
    faces = [(a, (i, j, k)) for a, i, j, k in map(g.face_index, fs.faces)]
    return faces, g.shape, [g.cube_index(c) for c in region.V_inner]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2 ** 31), st.sampled_from(["inner", "anywhere"]))
def test_minimize_matches_brute_force_on_4_cubed(seed, pool):
    g = CubicalGrid((0, 0, 0), (4, 4, 4), 2)
    region = mark_safe_region(g, [], 0.0)
    rng = np.random.default_rng(seed)
    if pool == "inner":
        cand = sorted({f for c in region.V_inner for f in g.cube_faces(c)})
    else:
        cand = list(range(g.n_faces))
    fs = FaceSet(g, tuple(rng.choice(cand, size=min(20, len(cand)), replace=False).tolist()))
    out, cert = discrete_minimize(fs, region)
    assert cert.certified
    assert len(out.faces) <= len(fs.faces)
    assert len(out.faces) == brute_force_face_min(*_oracle_args(g, fs, region))
    assert replay_moves(fs, cert.moves) == out


def test_each_collapse_removes_one_face():
    g, faces = bump_faces()
    region = mark_safe_region(g, [], 0.0)
    fs = FaceSet(g, tuple(sorted(faces))[:40])
    out, cert = discrete_minimize(fs, region)
    state = set(fs.faces)
    for kind, ident in cert.moves:
        before = len(state)
        state = set(replay_moves(FaceSet(g, tuple(state)), [(kind, ident)]).faces)
        if kind == "collapse":
            assert len(state) == before - 1
        else:
            assert len(state) < before


def test_empty_inner_region_is_an_error():
    g = CubicalGrid((0, 0, 0), (2, 2, 2), 1)
    with pytest.raises(GridError):
        discrete_minimize(FaceSet(g, (0,)), mark_safe_region(g, [], 0.0))
