import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_chain, random_complex, seeds
from plateaulab.builders import cylinder_scene, two_circle_scene, two_disk_scene
from plateaulab.complex_core import Chain, ChainError, SimplicialComplex, boundary
from plateaulab.homology import AdmissibilityProblem, reifenberg_admissible, solve_boundary

# six-vertex real projective plane: H1 = Z/2
RP2 = [(0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 5, 1),
       (1, 2, 4), (2, 3, 5), (3, 4, 1), (4, 5, 2), (5, 1, 3)]


@pytest.fixture(scope="module")
def cylinder():
    return cylinder_scene(n=24)


def test_cylinder_sheet_bounds_difference(cylinder):
    g1, g2 = cylinder.loops["gamma1"], cylinder.loops["gamma2"]
    sigma = solve_boundary(g1 - g2, cylinder.complex)
    assert sigma is not None and boundary(sigma) == g1 - g2
    assert sigma == cylinder.sheets["H"]


def test_cylinder_orientations_do_not_fit_over_integers(cylinder):
    g1, g2 = cylinder.loops["gamma1"], cylinder.loops["gamma2"]
    assert solve_boundary(g1 + g2, cylinder.complex) is None


def test_cylinder_sum_bounds_mod_two(cylinder):
    g1, g2 = cylinder.loops["gamma1"], cylinder.loops["gamma2"]
    sigma = solve_boundary(g1 + g2, cylinder.complex, ring=2)
    assert sigma is not None and sigma.modulus == 2
    assert boundary(sigma) == (g1 + g2).reduce(2)


def test_two_disks_bound_sum():
    cs = two_disk_scene(n=24)
    g1, g2 = cs.loops["gamma1"], cs.loops["gamma2"]
    sigma = solve_boundary(g1 + g2, cs.complex)
    assert sigma is not None and boundary(sigma) == g1 + g2


def test_non_cycle_target_is_rejected(cylinder):
    cx = cylinder.complex
    with pytest.raises(ChainError, match="cycle"):
        solve_boundary(Chain(cx, 1, {0: 1}), cx)


def test_projective_plane_torsion():
    rng = np.random.default_rng(0)
    cx = SimplicialComplex.from_simplices(rng.normal(size=(6, 3)), RP2)
    z = Chain.from_oriented(cx, [(0, 1), (1, 3), (3, 0)])
    assert solve_boundary(z) is None
    assert solve_boundary(z * 2) is not None
    assert solve_boundary(z, ring=2) is None
    assert solve_boundary(z, ring=3) is not None


def test_admissibility_two_circle_scene():
    cs = two_circle_scene(n=12)
    gens = {"g1": cs.loops["gamma1"], "g2": cs.loops["gamma2"]}
    gamma = set(cs.loops["gamma1"].coeffs) | set(cs.loops["gamma2"].coeffs)
    H = cs.sheet_cells("H")
    res = reifenberg_admissible(AdmissibilityProblem(cs.complex, gamma, gens, cells=H))
    assert not res.admissible and res.failed == ["g1", "g2"]
    # the catenoid kills gamma1 - gamma2 but not the circles one at a time
    res = reifenberg_admissible(AdmissibilityProblem(
        cs.complex, gamma, {"diff": gens["g1"] - gens["g2"]}, cells=H))
    assert res.admissible
    Y = cs.sheet_cells("D", "H1", "H2")
    res = reifenberg_admissible(AdmissibilityProblem(cs.complex, gamma, gens, cells=Y))
    assert res.admissible
    for name, w in res.witnesses.items():
        assert boundary(w) == gens[name]
        assert set(w.coeffs) <= set(Y)


def test_generator_must_lie_on_gamma(cylinder):
    g1 = cylinder.loops["gamma1"]
    with pytest.raises(ChainError):
        AdmissibilityProblem(cylinder.complex, frozenset(), {"g": g1})


@settings(max_examples=60, deadline=None)
@given(seeds, st.sampled_from([0, 2, 3, 7]))
def test_boundaries_are_always_solvable(seed, ring):
    rng = random.Random(seed)
    cx = random_complex(rng, n_vertices=8, n_tets=2, n_tris=8)
    sigma = random_chain(rng, cx, 2, modulus=ring)
    target = boundary(sigma)
    found = solve_boundary(target, cx, ring)
    assert found is not None
    assert boundary(found) == target


def _brute_force_feasible(cx, target, ring):
    """Enumerate every coefficient vector in a box large enough for these small complexes."""
    n = cx.n_cells(2)
    B = cx.boundary_matrix(2).astype(np.int64)
    t = np.array(target.to_vector(), dtype=np.int64)
    bound = int(np.abs(t).max(initial=0)) + 2
    vals = np.arange(-bound, bound + 1) if ring == 0 else np.arange(ring)
    X = np.array(np.meshgrid(*[vals] * n, indexing="ij")).reshape(n, -1)
    R = B @ X - t[:, None]
    if ring:
        R %= ring
    return bool(np.any(np.all(R == 0, axis=0)))


@settings(max_examples=25, deadline=None)
@given(seeds, st.sampled_from([0, 2, 3]))
def test_infeasibility_agrees_with_enumeration(seed, ring):
    rng = random.Random(seed)
    cx = random_complex(rng, n_vertices=6, n_tets=0, n_tris=4)
    if cx.n_cells(2) > 5:
        return
    # random cycle: boundary of a random 2-chain plus a random 1-cycle from the cycle space
    z = boundary(random_chain(rng, cx, 2, modulus=ring))
    extra = Chain.zero(cx, 1, ring)
    for s in itertools.combinations(range(len(cx.vertices)), 3):
        e = [tuple(sorted(p)) for p in itertools.combinations(s, 2)]
        if all(cx.has_cell(1, x) for x in e) and not cx.has_cell(2, s):
            extra = Chain.from_oriented(cx, [(s[0], s[1]), (s[1], s[2]), (s[2], s[0])],
                                        modulus=ring)
            break
    target = z + extra * rng.randint(0, 2)
    if ring:
        target = target.reduce(ring)
    found = solve_boundary(target, cx, ring)
    assert (found is not None) == _brute_force_feasible(cx, target, ring)
