import random
import time

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_complex, seeds
from plateaulab.builders import (cylinder_scene, t_cone_scene, two_circle_scene, two_disk_scene,
                                 y_cone_scene)
from plateaulab.chain_solver import PlateauChainProblem, solve, verify_chain
from plateaulab.complex_core import CellMeasures, Chain, SimplicialComplex, boundary
from plateaulab.reference import brute_force_chain_min


def brute_force(problem: PlateauChainProblem):
    """Enumerate the problem's integer program; returns the optimal value or None."""
    cx = problem.complex
    B = cx.boundary_matrix(2)
    area = CellMeasures.of(cx).area
    tcols = problem.support_cells
    vcols = problem.v_cells
    cols = [("T", c) for c in tcols] + [("V", c) for c in vcols]
    free_edges = set(problem.free_edges)
    rhs_full = problem.boundary.to_vector()
    rows, rhs = [], []
    for e in range(cx.n_cells(1)):
        if e in free_edges:
            continue
        rows.append({j: int(B[e, c]) for j, (_, c) in enumerate(cols) if B[e, c]})
        rhs.append(rhs_full[e])
    weights = [float(area[c]) for _, c in cols]
    free_cols = range(len(tcols), len(cols))
    req = [tcols.index(c) for c in problem.required]
    out = brute_force_chain_min(rows, rhs, weights, problem.objective, problem.M, free_cols, req)
    return None if out is None else out[0]


def fixtures():
    """Small complexes (at most 20 two-cells) with boundary data."""
    out = []
    for n_arc in (2, 3, 4, 6):
        cs = y_cone_scene(n_arc=n_arc)
        S = cs.loops["S1"] + cs.loops["S2"] - cs.loops["S3"] * 2
        out.append((f"y_cone_{n_arc}", cs.complex, S, {}))
        out.append((f"y_cone_{n_arc}_single", cs.complex, cs.loops["S1"] - cs.loops["S2"], {}))
    cs = t_cone_scene()
    out.append(("t_cone_rim_free", cs.complex, Chain.zero(cs.complex, 1),
                {"free_edges": cs.edge_groups["rim"], "required": cs.sheet_cells(*cs.sheets)}))
    for n in (4, 5):
        cyl = cylinder_scene(n=n, rings=1)
        out.append((f"cylinder_{n}", cyl.complex, cyl.loops["gamma1"] - cyl.loops["gamma2"], {}))
        out.append((f"cylinder_{n}_sum", cyl.complex, cyl.loops["gamma1"] + cyl.loops["gamma2"], {}))
        dd = two_disk_scene(n=n, rings=1)
        out.append((f"two_disk_{n}", dd.complex, dd.loops["gamma1"] + dd.loops["gamma2"], {}))
    oct_v = np.array([[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], float)
    oct_t = [(a, b, c) for a in (0, 1) for b in (2, 3) for c in (4, 5)]
    octa = SimplicialComplex.from_simplices(oct_v, oct_t)
    out.append(("octahedron_zero", octa, Chain.zero(octa, 1), {"required": [0]}))
    eq = Chain.from_oriented(octa, [(0, 2), (2, 1), (1, 3), (3, 0)])
    out.append(("octahedron_equator", octa, eq, {}))
    return out


FIXTURES = fixtures()


@pytest.mark.parametrize("name,cx,S,extra", FIXTURES, ids=[f[0] for f in FIXTURES])
@pytest.mark.parametrize("objective", ["mass", "size"])
@pytest.mark.parametrize("M", [1, 2])
def test_solver_matches_enumeration(name, cx, S, extra, objective, M):
    assert cx.n_cells(2) <= 20
    if S.coeffs and max(abs(v) for v in S.coeffs.values()) > M:
        pytest.skip("boundary multiplicity exceeds the bound")
    p = PlateauChainProblem(cx, S, objective=objective, M=M, **extra)
    sol = solve(p)
    expect = brute_force(p)
    if expect is None:
        assert sol.status == "infeasible"
    else:
        assert sol.status == "optimal"
        assert sol.value == pytest.approx(expect, abs=1e-9)
        assert verify_chain(p, sol.chain, sol.v_chain).ok


def test_homologous_mode_matches_enumeration():
    cs = two_circle_scene(n=4, sheets=("D1", "D2", "H"), disk_rings=1, tube_rings=1)
    S = cs.loops["gamma1"] + cs.loops["gamma2"]
    gamma = cs.sheet_cells("D2")
    for objective in ("mass", "size"):
        p = PlateauChainProblem(cs.complex, S, objective=objective, mode="homologous", M=2,
                                gamma_cells=gamma, cells=cs.sheet_cells("D1", "H"))
        sol = solve(p)
        assert sol.status == "optimal"
        assert sol.value == pytest.approx(brute_force(p), abs=1e-9)


def test_t_cone_carries_a_cycle_with_all_six_faces():
    cs = t_cone_scene()
    p = PlateauChainProblem(cs.complex, Chain.zero(cs.complex, 1), objective="size", M=3,
                            free_edges=cs.edge_groups["rim"],
                            required=cs.sheet_cells(*cs.sheets))
    sol = solve(p)
    assert sol.status == "optimal"
    W = sol.chain
    assert len(W.coeffs) == 6
    off_rim = {e: c for e, c in boundary(W).coeffs.items() if e not in set(cs.edge_groups["rim"])}
    assert off_rim == {}


def test_infeasible_and_budget_statuses():
    cyl = cylinder_scene(n=6, rings=2)
    S = cyl.loops["gamma1"] + cyl.loops["gamma2"]
    assert solve(PlateauChainProblem(cyl.complex, S, M=2)).status == "infeasible"
    cs = y_cone_scene(n_arc=6)
    S = cs.loops["S1"] - cs.loops["S2"]
    sol = solve(PlateauChainProblem(cs.complex, S, M=3, node_budget=1))
    assert sol.status in ("optimal", "budget_exhausted")


def test_problem_validation():
    cyl = cylinder_scene(n=6, rings=1)
    with pytest.raises(ValueError):
        PlateauChainProblem(cyl.complex, cyl.loops["gamma1"], objective="volume")
    with pytest.raises(ValueError):
        PlateauChainProblem(cyl.complex, cyl.loops["gamma1"] * 3, M=2)
    with pytest.raises(Exception):
        PlateauChainProblem(cyl.complex, Chain(cyl.complex, 1, {0: 1}))


@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from(["mass", "size"]), st.integers(1, 2))
def test_random_complexes_match_enumeration(seed, objective, M):
    rng = random.Random(seed)
    cx = random_complex(rng, n_vertices=7, n_tets=1, n_tris=6)
    if cx.n_cells(2) > 12:
        return
    sigma = Chain(cx, 2, {rng.randrange(cx.n_cells(2)): rng.choice([-1, 1]) for _ in range(3)})
    S = boundary(sigma)
    if S.coeffs and max(abs(v) for v in S.coeffs.values()) > M:
        return
    p = PlateauChainProblem(cx, S, objective=objective, M=M)
    sol = solve(p)
    expect = brute_force(p)
    assert sol.status == "optimal" and expect is not None
    assert sol.value == pytest.approx(expect, abs=1e-9)
