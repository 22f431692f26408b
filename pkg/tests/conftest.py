import json
import random
from pathlib import Path

import numpy as np
import pytest
from hypothesis import strategies as st

from plateaulab.complex_core import Chain, SimplicialComplex

FIXTURES = Path(__file__).parent / "fixtures"
SCENES = Path(__file__).parent.parent / "scenes"


@pytest.fixture(scope="session")
def oracle_values():
    return json.loads((FIXTURES / "oracle_values.json").read_text())


def random_complex(rng: random.Random, n_vertices: int = 7, n_tets: int = 3, n_tris: int = 5):
    """Closure of random tetrahedra and triangles on points in general position."""
    pts = np.array([[rng.uniform(-1, 1) for _ in range(3)] for _ in range(n_vertices)])
    simplices = [tuple(rng.sample(range(n_vertices), 4)) for _ in range(n_tets)]
    simplices += [tuple(rng.sample(range(n_vertices), 3)) for _ in range(n_tris)]
    return SimplicialComplex.from_simplices(pts, simplices)


def random_chain(rng: random.Random, cx: SimplicialComplex, dim: int, modulus: int = 0,
                 span: int = 3) -> Chain:
    n = cx.n_cells(dim)
    coeffs = {rng.randrange(n): rng.randint(-span, span) for _ in range(rng.randint(0, n))}
    return Chain(cx, dim, coeffs, modulus)


seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split()[1])):
        terminalreporter.write_line(line)
