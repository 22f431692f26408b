import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from plateaulab import _pykernels, kernels

try:
    from plateaulab import _ckernels
except ImportError:
    _ckernels = None

needs_c = pytest.mark.skipif(_ckernels is None, reason="compiled kernels not built")


def _mesh(seed, nv=30, nt=50):
    rng = np.random.default_rng(seed)
    V = rng.normal(size=(nv, 3))
    T = np.array([rng.choice(nv, 3, replace=False) for _ in range(nt)], dtype=np.int64)
    return V, T


@needs_c
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31))
def test_area_kernels_agree(seed):
    V, T = _mesh(seed)
    a_py, g_py = _pykernels.tri_area_grad(V, T)
    a_c, g_c = _ckernels.tri_area_grad(V, T)
    np.testing.assert_allclose(a_c, a_py, rtol=1e-12, atol=1e-14)
    np.testing.assert_allclose(g_c, g_py, rtol=1e-10, atol=1e-12)


@needs_c
def test_area_kernels_degenerate_triangle():
    V = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0]], dtype=float)
    T = np.array([[0, 1, 2]])
    for mod in (_pykernels, _ckernels):
        a, g = mod.tri_area_grad(V, T)
        assert a[0] == 0.0 and np.all(np.isfinite(g))


@needs_c
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.integers(3, 40))
def test_douglas_kernels_agree(seed, n):
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(n, 3))
    k = rng.uniform(0.1, 2.0, size=n)
    k = 0.5 * (k + np.roll(k[::-1], 1))
    e_py, g_py = _pykernels.douglas_pairs(G, k)
    e_c, g_c = _ckernels.douglas_pairs(G, k)
    assert e_c == pytest.approx(e_py, rel=1e-11)
    np.testing.assert_allclose(g_c, g_py, rtol=1e-9, atol=1e-10)


@pytest.mark.parametrize("mod", [_pykernels] + ([_ckernels] if _ckernels else []))
def test_douglas_kernel_rejects_planar_points(mod):
    with pytest.raises(ValueError):
        mod.douglas_pairs(np.zeros((4, 2)), np.ones(4))


def test_area_gradient_matches_finite_differences():
    V, T = _mesh(3, 10, 12)
    _, g = kernels.tri_area_grad(V, T)
    h = 1e-6
    fd = np.zeros_like(V)
    for i in range(V.shape[0]):
        for d in range(3):
            Vp, Vm = V.copy(), V.copy()
            Vp[i, d] += h
            Vm[i, d] -= h
            fd[i, d] = (kernels.tri_area_grad(Vp, T, False)[0].sum()
                        - kernels.tri_area_grad(Vm, T, False)[0].sum()) / (2 * h)
    np.testing.assert_allclose(g, fd, atol=1e-6)


def test_pure_env_selects_python_backend():
    code = "import plateaulab.kernels as k; print(k.BACKEND)"
    env = dict(os.environ, PLATEAULAB_PURE="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "python"
    env.pop("PLATEAULAB_PURE")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == ("cython" if _ckernels is not None else "python")
