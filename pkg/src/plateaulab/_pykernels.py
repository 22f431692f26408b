"""Pure numpy versions of the hot loops; same signatures as the compiled module."""

from __future__ import annotations

import numpy as np


def tri_area_grad(V: np.ndarray, T: np.ndarray, want_grad: bool = True):
    """Per-triangle areas and the gradient of their sum w.r.t. vertex positions."""
    V = np.ascontiguousarray(V, dtype=np.float64)
    T = np.ascontiguousarray(T, dtype=np.int64)
    a, b, c = V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]
    n = np.cross(b - a, c - a)
    nn = np.linalg.norm(n, axis=1)
    areas = 0.5 * nn
    if not want_grad:
        return areas, None
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(nn[:, None] > 0, n / nn[:, None], 0.0)
    # d|n|/da = u x (c - b) etc., halved for the area
    ga = 0.5 * np.cross(u, c - b)
    gb = 0.5 * np.cross(u, a - c)
    gc = 0.5 * np.cross(u, b - a)
    grad = np.zeros_like(V)
    # triangle order is fixed, so the accumulation order is too
    np.add.at(grad, T[:, 0], ga)
    np.add.at(grad, T[:, 1], gb)
    np.add.at(grad, T[:, 2], gc)
    return areas, grad


def douglas_pairs(G: np.ndarray, kvec: np.ndarray):
    """sum_{i != j} k[(i-j) mod N] |g_i - g_j|^2 and its gradient w.r.t. g.

    ``kvec`` is the circulant kernel row with kvec[0] ignored; it must be
    symmetric (k[m] == k[N - m]) for the gradient to hold.
    """
    G = np.ascontiguousarray(G, dtype=np.float64)
    if G.ndim != 2 or G.shape[1] != 3 or len(kvec) != G.shape[0]:
        raise ValueError("douglas_pairs needs G of shape (N, 3) and kvec of length N")
    N = G.shape[0]
    idx = (np.arange(N)[:, None] - np.arange(N)[None, :]) % N
    K = kvec[idx]
    np.fill_diagonal(K, 0.0)
    sq = np.sum(G * G, axis=1)
    D2 = sq[:, None] + sq[None, :] - 2.0 * G @ G.T
    energy = float(np.sum(K * D2))
    rowsum = K.sum(axis=1)
    grad = 4.0 * (rowsum[:, None] * G - K @ G)
    return energy, grad
