"""Greedy ball-cover upper estimates of d-dimensional Hausdorff measure of sample sets."""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

LABEL = "greedy upper bound"


class MeasureError(ValueError):
    pass


def normalizing_constant(d: int) -> float:
    """omega_d / 2^d, so that d-dimensional measure agrees with Lebesgue measure on R^d."""
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) / 2 ** d


@dataclass
class CoverEstimate:
    d: int
    delta: float
    centers: np.ndarray          # (k, dim)
    diameters: np.ndarray        # (k,)
    value: float

    @property
    def n_balls(self) -> int:
        return len(self.diameters)

    def to_json(self) -> dict:
        return {"d": self.d, "delta": self.delta, "value": self.value, "label": LABEL,
                "n_balls": self.n_balls, "max_diameter": float(self.diameters.max(initial=0.0))}


def hausdorff_upper(points, d: int, delta: float) -> CoverEstimate:
    """Cover the samples greedily by balls of diameter <= delta.

    Each step takes the sample-centred ball of radius delta/2 holding the most
    uncovered samples (lowest index on ties), then shrinks it about the same
    center to the farthest sample it newly covers.
    """
    if not delta > 0:
        raise MeasureError("delta must be positive")
    if d < 0:
        raise MeasureError("dimension must be nonnegative")
    P = np.asarray(points, dtype=float)
    if P.size == 0:
        return CoverEstimate(d, float(delta), np.zeros((0, 3)), np.zeros(0), 0.0)
    P = P.reshape(len(P), -1)
    n = len(P)
    r = 0.5 * delta
    tree = cKDTree(P)
    nbrs = [np.asarray(x, dtype=np.int64) for x in tree.query_ball_point(P, r)]
    uncovered = np.ones(n, dtype=bool)
    heap = [(-len(x), i) for i, x in enumerate(nbrs)]
    heapq.heapify(heap)
    centers, diams = [], []
    remaining = n
    while remaining:
        negc, i = heapq.heappop(heap)
        idx = nbrs[i]
        new = idx[uncovered[idx]]
        if len(new) != -negc:
            # counts only decrease, so stale entries are upper bounds
            if len(new):
                heapq.heappush(heap, (-len(new), i))
            continue
        rad = float(np.max(np.linalg.norm(P[new] - P[i], axis=1)))
        uncovered[new] = False
        remaining -= len(new)
        centers.append(P[i])
        diams.append(min(2.0 * rad, delta))
    diams = np.array(diams)
    value = normalizing_constant(d) * float(np.sum(diams ** d))
    return CoverEstimate(d, float(delta), np.array(centers), diams, value)


def audit_cover(points, est: CoverEstimate, tol: float = 1e-12) -> bool:
    """Every sample lies in some ball and no diameter exceeds delta."""
    P = np.asarray(points, dtype=float)
    if P.size == 0:
        return True
    P = P.reshape(len(P), -1)
    if np.any(est.diameters > est.delta + tol):
        return False
    tree = cKDTree(est.centers)
    # any ball containing p lies within delta/2 of it
    for p, near in zip(P, tree.query_ball_point(P, 0.5 * est.delta + tol)):
        near = np.asarray(near, dtype=np.int64)
        if not np.any(np.linalg.norm(est.centers[near] - p, axis=1)
                      <= 0.5 * est.diameters[near] + tol):
            return False
    return True


# -- samplers ----------------------------------------------------------------------

def sample_segment(n: int, rng: np.random.Generator, a=(0.0, 0.0, 0.0), b=(1.0, 0.0, 0.0)
                   ) -> np.ndarray:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return a + rng.random(n)[:, None] * (b - a)


def sample_square(n: int, rng: np.random.Generator, side: float = 1.0) -> np.ndarray:
    uv = rng.random((n, 2)) * side
    return np.column_stack([uv, np.zeros(n)])


def sample_triangles(V, T, n: int, rng: np.random.Generator) -> np.ndarray:
    """n points uniform with respect to area on a triangle mesh."""
    V = np.asarray(V, dtype=float)
    T = np.asarray(T, dtype=np.int64)
    a, b, c = V[T[:, 0]], V[T[:, 1]], V[T[:, 2]]
    w = 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)
    if not w.sum() > 0:
        raise MeasureError("mesh has zero area")
    pick = rng.choice(len(T), size=n, p=w / w.sum())
    u, v = rng.random(n), rng.random(n)
    flip = u + v > 1
    u[flip], v[flip] = 1 - u[flip], 1 - v[flip]
    return a[pick] + u[:, None] * (b[pick] - a[pick]) + v[:, None] * (c[pick] - a[pick])


def sample_faceset(faces, n: int, rng: np.random.Generator) -> np.ndarray:
    V, T = faces.mesh()
    if len(T) == 0:
        return np.zeros((0, 3))
    return sample_triangles(V, T, n, rng)


def hausdorff_of_faceset(faces) -> float:
    """Exact 2-dimensional measure of a union of whole grid faces."""
    return len(faces.faces) * faces.grid.side ** 2
