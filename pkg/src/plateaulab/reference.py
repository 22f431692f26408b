"""Analytic and numeric reference values for the two-circle and cone examples.

Nothing in here is imported by the solvers; it exists to anchor tests.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import integrate, optimize

# root of t*tanh(t) = 1: where c*cosh(h/c) is minimal in c
_T_STAR = optimize.brentq(lambda t: t * math.tanh(t) - 1.0, 0.5, 2.0, xtol=1e-15)
# slope parameter of a band leaving the central disk at 120 degrees: sinh(a) = tan(30 deg)
_Y_SLOPE = math.asinh(1.0 / math.sqrt(3.0))


@dataclass(frozen=True)
class TwoCircleConfig:
    """Two coaxial circles of radius R in the planes z = +h and z = -h."""

    R: float = 1.0
    h: float = 0.1

    def __post_init__(self):
        if not (self.R > 0 and self.h > 0):
            raise ValueError("TwoCircleConfig needs R > 0 and h > 0")


def catenoid_max_h(R: float = 1.0) -> float:
    """Largest half-separation at which a catenoid spans the two circles."""
    return R * _T_STAR / math.cosh(_T_STAR)


def catenoid_parameter(cfg: TwoCircleConfig) -> float | None:
    """Neck radius c of the stable catenoid r = c cosh(z/c), or None if none exists."""
    R, h = cfg.R, cfg.h
    c_lo = h / _T_STAR
    if c_lo * math.cosh(h / c_lo) > R:
        return None
    f = lambda c: c * math.cosh(h / c) - R
    # f(c_lo) <= 0 < f(R); the larger root is the smaller-area branch
    return optimize.bisect(f, c_lo, R, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400)


def catenoid_area(cfg: TwoCircleConfig) -> float | None:
    c = catenoid_parameter(cfg)
    if c is None:
        return None
    # r sqrt(1 + r'^2) = c cosh^2(z/c)
    val, _ = integrate.quad(lambda z: c * math.cosh(z / c) ** 2, -cfg.h, cfg.h,
                            epsabs=1e-13, epsrel=1e-13)
    return 2.0 * math.pi * val


def two_disk_area(cfg: TwoCircleConfig) -> float:
    return 2.0 * math.pi * cfg.R ** 2


@dataclass(frozen=True)
class YFilm:
    """Central disk of radius rho plus two catenoid bands r = c cosh((|z| - z0)/c)."""

    rho: float
    c: float
    z0: float
    area: float
    disk_area: float
    band_area: float
    junction_angle_deg: float

    def profile(self, z):
        """Band radius as a function of |z| in [0, h]."""
        return self.c * np.cosh((np.abs(z) - self.z0) / self.c)


def _band_area(c: float, u0: float, u1: float) -> float:
    # 2 pi c^2 * integral of cosh^2 u du
    F = lambda u: u / 2.0 + math.sinh(2.0 * u) / 4.0
    return 2.0 * math.pi * c * c * (F(u1) - F(u0))


def y_film(cfg: TwoCircleConfig) -> YFilm:
    """Stationary Y-configuration: the bands meet the disk along its rim at 120 degrees."""
    R, h, a = cfg.R, cfg.h, _Y_SLOPE
    g = lambda c: c * math.cosh(h / c + a) - R
    c_max = R / math.cosh(a)          # rho = R: the disk reaches the circles
    # g'(c) = cosh(u) - (h/c) sinh(u); minimum where (h/c) tanh(h/c + a) = 1
    s = optimize.brentq(lambda s: s * math.tanh(s + a) - 1.0, 1e-12, 10.0, xtol=1e-15)
    c_min = h / s
    if c_min >= c_max or g(c_min) > 0.0:
        raise ValueError("Y-film does not exist at this separation")
    c = optimize.bisect(g, c_min, c_max, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400)
    rho = c * math.cosh(a)
    band = _band_area(c, a, a + h / c)
    disk = math.pi * rho * rho
    slope = math.sinh(a)              # dr/dz at the rim
    # angle between the disk (pointing inward) and the band tangent (dr, dz) = (slope, 1)
    t = np.array([slope, 1.0]) / math.hypot(slope, 1.0)
    angle = math.degrees(math.acos(float(np.dot(t, [-1.0, 0.0]))))
    return YFilm(rho=rho, c=c, z0=-a * c, area=disk + 2.0 * band, disk_area=disk,
                 band_area=band, junction_angle_deg=angle)


def y_film_area(cfg: TwoCircleConfig) -> float:
    return y_film(cfg).area


def y_film_max_h(R: float = 1.0) -> float:
    """Largest half-separation at which the stationary Y-film exists."""
    def exists(h):
        try:
            y_film(TwoCircleConfig(R, h))
            return True
        except ValueError:
            return False
    lo, hi = 1e-6, R
    while not exists(lo):
        lo /= 2
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        lo, hi = (mid, hi) if exists(mid) else (lo, mid)
    return lo


def catenoid_disk_crossover(R: float = 1.0) -> float:
    """Half-separation where the catenoid and the two disks have equal area."""
    f = lambda h: catenoid_area(TwoCircleConfig(R, h)) - two_disk_area(TwoCircleConfig(R, h))
    return optimize.brentq(f, 0.05 * R, catenoid_max_h(R) * (1 - 1e-9), xtol=1e-14)


def y_film_disk_crossover(R: float = 1.0) -> float | None:
    """Half-separation where the Y-film area reaches 2 pi R^2, if before it ceases to exist."""
    hmax = y_film_max_h(R)
    f = lambda h: y_film_area(TwoCircleConfig(R, h)) - two_disk_area(TwoCircleConfig(R, h))
    if f(hmax * (1 - 1e-9)) < 0:
        return None
    return optimize.brentq(f, 1e-4 * R, hmax * (1 - 1e-9), xtol=1e-14)


def thresholds(R: float = 1.0) -> dict:
    return {
        "catenoid_max_h": catenoid_max_h(R),
        "catenoid_vs_two_disks_h": catenoid_disk_crossover(R),
        "y_film_max_h": y_film_max_h(R),
        "y_film_vs_two_disks_h": y_film_disk_crossover(R),
    }


# -- cones -----------------------------------------------------------------

def tetrahedron_directions() -> np.ndarray:
    v = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _sector_area(u: np.ndarray, v: np.ndarray, n: int) -> float:
    """Area of the planar sector spanned by unit vectors u, v inside the unit ball.

    Polygonal fan with n slivers, extrapolated in n (error is O(n^-2)).
    """
    ang = math.atan2(np.linalg.norm(np.cross(u, v)), float(np.dot(u, v)))

    def fan(m):
        return 0.5 * m * math.sin(ang / m)

    a1, a2 = fan(n), fan(2 * n)
    return a2 + (a2 - a1) / 3.0


def cone_densities(n: int = 256) -> dict:
    """Areas inside the unit ball of the plane, Y and T cones; closed forms beside quadrature."""
    d = tetrahedron_directions()
    t_numeric = sum(_sector_area(d[i], d[j], n) for i in range(4) for j in range(i + 1, 4))
    e = np.array([1.0, 0.0, 0.0])
    y_numeric = 3 * sum(_sector_area(np.array(p), np.array(q), n) for p, q in
                        [((0, 0, 1), e), (e, (0, 0, -1))])
    return {
        "plane": {"exact": math.pi, "numeric": 4 * _sector_area(e, np.array([0.0, 1.0, 0.0]), n)},
        "Y": {"exact": 1.5 * math.pi, "numeric": y_numeric},
        "T": {"exact": 3.0 * math.acos(-1.0 / 3.0), "numeric": t_numeric},
    }


# -- exhaustive chain enumeration -------------------------------------------

def brute_force_chain_min(boundary_rows: Sequence[dict[int, int]], rhs: Sequence[int],
                          weights: Sequence[float], objective: str, M: int,
                          free_cols: Iterable[int] = (), required: Iterable[int] = (),
                          tol: float = 1e-9):
    """Exhaustive backtracking over all integer vectors x in [-M, M]^n with A x = rhs.

    ``boundary_rows`` are sparse rows of A.  Columns in ``free_cols`` carry zero
    cost; columns in ``required`` must be nonzero.  Returns (value, x) with the
    lexicographically smallest x among optimal ones, or None if infeasible.
    No linear algebra is used: each row is checked once all its columns are set.
    """
    rows = [dict(r) for r in boundary_rows if r]
    rhs_rows = [int(rhs[i]) for i, r in enumerate(boundary_rows) if r]
    zero_rows = [i for i, r in enumerate(boundary_rows) if not r and rhs[i] != 0]
    if zero_rows:
        return None
    n = len(weights)
    free = set(free_cols)
    req = set(required)
    cost = [0.0 if j in free else float(weights[j]) for j in range(n)]

    # column order: greedy, closing as many rows as early as possible
    col_rows: list[list[int]] = [[] for _ in range(n)]
    for i, r in enumerate(rows):
        for j in r:
            col_rows[j].append(i)
    order: list[int] = []
    remaining = {i: set(r) for i, r in enumerate(rows)}
    left = set(range(n))
    while left:
        j = min(left, key=lambda c: (min((len(remaining[i]) for i in col_rows[c]), default=99), c))
        order.append(j)
        left.discard(j)
        for i in col_rows[j]:
            remaining[i].discard(j)
    pos = {j: k for k, j in enumerate(order)}
    closes: list[list[int]] = [[] for _ in range(n)]
    for i, r in enumerate(rows):
        closes[max(pos[j] for j in r)].append(i)

    x = [0] * n
    best: list = [None, None]
    values = sorted(range(-M, M + 1), key=lambda v: (abs(v), v))

    def score(vec):
        if objective == "mass":
            return sum(abs(vec[j]) * cost[j] for j in range(n))
        return sum(cost[j] for j in range(n) if vec[j])

    def rec(k):
        if k == n:
            val = score(x)
            if (best[0] is None or val < best[0] - tol
                    or (abs(val - best[0]) <= tol and tuple(x) < tuple(best[1]))):
                best[0], best[1] = val, list(x)
            return
        j = order[k]
        for v in values:
            if v == 0 and j in req:
                continue
            x[j] = v
            if all(sum(c * x[jj] for jj, c in rows[i].items()) == rhs_rows[i] for i in closes[k]):
                rec(k + 1)
        x[j] = 0

    rec(0)
    if best[0] is None:
        return None
    return best[0], best[1]


# -- exhaustive face-set search ----------------------------------------------

def _face_corner_set(face) -> frozenset:
    a, p = face
    b, c = [x for x in range(3) if x != a]
    out = []
    for db in (0, 1):
        for dc in (0, 1):
            q = list(p)
            q[b] += db
            q[c] += dc
            out.append(tuple(q))
    return frozenset(out)


def _face_edge_set(face) -> list[frozenset]:
    corners = sorted(_face_corner_set(face))
    # two corners form an edge when they differ in exactly one coordinate
    return [frozenset((u, v)) for i, u in enumerate(corners) for v in corners[i + 1:]
            if sum(x != y for x, y in zip(u, v)) == 1]


def brute_force_face_min(faces: Iterable[tuple], shape: Sequence[int], inner: Iterable[tuple],
                         max_states: int = 2_000_000):
    """Breadth-first enumeration of every face set reachable by collapses and cube pushes.

    Faces are (axis, (i, j, k)) with integer lower corners; ``inner`` lists the
    cubes (i, j, k) where motion is allowed.  A face or edge may move only if
    every grid cube around it exists and is inner.  A collapse removes a face
    having such an edge that no other retained face contains.  A push replaces
    the retained faces of an inner cube by its other faces when at least four are
    retained and all six may move.  Returns the smallest face count reached, or
    None when the state budget is exhausted.
    """
    inner = {tuple(c) for c in inner}
    shape = tuple(shape)

    def cube_ok(c):
        return all(0 <= c[i] < shape[i] for i in range(3)) and c in inner

    def cubes_around_face(face):
        a, p = face
        lo = list(p)
        lo[a] -= 1
        return [tuple(p), tuple(lo)]

    def cubes_around_edge(edge):
        u, v = sorted(edge)
        a = next(i for i in range(3) if u[i] != v[i])
        out = []
        for db in (0, -1):
            for dc in (0, -1):
                b, c = [x for x in range(3) if x != a]
                q = list(u)
                q[b] += db
                q[c] += dc
                out.append(tuple(q))
        return out

    def faces_of_cube(c):
        out = []
        for a in range(3):
            for d in (0, 1):
                q = list(c)
                q[a] += d
                out.append((a, tuple(q)))
        return out

    def face_ok(face):
        return all(cube_ok(c) for c in cubes_around_face(face))

    def edge_ok(edge):
        return all(cube_ok(c) for c in cubes_around_edge(edge))

    start = frozenset((int(a), tuple(int(x) for x in p)) for a, p in faces)
    seen = {start}
    frontier = [start]
    best = len(start)
    while frontier:
        nxt = []
        for state in frontier:
            best = min(best, len(state))
            succ = []
            for f in state:
                if not face_ok(f):
                    continue
                for e in _face_edge_set(f):
                    if edge_ok(e) and not any(e in _face_edge_set(g) for g in state if g != f):
                        succ.append(state - {f})
                        break
            cubes = {c for f in state for c in cubes_around_face(f) if cube_ok(c)}
            for c in cubes:
                fc = faces_of_cube(c)
                if all(face_ok(f) for f in fc) and sum(f in state for f in fc) >= 4:
                    succ.append(state.symmetric_difference(fc))
            for s in succ:
                if s not in seen:
                    seen.add(s)
                    if len(seen) > max_states:
                        return None
                    nxt.append(s)
        frontier = nxt
    return best
