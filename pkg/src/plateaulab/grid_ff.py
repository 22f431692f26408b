"""Dyadic cubical grid, safe region away from the boundary, two-stage
Federer-Fleming projection onto the 2-skeleton, and discrete minimization of
face sets by free-face collapses and cube pushes.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Sequence

import numpy as np
from scipy.stats import qmc
from shapely import box as shp_box
from shapely.geometry import LineString, Point, Polygon
from shapely.geometry import Polygon as ShpPolygon
from shapely.ops import unary_union

# fraction of the face area left uncovered below which a face counts as whole
COVER_TOL = 1e-9
# candidates live in [inset, 1 - inset] of the open cell
_INSET = 0.05


class GridError(ValueError):
    pass


# -- grid ------------------------------------------------------------------------

@dataclass(frozen=True)
class CubicalGrid:
    """Uniform grid of cubes of side 2^-level starting at ``origin``.

    Cells are addressed by integer lower corners.  A 2-face (axis, i, j, k) is
    normal to ``axis``; an edge (axis, i, j, k) is parallel to ``axis``.
    """

    origin: tuple
    shape: tuple
    level: int

    def __post_init__(self):
        object.__setattr__(self, "origin", tuple(float(x) for x in self.origin))
        object.__setattr__(self, "shape", tuple(int(x) for x in self.shape))
        if len(self.shape) != 3 or min(self.shape) < 1:
            raise GridError("grid shape must be three positive integers")

    @classmethod
    def from_box(cls, lo, hi, level: int) -> "CubicalGrid":
        lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
        if np.any(hi <= lo):
            raise GridError("empty bounding box")
        s = 2.0 ** -level
        shape = np.maximum(1, np.ceil((hi - lo) / s - 1e-9)).astype(int)
        return cls(tuple(lo), tuple(shape), level)

    @property
    def side(self) -> float:
        return 2.0 ** -self.level

    @property
    def n_cubes(self) -> int:
        nx, ny, nz = self.shape
        return nx * ny * nz

    # flat ids
    def _face_shape(self, a: int) -> tuple:
        s = list(self.shape)
        s[a] += 1
        return tuple(s)

    def _edge_shape(self, a: int) -> tuple:
        s = [n + 1 for n in self.shape]
        s[a] -= 1
        return tuple(s)

    def _offsets(self, shape_fn) -> list[int]:
        off, acc = [], 0
        for a in range(3):
            off.append(acc)
            acc += int(np.prod(shape_fn(a)))
        off.append(acc)
        return off

    @cached_property
    def _foff(self) -> list[int]:
        return self._offsets(self._face_shape)

    @cached_property
    def _eoff(self) -> list[int]:
        return self._offsets(self._edge_shape)

    @property
    def n_faces(self) -> int:
        return self._foff[3]

    @property
    def n_edges(self) -> int:
        return self._eoff[3]

    def cube_id(self, i, j, k) -> int:
        nx, ny, _ = self.shape
        return i + nx * (j + ny * k)

    def cube_index(self, c: int) -> tuple:
        nx, ny, _ = self.shape
        return c % nx, (c // nx) % ny, c // (nx * ny)

    def has_cube(self, i, j, k) -> bool:
        nx, ny, nz = self.shape
        return 0 <= i < nx and 0 <= j < ny and 0 <= k < nz

    def face_id(self, a, i, j, k) -> int:
        sx, sy, _ = self._face_shape(a)
        return self._foff[a] + i + sx * (j + sy * k)

    def face_index(self, f: int) -> tuple:
        off = self._foff
        a = int(np.searchsorted(off, f, side="right") - 1)
        r = f - off[a]
        sx, sy, _ = self._face_shape(a)
        return a, r % sx, (r // sx) % sy, r // (sx * sy)

    def edge_id(self, a, i, j, k) -> int:
        sx, sy, _ = self._edge_shape(a)
        return self._eoff[a] + i + sx * (j + sy * k)

    def edge_index(self, e: int) -> tuple:
        off = self._eoff
        a = int(np.searchsorted(off, e, side="right") - 1)
        r = e - off[a]
        sx, sy, _ = self._edge_shape(a)
        return a, r % sx, (r // sx) % sy, r // (sx * sy)

    # incidence
    def cube_faces(self, c: int) -> list[int]:
        i, j, k = self.cube_index(c)
        out = []
        for a in range(3):
            for d in (0, 1):
                p = [i, j, k]
                p[a] += d
                out.append(self.face_id(a, *p))
        return out

    def face_cubes(self, f: int) -> list[int]:
        a, i, j, k = self.face_index(f)
        out = []
        for d in (-1, 0):
            p = [i, j, k]
            p[a] += d
            if self.has_cube(*p):
                out.append(self.cube_id(*p))
        return out

    def face_edges(self, f: int) -> list[int]:
        a, i, j, k = self.face_index(f)
        out = []
        for b in range(3):
            if b == a:
                continue
            c = 3 - a - b
            for d in (0, 1):
                p = [i, j, k]
                p[c] += d
                out.append(self.edge_id(b, *p))
        return out

    def edge_faces(self, e: int) -> list[int]:
        a, i, j, k = self.edge_index(e)
        out = []
        for b in range(3):
            if b == a:
                continue
            c = 3 - a - b
            for d in (-1, 0):
                p = [i, j, k]
                p[c] += d
                if 0 <= p[c] < self.shape[c]:
                    out.append(self.face_id(b, *p))
        return out

    def edge_cubes(self, e: int) -> list[int]:
        a, i, j, k = self.edge_index(e)
        b, c = [x for x in range(3) if x != a]
        out = []
        for db, dc in product((-1, 0), (-1, 0)):
            p = [i, j, k]
            p[b] += db
            p[c] += dc
            if self.has_cube(*p):
                out.append(self.cube_id(*p))
        return out

    # geometry
    def cube_bounds(self, c: int) -> tuple[np.ndarray, np.ndarray]:
        lo = np.asarray(self.origin) + self.side * np.array(self.cube_index(c), dtype=float)
        return lo, lo + self.side

    def cube_corners(self, c: int) -> np.ndarray:
        lo, _ = self.cube_bounds(c)
        return lo + self.side * np.array(list(product((0, 1), repeat=3)), dtype=float)

    def face_frame(self, f: int) -> tuple[int, float, tuple[int, int], np.ndarray]:
        """(normal axis, plane coordinate, in-plane axes, 2-D lower corner)."""
        a, i, j, k = self.face_index(f)
        lo = np.asarray(self.origin) + self.side * np.array([i, j, k], dtype=float)
        u, v = [x for x in range(3) if x != a]
        return a, float(lo[a]), (u, v), np.array([lo[u], lo[v]])

    def face_corners(self, f: int) -> np.ndarray:
        a, z, (u, v), lo2 = self.face_frame(f)
        s = self.side
        out = np.zeros((4, 3))
        for n, (du, dv) in enumerate(((0, 0), (1, 0), (1, 1), (0, 1))):
            out[n, a] = z
            out[n, u] = lo2[0] + du * s
            out[n, v] = lo2[1] + dv * s
        return out

    def edge_points(self, e: int) -> np.ndarray:
        a, i, j, k = self.edge_index(e)
        p = np.asarray(self.origin) + self.side * np.array([i, j, k], dtype=float)
        q = p.copy()
        q[a] += self.side
        return np.stack([p, q])

    def to_json(self) -> dict:
        return {"origin": list(self.origin), "shape": list(self.shape), "level": self.level}

    @classmethod
    def from_json(cls, d: dict) -> "CubicalGrid":
        return cls(d["origin"], d["shape"], d["level"])


# -- safe region ---------------------------------------------------------------------

@dataclass(frozen=True)
class SafeRegion:
    grid: CubicalGrid
    V: frozenset
    V_inner: frozenset

    def __post_init__(self):
        if not self.V_inner <= self.V:
            raise GridError("inner region must be contained in the safe region")

    @classmethod
    def everything(cls, grid: CubicalGrid) -> "SafeRegion":
        allc = frozenset(range(grid.n_cubes))
        return cls(grid, allc, allc)


def _distance_to_pieces(P: np.ndarray, pieces) -> np.ndarray:
    d = np.full(len(P), np.inf)
    for piece in pieces:
        d = np.minimum(d, np.linalg.norm(P - piece.closest_point(P), axis=1))
    return d


def mark_safe_region(grid: CubicalGrid, pieces: Sequence, margin: float) -> SafeRegion:
    """Cubes every point of which is at distance >= margin from the pieces, and
    the cubes whose 26 neighbours all lie in that set.

    A cube is accepted when all of its corners are at distance >= margin and its
    center is at distance >= margin + half the cube diagonal; the second test
    makes the bound hold on the whole closed cube.
    """
    if margin < 0:
        raise GridError("margin must be nonnegative")
    half_diag = 0.5 * math.sqrt(3.0) * grid.side
    cubes = np.arange(grid.n_cubes)
    if len(pieces) == 0:
        V = set(cubes.tolist())
    else:
        corners = np.concatenate([grid.cube_corners(c) for c in cubes])
        dc = _distance_to_pieces(corners, pieces).reshape(len(cubes), 8).min(axis=1)
        centers = np.array([grid.cube_bounds(c)[0] + 0.5 * grid.side for c in cubes])
        dm = _distance_to_pieces(centers, pieces)
        V = set(cubes[(dc >= margin) & (dm >= margin + half_diag)].tolist())
    inner = set()
    for c in V:
        i, j, k = grid.cube_index(c)
        ok = True
        for di, dj, dk in product((-1, 0, 1), repeat=3):
            p = (i + di, j + dj, k + dk)
            if not grid.has_cube(*p) or grid.cube_id(*p) not in V:
                ok = False
                break
        if ok:
            inner.add(c)
    return SafeRegion(grid, frozenset(V), frozenset(inner))


# -- face sets ---------------------------------------------------------------------

@dataclass(frozen=True)
class FaceSet:
    grid: CubicalGrid
    faces: tuple
    residue: tuple = ()

    def __post_init__(self):
        faces = tuple(sorted(set(int(f) for f in self.faces)))
        residue = tuple(sorted(set(int(e) for e in self.residue)))
        if faces and not (0 <= faces[0] and faces[-1] < self.grid.n_faces):
            raise GridError("face id out of range")
        if residue and not (0 <= residue[0] and residue[-1] < self.grid.n_edges):
            raise GridError("edge id out of range")
        object.__setattr__(self, "faces", faces)
        object.__setattr__(self, "residue", residue)

    @property
    def area(self) -> float:
        return len(self.faces) * self.grid.side ** 2

    def to_json(self) -> dict:
        return {"grid": self.grid.to_json(), "faces": list(self.faces),
                "residue_edges": list(self.residue), "area": self.area}

    @classmethod
    def from_json(cls, d: dict) -> "FaceSet":
        return cls(CubicalGrid.from_json(d["grid"]), tuple(d["faces"]),
                   tuple(d.get("residue_edges", ())))

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Vertices and triangles (two per face) for export."""
        V, T, index = [], [], {}
        for f in self.faces:
            ids = []
            for p in self.grid.face_corners(f):
                key = tuple(np.round(p, 12))
                if key not in index:
                    index[key] = len(V)
                    V.append(p)
                ids.append(index[key])
            T.append((ids[0], ids[1], ids[2]))
            T.append((ids[0], ids[2], ids[3]))
        return np.array(V).reshape(-1, 3), np.array(T, dtype=np.int64).reshape(-1, 3)


# -- clipping and distances ------------------------------------------------------------

def clip_polygon(P: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    """Part of a convex polygon with normal . x >= offset (Sutherland-Hodgman)."""
    if len(P) == 0:
        return P
    s = P @ normal - offset
    out = []
    n = len(P)
    for i in range(n):
        a, b = P[i], P[(i + 1) % n]
        sa, sb = s[i], s[(i + 1) % n]
        if sa >= 0:
            out.append(a)
        if (sa >= 0) != (sb >= 0):
            t = sa / (sa - sb)
            out.append(a + t * (b - a))
    return np.array(out).reshape(-1, 3)


def clip_segment(S: np.ndarray, normal: np.ndarray, offset: float) -> np.ndarray:
    if len(S) == 0:
        return S
    sa, sb = S[0] @ normal - offset, S[1] @ normal - offset
    if sa < 0 and sb < 0:
        return S[:0]
    if sa >= 0 and sb >= 0:
        return S
    t = sa / (sa - sb)
    m = S[0] + t * (S[1] - S[0])
    return np.stack([S[0], m]) if sa >= 0 else np.stack([m, S[1]])


def _box_planes(lo: np.ndarray, hi: np.ndarray):
    for a in range(3):
        n = np.zeros(3)
        n[a] = 1.0
        yield n, lo[a]
        yield -n, -hi[a]


def _clip_to_box(P: np.ndarray, lo, hi, segment: bool) -> np.ndarray:
    for n, off in _box_planes(lo, hi):
        P = clip_segment(P, n, off) if segment else clip_polygon(P, n, off)
        if len(P) == 0:
            break
    return P


def _point_segment_dist(X: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    d = b - a
    dd = float(d @ d)
    t = np.zeros(len(X)) if dd == 0 else np.clip((X - a) @ d / dd, 0.0, 1.0)
    return np.linalg.norm(X - (a + t[:, None] * d), axis=1)


def _point_triangle_dist(X: np.ndarray, a, b, c) -> np.ndarray:
    n = np.cross(b - a, c - a)
    nn = float(n @ n)
    edges = np.minimum(np.minimum(_point_segment_dist(X, a, b), _point_segment_dist(X, b, c)),
                       _point_segment_dist(X, c, a))
    if nn == 0:
        return edges
    n = n / math.sqrt(nn)
    h = (X - a) @ n
    Y = X - h[:, None] * n
    # barycentric inside test for the projection
    inside = np.ones(len(X), dtype=bool)
    for p, q in ((a, b), (b, c), (c, a)):
        inside &= np.cross(q - p, Y - p) @ n >= 0
    return np.where(inside, np.abs(h), edges)


def _distance_to_pieces_of_input(X: np.ndarray, polys: list, segs: list) -> np.ndarray:
    d = np.full(len(X), np.inf)
    for P in polys:
        for t in range(1, len(P) - 1):
            d = np.minimum(d, _point_triangle_dist(X, P[0], P[t], P[t + 1]))
    for S in segs:
        d = np.minimum(d, _point_segment_dist(X, S[0], S[1]))
    return d


def _sobol(dim: int, m: int = 6) -> np.ndarray:
    pts = qmc.Sobol(d=dim, scramble=False).random_base2(m)
    return _INSET + (1 - 2 * _INSET) * pts


# -- Federer-Fleming projection -----------------------------------------------------

@dataclass
class InputSet:
    """Triangle soup (m, 3, 3) plus segment soup (k, 2, 3)."""

    triangles: np.ndarray = field(default_factory=lambda: np.zeros((0, 3, 3)))
    segments: np.ndarray = field(default_factory=lambda: np.zeros((0, 2, 3)))

    def __post_init__(self):
        self.triangles = np.asarray(self.triangles, dtype=float).reshape(-1, 3, 3)
        self.segments = np.asarray(self.segments, dtype=float).reshape(-1, 2, 3)

    @property
    def area(self) -> float:
        T = self.triangles
        return float(0.5 * np.linalg.norm(np.cross(T[:, 1] - T[:, 0], T[:, 2] - T[:, 0]),
                                          axis=1).sum())

    @classmethod
    def from_mesh(cls, V, T) -> "InputSet":
        V = np.asarray(V, dtype=float)
        return cls(V[np.asarray(T, dtype=np.int64)])


@dataclass
class FFResult:
    faces: FaceSet
    log: dict                      # {"cubes": {cube: x_Q}, "faces": {face: x_F}}
    outside: list                  # input pieces in cubes outside the safe region
    input_area: float
    max_locality_error: float

    @property
    def area_ratio(self) -> float:
        return self.faces.area / self.input_area if self.input_area > 0 else math.inf

    def to_json(self) -> dict:
        return {"faceset": self.faces.to_json(), "input_area": self.input_area,
                "output_area": self.faces.area, "max_locality_error": self.max_locality_error,
                "log": {"cubes": {str(k): list(v) for k, v in sorted(self.log["cubes"].items())},
                        "faces": {str(k): list(v) for k, v in sorted(self.log["faces"].items())}}}


def _cube_content(grid: CubicalGrid, c: int, inp: InputSet) -> tuple[list, list]:
    lo, hi = grid.cube_bounds(c)
    polys, segs = [], []
    for T in inp.triangles:
        if np.any(T.max(axis=0) < lo) or np.any(T.min(axis=0) > hi):
            continue
        P = _clip_to_box(T, lo, hi, segment=False)
        if len(P) >= 3:
            polys.append(P)
    for S in inp.segments:
        if np.any(S.max(axis=0) < lo) or np.any(S.min(axis=0) > hi):
            continue
        Q = _clip_to_box(S, lo, hi, segment=True)
        if len(Q) == 2:
            segs.append(Q)
    return polys, segs


def _choose_center(grid: CubicalGrid, c: int, polys, segs) -> np.ndarray:
    lo, _ = grid.cube_bounds(c)
    cand = lo + grid.side * _sobol(3)
    d = _distance_to_pieces_of_input(cand, polys, segs)
    best = int(np.argmax(d))
    if not d[best] > 1e-9 * grid.side:
        raise GridError(f"no admissible projection center in cube {c}")
    return cand[best]


def _project_cube(grid: CubicalGrid, c: int, polys, segs, xq: np.ndarray):
    """Radial projection from xq of the cube's content onto its six faces.

    Returns {face: [2-D polygons or segments]} and the largest distance of an
    image point from the cube.
    """
    lo, hi = grid.cube_bounds(c)
    out: dict[int, list] = {}
    err = 0.0
    for f in grid.cube_faces(c):
        a, z, (u, v), _ = grid.face_frame(f)
        corners = grid.face_corners(f)
        center = corners.mean(axis=0)
        planes = []
        for m in range(4):
            p, q = corners[m], corners[(m + 1) % 4]
            n = np.cross(p - xq, q - xq)
            if n @ (center - xq) < 0:
                n = -n
            planes.append((n, float(n @ xq)))
        imgs = []
        for P, seg in [(P, False) for P in polys] + [(S, True) for S in segs]:
            Q = P
            for n, off in planes:
                Q = clip_segment(Q, n, off) if seg else clip_polygon(Q, n, off)
                if len(Q) == 0:
                    break
            if len(Q) < (2 if seg else 3):
                continue
            denom = Q[:, a] - xq[a]
            if np.any(np.abs(denom) < 1e-15):
                continue
            t = (z - xq[a]) / denom
            img = xq + t[:, None] * (Q - xq)
            img[:, a] = z
            err = max(err, float(np.max(np.maximum(lo - img, 0.0) + np.maximum(img - hi, 0.0))))
            imgs.append((img[:, [u, v]], seg))
        if imgs:
            out[f] = imgs
    return out, err


def _face_geometry(items) -> tuple:
    polys, lines = [], []
    for pts, seg in items:
        if seg:
            if np.linalg.norm(pts[1] - pts[0]) > 0:
                lines.append(LineString(pts))
        else:
            g = ShpPolygon(pts)
            if not g.is_valid:
                g = g.buffer(0)
            if g.area > 0:
                polys.append(g)
            elif LineString(pts).length > 0:
                lines.append(LineString(pts))
    return unary_union(polys) if polys else None, unary_union(lines) if lines else None


def _stage_two(grid: CubicalGrid, f: int, items, xf_given=None):
    """Returns (whole face?, residue edges, chosen x_F or None)."""
    a, z, (u, v), lo2 = grid.face_frame(f)
    s = grid.side
    square = shp_box(lo2[0], lo2[1], lo2[0] + s, lo2[1] + s)
    area_geom, line_geom = _face_geometry(items)
    covered = 0.0 if area_geom is None else area_geom.intersection(square).area
    if covered >= (1 - COVER_TOL) * s * s:
        return True, [], None
    geoms = [g for g in (area_geom, line_geom) if g is not None]
    if not geoms:
        return False, [], None
    content = unary_union(geoms)
    if content.is_empty:
        return False, [], None
    if xf_given is None:
        cand = lo2 + s * _sobol(2)
        if area_geom is not None:
            rest = square.difference(area_geom)
            if not rest.is_empty:
                rp = rest.representative_point()
                cand = np.vstack([cand, [rp.x, rp.y]])
        d = np.array([content.distance(Point(*p)) for p in cand])
        best = int(np.argmax(d))
        if not d[best] > 1e-12 * s:
            raise GridError(f"no admissible projection center in face {f}")
        xf = cand[best]
    else:
        xf = np.asarray(xf_given, dtype=float)
    corners2 = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float) * s + lo2
    edge_ids = []
    for m in range(4):
        p, q = corners2[m], corners2[(m + 1) % 4]
        cone = Polygon([tuple(xf), tuple(p), tuple(q)])
        hit = content.intersection(cone)
        if not hit.is_empty and (hit.area > 0 or hit.length > 0):
            mid = 0.5 * (p + q)
            P3 = np.zeros(3)
            P3[a], P3[u], P3[v] = z, mid[0], mid[1]
            edge_ids.append(_edge_at(grid, P3))
    return False, edge_ids, xf


def _edge_at(grid: CubicalGrid, midpoint: np.ndarray) -> int:
    rel = (midpoint - np.asarray(grid.origin)) / grid.side
    frac = rel - np.floor(rel)
    a = int(np.argmin(np.abs(frac - 0.5)))
    idx = np.rint(rel).astype(int)
    idx[a] = int(np.floor(rel[a]))
    return grid.edge_id(a, *idx)


def ff_project(inp: InputSet, grid: CubicalGrid, region: SafeRegion, replay: dict | None = None,
               threads: int = 1) -> FFResult:
    """Project the part of ``inp`` inside the safe region onto whole 2-faces plus
    1-skeleton residue.  Passing a previous ``log`` as ``replay`` reuses its centers.
    """
    if region.grid != grid:
        raise GridError("region belongs to a different grid")
    cubes = sorted(region.V)

    def stage1(c):
        polys, segs = _cube_content(grid, c, inp)
        if not polys and not segs:
            return c, None, {}, 0.0
        if replay is not None and c in replay["cubes"]:
            xq = np.asarray(replay["cubes"][c], dtype=float)
        else:
            xq = _choose_center(grid, c, polys, segs)
        imgs, err = _project_cube(grid, c, polys, segs, xq)
        return c, xq, imgs, err

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            res1 = list(ex.map(stage1, cubes))
    else:
        res1 = [stage1(c) for c in cubes]

    log = {"cubes": {}, "faces": {}}
    per_face: dict[int, list] = {}
    loc_err = 0.0
    for c, xq, imgs, err in res1:
        if xq is None:
            continue
        log["cubes"][c] = tuple(float(x) for x in xq)
        loc_err = max(loc_err, err)
        for f, items in imgs.items():
            per_face.setdefault(f, []).extend(items)

    def stage2(f):
        given = replay["faces"].get(f) if replay is not None else None
        return (f,) + _stage_two(grid, f, per_face[f], given)

    fids = sorted(per_face)
    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            res2 = list(ex.map(stage2, fids))
    else:
        res2 = [stage2(f) for f in fids]
    faces, residue = [], []
    for f, whole, edges, xf in res2:
        if whole:
            faces.append(f)
        else:
            residue.extend(edges)
        if xf is not None:
            log["faces"][f] = tuple(float(x) for x in xf)

    # residue already inside a retained face carries no extra information
    on_faces = {e for f in faces for e in grid.face_edges(f)}
    residue = [e for e in residue if e not in on_faces]
    outside = []
    for c in range(grid.n_cubes):
        if c in region.V:
            continue
        polys, segs = _cube_content(grid, c, inp)
        outside.extend(polys)
        outside.extend(segs)
    return FFResult(FaceSet(grid, tuple(faces), tuple(residue)), log, outside, inp.area, loc_err)


# -- discrete minimization ---------------------------------------------------------

@dataclass
class MinimizeCertificate:
    certified: bool
    states_explored: int
    moves: list                    # [("collapse", face) | ("push", cube), ...]
    candidate_faces: int
    note: str

    def to_json(self) -> dict:
        return {"certified": self.certified, "states_explored": self.states_explored,
                "moves": [list(m) for m in self.moves], "candidate_faces": self.candidate_faces,
                "note": self.note}


_CLASS_NOTE = ("minimum over free-face collapses and cube pushes inside the inner region; "
               "these are deformations fixing its boundary, so the value bounds the "
               "deformation minimum from above")


class _Moves:
    """Bitset move tables for one grid and inner region."""

    def __init__(self, grid: CubicalGrid, inner: frozenset):
        self.grid = grid
        self.movable_face = {}
        self.collapse_masks: dict[int, list[int]] = {}
        movable_edge: dict[int, bool] = {}

        def edge_ok(e):
            if e not in movable_edge:
                cs = grid.edge_cubes(e)
                movable_edge[e] = len(cs) == 4 and all(c in inner for c in cs)
            return movable_edge[e]

        def face_ok(f):
            if f not in self.movable_face:
                cs = grid.face_cubes(f)
                self.movable_face[f] = len(cs) == 2 and all(c in inner for c in cs)
            return self.movable_face[f]

        self._edge_ok, self._face_ok = edge_ok, face_ok
        self.cube_mask: dict[int, int] = {}
        for c in sorted(inner):
            fs = grid.cube_faces(c)
            if all(face_ok(f) for f in fs):
                self.cube_mask[c] = sum(1 << f for f in fs)
        self.face_cube = {}
        for c, m in self.cube_mask.items():
            for f in grid.cube_faces(c):
                self.face_cube.setdefault(f, []).append(c)

    def masks_for(self, f: int) -> list[int]:
        if f not in self.collapse_masks:
            out = []
            if self._face_ok(f):
                for e in self.grid.face_edges(f):
                    if self._edge_ok(e):
                        out.append(sum(1 << g for g in self.grid.edge_faces(e)))
            self.collapse_masks[f] = out
        return self.collapse_masks[f]

    def moves(self, state: int) -> list[tuple[str, int, int]]:
        """(kind, id, next state), collapses first, each list in id order."""
        out = []
        faces = _bits(state)
        for f in faces:
            bit = 1 << f
            for m in self.masks_for(f):
                if state & m == bit:
                    # a free face in no pushable cube takes part in no other move, so
                    # removing it now loses nothing: branching on it is skipped
                    if f not in self.face_cube:
                        return [("collapse", f, state ^ bit)]
                    out.append(("collapse", f, state ^ bit))
                    break
        seen = set()
        for f in faces:
            for c in self.face_cube.get(f, ()):
                if c in seen:
                    continue
                seen.add(c)
                m = self.cube_mask[c]
                if bin(state & m).count("1") >= 4:
                    out.append(("push", c, state ^ m))
        out.sort(key=lambda t: (t[0] != "collapse", t[1]))
        return out


def _bits(x: int) -> list[int]:
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


def discrete_minimize(faces: FaceSet, region: SafeRegion, max_states: int = 500_000,
                      exhaustive_limit: int = 200, restarts: int = 16, seed: int = 0
                      ) -> tuple[FaceSet, MinimizeCertificate]:
    """Smallest face set reachable by collapses (a face with a free edge is removed)
    and pushes (a cube with at least four retained faces trades them for the rest)."""
    grid = faces.grid
    if not region.V_inner:
        raise GridError("inner region is empty")
    mv = _Moves(grid, region.V_inner)
    start = sum(1 << f for f in faces.faces)
    n_cand = sum(1 for f in faces.faces if mv._face_ok(f))

    if n_cand <= exhaustive_limit:
        best, path, explored, complete = _exhaustive(mv, start, max_states)
        if complete:
            out = FaceSet(grid, tuple(_bits(best)), faces.residue)
            return out, MinimizeCertificate(True, explored, path, n_cand, _CLASS_NOTE)
    best, path, explored = _greedy(mv, start, restarts, seed)
    out = FaceSet(grid, tuple(_bits(best)), faces.residue)
    return out, MinimizeCertificate(False, explored, path, n_cand,
                                    _CLASS_NOTE + "; greedy with restarts, not certified")


def _exhaustive(mv: _Moves, start: int, max_states: int):
    # every move removes at least one face, so the reachable graph is acyclic
    parent = {start: None}
    stack = [start]
    best = start
    best_n = bin(start).count("1")
    while stack:
        s = stack.pop()
        n = bin(s).count("1")
        if n < best_n or (n == best_n and s < best):
            best, best_n = s, n
        for kind, ident, nxt in mv.moves(s):
            if nxt not in parent:
                parent[nxt] = (s, kind, ident)
                if len(parent) > max_states:
                    return best, _path(parent, best), len(parent), False
                stack.append(nxt)
    return best, _path(parent, best), len(parent), True


def _path(parent: dict, s: int) -> list:
    out = []
    while parent[s] is not None:
        prev, kind, ident = parent[s]
        out.append((kind, ident))
        s = prev
    return out[::-1]


def _greedy(mv: _Moves, start: int, restarts: int, seed: int):
    rng = np.random.default_rng(seed)
    best, best_path, explored = start, [], 0
    for r in range(restarts):
        s, path = start, []
        while True:
            ms = mv.moves(s)
            explored += 1
            if not ms:
                break
            if r == 0:
                kind, ident, nxt = max(ms, key=lambda t: bin(s).count("1") - bin(t[2]).count("1"))
            else:
                kind, ident, nxt = ms[int(rng.integers(len(ms)))]
            path.append((kind, ident))
            s = nxt
        if bin(s).count("1") < bin(best).count("1"):
            best, best_path = s, path
    return best, best_path, explored


def replay_moves(faces: FaceSet, moves: list) -> FaceSet:
    """Apply a certificate's move list; validates each step."""
    grid = faces.grid
    state = set(faces.faces)
    for kind, ident in moves:
        if kind == "collapse":
            if ident not in state:
                raise GridError(f"collapse of absent face {ident}")
            state.remove(ident)
        elif kind == "push":
            fs = set(grid.cube_faces(ident))
            if len(fs & state) < 4:
                raise GridError(f"push of cube {ident} with fewer than four faces")
            state ^= fs
        else:
            raise GridError(f"unknown move {kind!r}")
    return FaceSet(grid, tuple(state), faces.residue)
