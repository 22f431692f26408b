"""Area descent on non-manifold triangle meshes with sliding boundary constraints.

Vertices may be tied to boundary pieces (circle, polyline, plane, torus); after
every step they are re-projected onto their piece, so a labeled vertex never
leaves it.  Edges may carry any number of faces, which is how Y-type films are
represented.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse import linalg as splinalg

from . import kernels

FREE = -1


class MeshError(ValueError):
    pass


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("zero vector where a direction is required")
    return v / n


def _perp(n: np.ndarray) -> np.ndarray:
    """A fixed unit vector orthogonal to n."""
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    return _unit(np.cross(n, a))


@dataclass(frozen=True)
class BoundaryPiece:
    """A constraint set: circle, polyline, plane or torus."""

    kind: str
    center: tuple = (0.0, 0.0, 0.0)     # circle, torus; plane uses it as its point
    normal: tuple = (0.0, 0.0, 1.0)     # circle normal, plane normal, torus axis
    radius: float = 1.0                 # circle radius, torus major radius
    minor: float = 0.0                  # torus minor radius
    points: tuple = ()                  # polyline vertices
    closed: bool = False

    def __post_init__(self):
        if self.kind not in ("circle", "polyline", "plane", "torus"):
            raise ValueError(f"unknown boundary piece kind {self.kind!r}")
        object.__setattr__(self, "center", tuple(float(x) for x in self.center))
        object.__setattr__(self, "normal", tuple(float(x) for x in _unit(self.normal)))
        if self.kind == "polyline":
            pts = tuple(tuple(float(x) for x in p) for p in self.points)
            if len(pts) < 2:
                raise ValueError("a polyline needs at least two points")
            object.__setattr__(self, "points", pts)
        if self.kind in ("circle", "torus") and not self.radius > 0:
            raise ValueError("radius must be positive")
        if self.kind == "torus" and not 0 < self.minor < self.radius:
            raise ValueError("torus needs 0 < minor < major radius")

    # -- constructors ------------------------------------------------------

    @classmethod
    def circle(cls, center, normal, radius) -> "BoundaryPiece":
        return cls("circle", center=tuple(center), normal=tuple(normal), radius=float(radius))

    @classmethod
    def plane(cls, point, normal) -> "BoundaryPiece":
        return cls("plane", center=tuple(point), normal=tuple(normal))

    @classmethod
    def polyline(cls, points, closed=False) -> "BoundaryPiece":
        return cls("polyline", points=tuple(map(tuple, points)), closed=bool(closed))

    @classmethod
    def torus(cls, center, axis, major, minor) -> "BoundaryPiece":
        return cls("torus", center=tuple(center), normal=tuple(axis), radius=float(major),
                   minor=float(minor))

    @classmethod
    def from_json(cls, d: dict) -> "BoundaryPiece":
        kind = d["kind"]
        if kind == "circle":
            return cls.circle(d["center"], d["normal"], d["radius"])
        if kind == "plane":
            return cls.plane(d["point"], d["normal"])
        if kind == "polyline":
            return cls.polyline(d["points"], d.get("closed", False))
        if kind == "torus":
            return cls.torus(d["center"], d["axis"], d["major"], d["minor"])
        raise ValueError(f"unknown boundary piece kind {kind!r}")

    def to_json(self) -> dict:
        if self.kind == "circle":
            return {"kind": "circle", "center": list(self.center), "normal": list(self.normal),
                    "radius": self.radius}
        if self.kind == "plane":
            return {"kind": "plane", "point": list(self.center), "normal": list(self.normal)}
        if self.kind == "polyline":
            return {"kind": "polyline", "points": [list(p) for p in self.points],
                    "closed": self.closed}
        return {"kind": "torus", "center": list(self.center), "axis": list(self.normal),
                "major": self.radius, "minor": self.minor}

    # -- geometry ----------------------------------------------------------

    def _segments(self):
        P = np.array(self.points)
        if self.closed:
            return P, np.roll(P, -1, axis=0)
        return P[:-1], P[1:]

    def _circle_dir(self, q: np.ndarray) -> np.ndarray:
        """Unit radial directions (in the circle plane) of offsets q from the center."""
        n = np.array(self.normal)
        r = q - np.outer(q @ n, n)
        nr = np.linalg.norm(r, axis=1)
        fallback = _perp(n)
        out = np.where(nr[:, None] > 1e-300, r / np.where(nr > 1e-300, nr, 1.0)[:, None], fallback)
        return out

    def closest_point(self, p) -> np.ndarray:
        """Nearest point on the piece; accepts (3,) or (k, 3)."""
        P = np.asarray(p, dtype=float)
        single = P.ndim == 1
        P = P.reshape(-1, 3)
        c, n = np.array(self.center), np.array(self.normal)
        if self.kind == "plane":
            out = P - np.outer((P - c) @ n, n)
        elif self.kind == "circle":
            out = c + self.radius * self._circle_dir(P - c)
        elif self.kind == "torus":
            ring = c + self.radius * self._circle_dir(P - c)
            d = P - ring
            nd = np.linalg.norm(d, axis=1)
            fallback = np.outer(np.ones(len(P)), n)
            u = np.where(nd[:, None] > 1e-300, d / np.where(nd > 1e-300, nd, 1.0)[:, None], fallback)
            out = ring + self.minor * u
        else:
            A, B = self._segments()
            AB = B - A
            L2 = np.einsum("ij,ij->i", AB, AB)
            t = np.einsum("kij,ij->ki", P[:, None, :] - A[None], AB) / np.where(L2 > 0, L2, 1.0)
            t = np.clip(t, 0.0, 1.0)
            Q = A[None] + t[..., None] * AB[None]
            d2 = np.sum((Q - P[:, None, :]) ** 2, axis=2)
            k = np.argmin(d2, axis=1)
            out = Q[np.arange(len(P)), k]
        return out[0] if single else out

    def residual(self, p) -> np.ndarray:
        """Distance from points to the piece, from its implicit description."""
        P = np.asarray(p, dtype=float).reshape(-1, 3)
        c, n = np.array(self.center), np.array(self.normal)
        if self.kind == "plane":
            return np.abs((P - c) @ n)
        if self.kind == "circle":
            q = P - c
            h = q @ n
            rad = np.linalg.norm(q - np.outer(h, n), axis=1)
            return np.hypot(h, rad - self.radius)
        if self.kind == "torus":
            q = P - c
            h = q @ n
            rad = np.linalg.norm(q - np.outer(h, n), axis=1)
            return np.abs(np.hypot(h, rad - self.radius) - self.minor)
        return np.linalg.norm(self.closest_point(P) - P, axis=1)

    def tangent_project(self, p, v) -> np.ndarray:
        """Project vectors v (k, 3) onto the tangent space of the piece at points p (k, 3)."""
        P = np.asarray(p, dtype=float).reshape(-1, 3)
        Vv = np.asarray(v, dtype=float).reshape(-1, 3)
        c, n = np.array(self.center), np.array(self.normal)
        if self.kind == "plane":
            return Vv - np.outer(Vv @ n, n)
        if self.kind == "circle":
            t = np.cross(n, self._circle_dir(P - c))
            return t * np.einsum("ij,ij->i", Vv, t)[:, None]
        if self.kind == "torus":
            ring = c + self.radius * self._circle_dir(P - c)
            m = P - ring
            m /= np.linalg.norm(m, axis=1, keepdims=True)
            return Vv - m * np.einsum("ij,ij->i", Vv, m)[:, None]
        A, B = self._segments()
        out = np.zeros_like(Vv)
        for i, q in enumerate(P):
            AB = B - A
            L2 = np.einsum("ij,ij->i", AB, AB)
            t = np.clip(np.einsum("ij,ij->i", q - A, AB) / np.where(L2 > 0, L2, 1.0), 0, 1)
            Q = A + t[:, None] * AB
            k = int(np.argmin(np.sum((Q - q) ** 2, axis=1)))
            if 0.0 < t[k] < 1.0:
                d = AB[k] / math.sqrt(L2[k])
                out[i] = d * (Vv[i] @ d)
            # at a polyline corner the vertex is pinned
        return out


class SlidingMesh:
    """Triangle mesh with per-vertex constraint labels (FREE or a piece index)."""

    def __init__(self, vertices, triangles, labels=None, pieces: Sequence[BoundaryPiece] = (),
                 tol: float = 1e-7):
        self.vertices = np.array(vertices, dtype=float).reshape(-1, 3)
        self.triangles = np.array(triangles, dtype=np.int64).reshape(-1, 3)
        n = len(self.vertices)
        self.labels = (np.full(n, FREE, dtype=np.int64) if labels is None
                       else np.array(labels, dtype=np.int64))
        self.pieces = list(pieces)
        self.tol = tol
        self._edges = None
        self.validate()

    def copy(self) -> "SlidingMesh":
        m = SlidingMesh.__new__(SlidingMesh)
        m.vertices = self.vertices.copy()
        m.triangles = self.triangles.copy()
        m.labels = self.labels.copy()
        m.pieces = list(self.pieces)
        m.tol = self.tol
        m._edges = self._edges
        return m

    def validate(self, check_area: bool = True) -> None:
        n = len(self.vertices)
        T = self.triangles
        if len(self.labels) != n:
            raise MeshError("one label per vertex is required")
        if T.size and (T.min() < 0 or T.max() >= n):
            raise MeshError("triangle references a missing vertex")
        if T.size and np.any((T[:, 0] == T[:, 1]) | (T[:, 1] == T[:, 2]) | (T[:, 0] == T[:, 2])):
            raise MeshError("triangle with repeated vertices")
        bad = (self.labels < FREE) | (self.labels >= len(self.pieces))
        if np.any(bad):
            raise MeshError(f"label out of range at vertex {int(np.flatnonzero(bad)[0])}")
        res = self.constraint_residual()
        if res > self.tol:
            raise MeshError(f"labeled vertex off its boundary piece (distance {res:.3g})")
        if check_area and T.size:
            areas, _ = kernels.tri_area_grad(self.vertices, T, False)
            if np.any(areas <= 0):
                raise MeshError(f"zero-area triangle {int(np.flatnonzero(areas <= 0)[0])}")

    def constraint_residual(self) -> float:
        worst = 0.0
        for j, piece in enumerate(self.pieces):
            idx = np.flatnonzero(self.labels == j)
            if idx.size:
                worst = max(worst, float(piece.residual(self.vertices[idx]).max()))
        return worst

    def project(self, X: np.ndarray | None = None) -> np.ndarray:
        """Labeled vertices moved to the closest point of their piece."""
        X = self.vertices if X is None else X
        X = X.copy()
        for j, piece in enumerate(self.pieces):
            idx = np.flatnonzero(self.labels == j)
            if idx.size:
                X[idx] = piece.closest_point(X[idx])
        return X

    def edge_table(self) -> dict[tuple[int, int], list[int]]:
        """Sorted vertex pair -> incident triangle indices (in triangle order)."""
        if self._edges is None:
            table: dict[tuple[int, int], list[int]] = {}
            for k, (a, b, c) in enumerate(self.triangles.tolist()):
                for e in ((a, b), (b, c), (a, c)):
                    table.setdefault((min(e), max(e)), []).append(k)
            self._edges = table
        return self._edges

    def vertex_areas(self, areas: np.ndarray | None = None) -> np.ndarray:
        if areas is None:
            areas, _ = kernels.tri_area_grad(self.vertices, self.triangles, False)
        va = np.zeros(len(self.vertices))
        for c in range(3):
            np.add.at(va, self.triangles[:, c], areas / 3.0)
        return va


def total_area(mesh: SlidingMesh) -> float:
    areas, _ = kernels.tri_area_grad(mesh.vertices, mesh.triangles, False)
    return float(np.sum(areas))


def _project_tangent(mesh: SlidingMesh, X: np.ndarray, G: np.ndarray) -> np.ndarray:
    G = G.copy()
    for j, piece in enumerate(mesh.pieces):
        idx = np.flatnonzero(mesh.labels == j)
        if idx.size:
            G[idx] = piece.tangent_project(X[idx], G[idx])
    return G


def area_gradient(mesh: SlidingMesh, project: bool = True) -> np.ndarray:
    """Gradient of total area; rows of labeled vertices projected to their piece's tangent space."""
    _, G = kernels.tri_area_grad(mesh.vertices, mesh.triangles, True)
    return _project_tangent(mesh, mesh.vertices, G) if project else G


def _boundary_curve_tangents(mesh: SlidingMesh) -> dict[int, np.ndarray | None]:
    """Unit tangent of the mesh boundary curve at each labeled vertex lying on it.

    None marks vertices on a curve piece, whose only admissible motion is along
    that same curve.
    """
    X, lab = mesh.vertices, mesh.labels
    nbrs: dict[int, list[int]] = {}
    for (a, b), faces in mesh.edge_table().items():
        if len(faces) == 1 and lab[a] != FREE and lab[a] == lab[b]:
            nbrs.setdefault(a, []).append(b)
            nbrs.setdefault(b, []).append(a)
    out: dict[int, np.ndarray | None] = {}
    for v, ns in nbrs.items():
        if mesh.pieces[lab[v]].kind in ("circle", "polyline"):
            out[v] = None
            continue
        t = X[ns[-1]] - X[ns[0]] if len(ns) >= 2 else X[ns[0]] - X[v]
        nt = np.linalg.norm(t)
        if nt > 0:
            out[v] = t / nt
    return out


@dataclass
class EvolveReport:
    initial_area: float
    final_area: float
    iterations: int
    converged: bool
    grad_norm: float
    area_history: list[float] = field(default_factory=list)
    max_constraint_residual: float = 0.0
    surgeries: int = 0
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "initial_area": self.initial_area, "final_area": self.final_area,
            "iterations": self.iterations, "converged": self.converged,
            "grad_norm": self.grad_norm, "max_constraint_residual": self.max_constraint_residual,
            "surgeries": self.surgeries, "reason": self.reason,
        }


def _collapse_small(mesh: SlidingMesh, threshold: float) -> int:
    """Collapse the shortest edge of each triangle with area below ``threshold``."""
    areas, _ = kernels.tri_area_grad(mesh.vertices, mesh.triangles, False)
    small = np.flatnonzero(areas < threshold)
    if small.size == 0:
        return 0
    X, T, lab = mesh.vertices, mesh.triangles, mesh.labels
    parent = np.arange(len(X))

    def find(v):
        while parent[v] != v:
            v = parent[v]
        return v

    done = 0
    for k in small:
        tri = [find(v) for v in T[k]]
        if len(set(tri)) < 3:
            continue
        pairs = sorted(((np.linalg.norm(X[tri[i]] - X[tri[(i + 1) % 3]]), tri[i], tri[(i + 1) % 3])
                        for i in range(3)))
        for _, a, b in pairs:
            la, lb = lab[a], lab[b]
            if la != FREE and lb != FREE and la != lb:
                continue
            keep, drop = (a, b) if (la != FREE or lb == FREE) else (b, a)
            if la == lb:
                X[keep] = 0.5 * (X[a] + X[b])
                if lab[keep] != FREE:
                    X[keep] = mesh.pieces[lab[keep]].closest_point(X[keep])
            parent[drop] = keep
            done += 1
            break
    if not done:
        return 0
    roots = np.array([find(v) for v in range(len(X))])
    T2 = roots[T]
    ok = (T2[:, 0] != T2[:, 1]) & (T2[:, 1] != T2[:, 2]) & (T2[:, 0] != T2[:, 2])
    T2 = T2[ok]
    # drop duplicate triangles (same vertex set)
    _, first = np.unique(np.sort(T2, axis=1), axis=0, return_index=True)
    T2 = T2[np.sort(first)]
    used = np.unique(T2)
    remap = -np.ones(len(X), dtype=np.int64)
    remap[used] = np.arange(len(used))
    mesh.vertices = X[used]
    mesh.labels = lab[used]
    mesh.triangles = remap[T2]
    mesh._edges = None
    return done


def cotan_stiffness(X: np.ndarray, T: np.ndarray) -> sparse.csr_matrix:
    """P1 stiffness matrix K with K X equal to the area gradient (cotangent weights)."""
    n = len(X)
    rows, cols, vals = [], [], []
    for k in range(3):
        i, j, o = T[:, k], T[:, (k + 1) % 3], T[:, (k + 2) % 3]
        a, b = X[i] - X[o], X[j] - X[o]
        cr = np.linalg.norm(np.cross(a, b), axis=1)
        w = 0.5 * np.einsum("ij,ij->i", a, b) / np.where(cr > 0, cr, np.inf)
        rows += [i, j, i, j]
        cols += [j, i, i, j]
        vals += [-w, -w, w, w]
    K = sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n, n))
    return K.tocsr()


def _dof_basis(mesh: SlidingMesh) -> sparse.csr_matrix:
    """Columns spanning the admissible motions: 3 per free vertex, tangent ones on pieces."""
    X, lab = mesh.vertices, mesh.labels
    tangents = _boundary_curve_tangents(mesh)
    rows, cols, vals = [], [], []
    ncol = 0
    eye = np.eye(3)
    for v in range(len(X)):
        if lab[v] == FREE:
            B = eye
        else:
            Pm = mesh.pieces[lab[v]].tangent_project(np.repeat(X[v][None], 3, axis=0), eye)
            t = tangents.get(v, False)
            if t is None:
                continue
            if t is not False:
                Q = eye - np.outer(t, t)
                Pm = Q @ Pm @ Q
            U, sv, _ = np.linalg.svd(Pm)
            B = U[:, sv > 0.5]
        for c in range(B.shape[1]):
            rows += [3 * v, 3 * v + 1, 3 * v + 2]
            cols += [ncol] * 3
            vals += list(B[:, c])
            ncol += 1
    return sparse.csr_matrix((vals, (rows, cols)), shape=(3 * len(X), ncol))


def evolve(mesh: SlidingMesh, tol: float = 1e-6, max_iters: int = 2000, surgery: bool = False,
           area_threshold: float = 1e-10, preconditioner: str = "cotan", memory: int = 8,
           step: float = 1.0, callback: Callable[[int, SlidingMesh], None] | None = None,
           check_every: int = 1) -> tuple[SlidingMesh, EvolveReport]:
    """Preconditioned descent on total area with sliding re-projection.

    Admissible motions are free vertices in all directions and labeled vertices
    in the tangent space of their piece, minus motion along the mesh's own
    boundary curve (a pure reparametrization, which on a polygonal rim would let
    vertices bunch up to cut discrete area).  The base direction solves the
    cotangent-stiffness system on those motions ("cotan") or divides by lumped
    vertex area ("lumped"); ``memory`` > 0 adds limited-memory quasi-Newton
    corrections on top.  Convergence is measured by the lumped-area-scaled
    gradient, a discrete mean curvature independent of resolution.  Each step
    is accepted only if the area strictly decreases; backtracking halves the
    step at most 30 times, and failing that the mesh is declared stationary.
    """
    if preconditioner not in ("cotan", "lumped"):
        raise ValueError("preconditioner must be 'cotan' or 'lumped'")
    m = mesh.copy()
    if m.constraint_residual() > m.tol:
        raise MeshError("labeled vertex off its piece at the start of evolve")
    areas, G = kernels.tri_area_grad(m.vertices, m.triangles, True)
    area = float(np.sum(areas))
    rep = EvolveReport(initial_area=area, final_area=area, iterations=0, converged=False,
                       grad_norm=math.inf, area_history=[area])
    P = None
    pairs: list[tuple[np.ndarray, np.ndarray, float]] = []
    prev_x = prev_g = None
    for it in range(max_iters):
        if P is None:
            P = _dof_basis(m)
            pairs.clear()
            prev_x = prev_g = None
        va = m.vertex_areas(areas)
        if np.any(va <= 0):
            raise MeshError("isolated or degenerate vertex during evolve")
        g = P.T @ G.ravel()
        gfull = P @ g
        gnorm = float(np.max(np.linalg.norm(gfull.reshape(-1, 3) / va[:, None], axis=1)))
        rep.grad_norm = gnorm
        if gnorm < tol:
            rep.converged = True
            rep.reason = "gradient below tolerance"
            break
        x = m.vertices.ravel()
        if prev_x is not None and memory > 0:
            sv, yv = x - prev_x, gfull - prev_g
            sy = float(sv @ yv)
            if sy > 1e-12 * float(np.linalg.norm(sv) * np.linalg.norm(yv)):
                pairs.append((sv, yv, 1.0 / sy))
                if len(pairs) > memory:
                    pairs.pop(0)
        if preconditioner == "cotan":
            K = cotan_stiffness(m.vertices, m.triangles)
            K3 = sparse.kron(K, sparse.eye(3), format="csr")
            Mv = sparse.diags(np.repeat(va, 3))
            solve = splinalg.factorized((P.T @ (K3 + 1e-6 * Mv) @ P).tocsc())
            H0 = lambda v: P @ solve(P.T @ v)
        else:
            inv = np.repeat(1.0 / va, 3)
            H0 = lambda v: P @ (P.T @ (inv * v))
        # two-loop recursion
        q = gfull.copy()
        alphas = []
        for sv, yv, rho in reversed(pairs):
            a = rho * float(sv @ q)
            alphas.append(a)
            q -= a * yv
        r = H0(q)
        for (sv, yv, rho), a in zip(pairs, reversed(alphas)):
            b = rho * float(yv @ r)
            r += (a - b) * sv
        d = -r
        slope = float(gfull @ d)
        if not slope < 0:
            pairs.clear()
            d = -H0(gfull)
            slope = float(gfull @ d)
        D = d.reshape(-1, 3)
        s = step
        accepted = False
        for _ in range(31):
            X = m.project(m.vertices + s * D)
            new_areas, _ = kernels.tri_area_grad(X, m.triangles, False)
            new_area = float(np.sum(new_areas))
            if new_area < area and np.all(new_areas > 0):
                accepted = True
                break
            s *= 0.5
        if not accepted:
            rep.converged = True
            rep.reason = "no decrease after 30 halvings (stationary)"
            break
        prev_x, prev_g = x.copy(), gfull
        m.vertices = X
        res = m.constraint_residual()
        rep.max_constraint_residual = max(rep.max_constraint_residual, res)
        if res > m.tol:
            raise MeshError(f"constraint residual {res:.3g} after step {it}")
        area = new_area
        rep.area_history.append(area)
        rep.iterations = it + 1
        if surgery and np.min(new_areas) < area_threshold:
            rep.surgeries += _collapse_small(m, area_threshold)
            m.validate()
            P = None
            area = total_area(m)
            rep.area_history.append(area)
        elif any(p.kind in ("plane", "torus") for p in m.pieces):
            P = None            # tangent spaces move with the vertices
        if callback is not None and (it + 1) % check_every == 0:
            callback(it + 1, m)
        areas, G = kernels.tri_area_grad(m.vertices, m.triangles, True)
    else:
        rep.reason = "max_iters reached"
    rep.final_area = area
    return m, rep


# -- local minimality probe -----------------------------------------------------

@dataclass
class MinimalityProbe:
    center: tuple
    radius: float
    trials: int = 200
    h: float = 0.0                   # gauge value h(r)
    decrease_tol: float = 1e-9
    amplitude: float = 0.5           # displacement scale, as a fraction of the radius
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("probe radius must be positive")
        if int(self.trials) < 1:
            raise ValueError("probe needs at least one trial")
        self.center = tuple(float(x) for x in self.center)


@dataclass
class ProbeResult:
    passed: bool
    threshold: float
    in_ball_area: float
    worst_decrease: float
    worst_trial: int
    worst_displacement: dict[int, tuple] = field(default_factory=dict)
    moved_vertices: int = 0
    note: str = ("randomized trials can certify failure; a pass is statistical, "
                 "not a proof over all sliding deformations")

    def to_json(self) -> dict:
        return {
            "passed": self.passed, "threshold": self.threshold, "in_ball_area": self.in_ball_area,
            "worst_decrease": self.worst_decrease, "worst_trial": self.worst_trial,
            "moved_vertices": self.moved_vertices, "note": self.note,
        }


def _in_ball_area(X: np.ndarray, tris: np.ndarray) -> float:
    a, _ = kernels.tri_area_grad(X, tris, False)
    return float(np.sum(a))


def apply_displacement(mesh: SlidingMesh, displacement: dict[int, tuple]) -> SlidingMesh:
    out = mesh.copy()
    for v, d in displacement.items():
        out.vertices[v] = out.vertices[v] + np.asarray(d)
    return out


def _trial_positions(mesh: SlidingMesh, probe: MinimalityProbe, idx: np.ndarray,
                     rng: np.random.Generator, kind: int, lap: np.ndarray) -> np.ndarray:
    c = np.array(probe.center)
    X0 = mesh.vertices[idx]
    s = np.linalg.norm(X0 - c, axis=1) / probe.radius
    bump = np.clip(1.0 - s * s, 0.0, None) ** 2
    amp = probe.amplitude * probe.radius * rng.uniform(0.0, 1.0)
    if kind == 0:
        d = rng.normal(size=(len(idx), 3))
        d *= amp * bump[:, None]
    else:
        # random fraction of a smoothing step toward neighbour averages
        d = rng.uniform(0.0, 1.0) * lap * bump[:, None]
    Y = X0 + d
    lab = mesh.labels[idx]
    for j, piece in enumerate(mesh.pieces):
        sel = lab == j
        if np.any(sel):
            Y[sel] = piece.closest_point(Y[sel])
    # points leaving the ball are pulled back radially
    off = Y - c
    r = np.linalg.norm(off, axis=1)
    out = r > probe.radius
    if np.any(out):
        Y[out] = c + off[out] * (probe.radius / r[out])[:, None]
        for j, piece in enumerate(mesh.pieces):
            bad = out & (lab == j)
            if np.any(bad):
                # clamping broke the constraint: keep those vertices fixed
                Y[bad] = X0[bad]
    return Y


def check_local_sliding_minimality(mesh: SlidingMesh, probe: MinimalityProbe) -> ProbeResult:
    """Random piecewise-linear sliding deformations supported in B(center, radius).

    Fails iff some trial lowers the area of the affected triangles by more than
    r^2 h(r) + decrease_tol.
    """
    c = np.array(probe.center)
    X = mesh.vertices
    idx = np.flatnonzero(np.linalg.norm(X - c, axis=1) < probe.radius)
    threshold = probe.radius ** 2 * probe.h + probe.decrease_tol
    if idx.size == 0:
        return ProbeResult(True, threshold, 0.0, 0.0, -1, moved_vertices=0)
    touched = np.flatnonzero(np.isin(mesh.triangles, idx).any(axis=1))
    tris = mesh.triangles[touched]
    base = _in_ball_area(X, tris)
    # neighbour averages for the smoothing family
    nbr_sum = np.zeros_like(X)
    nbr_cnt = np.zeros(len(X))
    for a, b in mesh.edge_table():
        nbr_sum[a] += X[b]
        nbr_sum[b] += X[a]
        nbr_cnt[a] += 1
        nbr_cnt[b] += 1
    lap = nbr_sum[idx] / np.maximum(nbr_cnt[idx], 1)[:, None] - X[idx]
    seeds = np.random.SeedSequence(probe.seed).spawn(int(probe.trials))

    def run(t: int):
        rng = np.random.default_rng(seeds[t])
        Y = _trial_positions(mesh, probe, idx, rng, t % 2, lap)
        Xt = X.copy()
        Xt[idx] = Y
        a, _ = kernels.tri_area_grad(Xt, tris, False)
        if np.any(a <= 0):
            return t, -math.inf, None
        return t, base - float(np.sum(a)), Y - X[idx]

    if probe.threads > 1:
        with ThreadPoolExecutor(max_workers=probe.threads) as ex:
            results = list(ex.map(run, range(int(probe.trials))))
    else:
        results = [run(t) for t in range(int(probe.trials))]
    # merge by trial index: largest decrease, lowest index on ties
    results.sort(key=lambda r: r[0])
    best_t, best_dec, best_d = -1, -math.inf, None
    for t, dec, d in results:
        if dec > best_dec:
            best_t, best_dec, best_d = t, dec, d
    disp = {} if best_d is None else {int(v): tuple(float(x) for x in best_d[k])
                                      for k, v in enumerate(idx)}
    return ProbeResult(passed=not best_dec > threshold, threshold=threshold, in_ball_area=base,
                       worst_decrease=float(best_dec), worst_trial=best_t,
                       worst_displacement=disp, moved_vertices=int(idx.size))


# -- singular edges -------------------------------------------------------------

@dataclass
class SingularEdgeStats:
    edges: list[tuple[int, int]]
    angles_deg: np.ndarray          # (n_edges, 3)

    @property
    def count(self) -> int:
        return len(self.edges)

    def summary(self) -> dict:
        if not self.edges:
            return {"count": 0}
        a = self.angles_deg.ravel()
        hist, bins = np.histogram(a, bins=np.arange(90.0, 151.0, 2.0))
        return {"count": len(self.edges), "mean": float(a.mean()), "min": float(a.min()),
                "max": float(a.max()), "max_abs_dev_from_120": float(np.max(np.abs(a - 120.0))),
                "histogram": {"bins": bins.tolist(), "counts": hist.tolist()}}


def singular_edge_stats(mesh: SlidingMesh) -> SingularEdgeStats:
    """Pairwise dihedral angles along every edge with exactly three faces."""
    X, T = mesh.vertices, mesh.triangles
    edges, angles = [], []
    for (a, b), faces in mesh.edge_table().items():
        if len(faces) != 3:
            continue
        e = X[b] - X[a]
        e /= np.linalg.norm(e)
        us = []
        for f in faces:
            o = [v for v in T[f] if v != a and v != b][0]
            w = X[o] - X[a]
            w = w - (w @ e) * e
            us.append(w / np.linalg.norm(w))
        ang = [math.degrees(math.acos(float(np.clip(us[i] @ us[j], -1.0, 1.0))))
               for i, j in ((0, 1), (1, 2), (0, 2))]
        edges.append((a, b))
        angles.append(ang)
    return SingularEdgeStats(edges, np.array(angles).reshape(-1, 3))
