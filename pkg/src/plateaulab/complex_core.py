"""Simplicial complexes and integral chains (over Z or Z/p).

Cells are stored as sorted vertex tuples; the reference orientation of a
k-simplex is the one given by its sorted vertex order, and the facet obtained by
omitting the i-th vertex carries the sign (-1)**i.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np


class ComplexError(ValueError):
    pass


class ChainError(ValueError):
    pass


def permutation_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation sorting ``seq`` (entries must be distinct)."""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


def _faces(simplex: tuple[int, ...]) -> list[tuple[int, tuple[int, ...]]]:
    return [((-1) ** i, simplex[:i] + simplex[i + 1:]) for i in range(len(simplex))]


class SimplicialComplex:
    """Vertices in R^3 plus oriented cells of dimension 0..3.

    ``cells[k]`` is a list of sorted vertex tuples; the id of a k-cell is its
    position in that list.
    """

    def __init__(self, vertices, cells: Mapping[int, Iterable[Sequence[int]]], *, validate=True,
                 check_area=True):
        self.vertices = np.asarray(vertices, dtype=float).reshape(-1, 3)
        self.cells: dict[int, list[tuple[int, ...]]] = {k: [] for k in range(4)}
        self._index: dict[int, dict[tuple[int, ...], int]] = {k: {} for k in range(4)}
        for k in range(4):
            for c in cells.get(k, ()):
                t = tuple(int(v) for v in c)
                if len(t) != k + 1:
                    raise ComplexError(f"{k}-cell {t} must have {k + 1} vertices")
                s = tuple(sorted(t))
                if s in self._index[k]:
                    raise ComplexError(f"duplicate {k}-cell {s}")
                self._index[k][s] = len(self.cells[k])
                self.cells[k].append(s)
        if validate:
            self.validate(check_area=check_area)

    @classmethod
    def from_simplices(cls, vertices, simplices: Iterable[Sequence[int]]) -> "SimplicialComplex":
        """Build the closure of ``simplices`` (all faces added, duplicates merged)."""
        cells: dict[int, dict[tuple[int, ...], None]] = {k: {} for k in range(4)}
        n = len(np.asarray(vertices).reshape(-1, 3))
        for v in range(n):
            cells[0][(v,)] = None
        for s in simplices:
            s = tuple(sorted(int(v) for v in s))
            for r in range(1, len(s) + 1):
                for face in itertools.combinations(s, r):
                    cells[r - 1][face] = None
        ordered = {k: sorted(cells[k]) for k in range(4)}
        return cls(vertices, ordered)

    # -- queries ---------------------------------------------------------

    def n_cells(self, k: int) -> int:
        return len(self.cells.get(k, ()))

    def cell_id(self, k: int, simplex: Sequence[int]) -> int:
        return self._index[k][tuple(sorted(simplex))]

    def has_cell(self, k: int, simplex: Sequence[int]) -> bool:
        return tuple(sorted(simplex)) in self._index[k]

    @property
    def dimension(self) -> int:
        return max((k for k in range(4) if self.cells[k]), default=-1)

    def validate(self, check_area: bool = True) -> None:
        nv = len(self.vertices)
        for k in range(4):
            for s in self.cells[k]:
                if len(set(s)) != len(s):
                    raise ComplexError(f"{k}-cell {s} has repeated vertices")
                if s[0] < 0 or s[-1] >= nv:
                    raise ComplexError(f"{k}-cell {s} references a missing vertex")
                if k >= 1:
                    for _, f in _faces(s):
                        if f not in self._index[k - 1]:
                            raise ComplexError(f"face {f} of {k}-cell {s} is not in the complex")
        if check_area and self.cells[2]:
            areas = triangle_areas(self.vertices, np.array(self.cells[2]))
            bad = np.flatnonzero(areas <= 0.0)
            if bad.size:
                raise ComplexError(f"degenerate triangle {self.cells[2][bad[0]]}")

    def with_cells(self, k: int, simplices: Iterable[Sequence[int]],
                   check_area: bool = True) -> "SimplicialComplex":
        """Return a complex extended by ``simplices`` (and their faces); ids of old cells are kept."""
        new = {j: list(self.cells[j]) for j in range(4)}
        seen = {j: set(self.cells[j]) for j in range(4)}
        for s in simplices:
            s = tuple(sorted(int(v) for v in s))
            for r in range(1, len(s) + 1):
                for face in itertools.combinations(s, r):
                    if face not in seen[r - 1]:
                        seen[r - 1].add(face)
                        new[r - 1].append(face)
        return SimplicialComplex(self.vertices, new, check_area=check_area)

    def boundary_matrix(self, k: int) -> np.ndarray:
        """Dense integer matrix of the boundary map C_k -> C_{k-1} (object dtype)."""
        mat = np.zeros((self.n_cells(k - 1), self.n_cells(k)), dtype=object)
        for j, s in enumerate(self.cells[k]):
            for sign, f in _faces(s):
                mat[self._index[k - 1][f], j] = sign
        return mat

    def edge_faces(self) -> dict[int, list[int]]:
        """Map 1-cell id -> list of incident 2-cell ids."""
        out: dict[int, list[int]] = {e: [] for e in range(self.n_cells(1))}
        for j, s in enumerate(self.cells[2]):
            for _, f in _faces(s):
                out[self._index[1][f]].append(j)
        return out

    def relabel(self, perms: Mapping[int, Sequence[int]]) -> "SimplicialComplex":
        """Permute cell ids: ``perms[k][new_id] = old_id``."""
        cells = {k: [self.cells[k][i] for i in perms[k]] if k in perms else list(self.cells[k])
                 for k in range(4)}
        return SimplicialComplex(self.vertices, cells)

    def __eq__(self, other):
        return (isinstance(other, SimplicialComplex)
                and self.cells == other.cells
                and np.array_equal(self.vertices, other.vertices))

    def __repr__(self):
        counts = ", ".join(f"{k}:{self.n_cells(k)}" for k in range(4) if self.cells[k])
        return f"SimplicialComplex({len(self.vertices)} vertices; cells {counts})"

    # -- serialization ---------------------------------------------------

    def to_json(self) -> dict:
        return {
            "vertices": [[float(x) for x in v] for v in self.vertices],
            "cells": {str(k): [list(c) for c in self.cells[k]] for k in range(1, 4) if self.cells[k]},
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "SimplicialComplex":
        verts = data["vertices"]
        cells = {int(k): v for k, v in data.get("cells", {}).items()}
        cells[0] = [[i] for i in range(len(verts))]
        return cls(verts, cells)


def triangle_areas(vertices: np.ndarray, tris: np.ndarray) -> np.ndarray:
    tris = np.asarray(tris, dtype=np.int64).reshape(-1, 3)
    if tris.size == 0:
        return np.zeros(0)
    a, b, c = vertices[tris[:, 0]], vertices[tris[:, 1]], vertices[tris[:, 2]]
    return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


@dataclass(frozen=True)
class CellMeasures:
    """Areas of 2-cells and lengths of 1-cells."""

    area: np.ndarray
    length: np.ndarray

    @classmethod
    def of(cls, cx: SimplicialComplex) -> "CellMeasures":
        area = triangle_areas(cx.vertices, np.array(cx.cells[2], dtype=np.int64).reshape(-1, 3))
        if cx.cells[1]:
            e = np.array(cx.cells[1])
            length = np.linalg.norm(cx.vertices[e[:, 1]] - cx.vertices[e[:, 0]], axis=1)
        else:
            length = np.zeros(0)
        return cls(area=area, length=length)


@dataclass(frozen=True, eq=False)
class Chain:
    """Sparse integer (modulus 0) or Z/p (modulus p) chain on a complex."""

    complex: SimplicialComplex
    dim: int
    coeffs: Mapping[int, int] = field(default_factory=dict)
    modulus: int = 0

    def __post_init__(self):
        if self.modulus < 0 or self.modulus == 1:
            raise ChainError("modulus must be 0 or a prime")
        n = self.complex.n_cells(self.dim)
        clean: dict[int, int] = {}
        for cid, c in self.coeffs.items():
            cid, c = int(cid), int(c)
            if not 0 <= cid < n:
                raise ChainError(f"{cid} is not a {self.dim}-cell of the complex")
            if self.modulus:
                c %= self.modulus
            if c:
                clean[cid] = clean.get(cid, 0) + c
        if self.modulus:
            clean = {k: v % self.modulus for k, v in clean.items()}
        object.__setattr__(self, "coeffs", {k: clean[k] for k in sorted(clean) if clean[k]})

    # -- constructors ----------------------------------------------------

    @classmethod
    def zero(cls, cx: SimplicialComplex, dim: int, modulus: int = 0) -> "Chain":
        return cls(cx, dim, {}, modulus)

    @classmethod
    def from_oriented(cls, cx: SimplicialComplex, simplices: Iterable[Sequence[int]],
                      coeff: int = 1, modulus: int = 0) -> "Chain":
        """Chain summing ``coeff`` times each simplex given in its own vertex order."""
        acc: dict[int, int] = {}
        dim = None
        for s in simplices:
            s = tuple(int(v) for v in s)
            dim = len(s) - 1
            cid = cx.cell_id(dim, s)
            acc[cid] = acc.get(cid, 0) + coeff * permutation_sign(s)
        if dim is None:
            raise ChainError("from_oriented needs at least one simplex")
        return cls(cx, dim, acc, modulus)

    @classmethod
    def from_vector(cls, cx: SimplicialComplex, dim: int, vec, modulus: int = 0) -> "Chain":
        return cls(cx, dim, {i: int(v) for i, v in enumerate(vec) if int(v)}, modulus)

    # -- arithmetic ------------------------------------------------------

    def _check(self, other: "Chain"):
        if other.complex is not self.complex and other.complex != self.complex:
            raise ChainError("chains live on different complexes")
        if other.dim != self.dim or other.modulus != self.modulus:
            raise ChainError("dimension or modulus mismatch")

    def __add__(self, other: "Chain") -> "Chain":
        self._check(other)
        acc = dict(self.coeffs)
        for k, v in other.coeffs.items():
            acc[k] = acc.get(k, 0) + v
        return Chain(self.complex, self.dim, acc, self.modulus)

    def __neg__(self) -> "Chain":
        return Chain(self.complex, self.dim, {k: -v for k, v in self.coeffs.items()}, self.modulus)

    def __sub__(self, other: "Chain") -> "Chain":
        return self + (-other)

    def __mul__(self, scalar: int) -> "Chain":
        return Chain(self.complex, self.dim, {k: scalar * v for k, v in self.coeffs.items()},
                     self.modulus)

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Chain):
            return NotImplemented
        return (self.dim == other.dim and self.modulus == other.modulus
                and dict(self.coeffs) == dict(other.coeffs)
                and (self.complex is other.complex or self.complex == other.complex))

    def __hash__(self):
        return hash((self.dim, self.modulus, tuple(self.coeffs.items())))

    def __bool__(self):
        return bool(self.coeffs)

    def __repr__(self):
        ring = "Z" if not self.modulus else f"Z/{self.modulus}"
        return f"Chain(dim={self.dim}, {ring}, {dict(self.coeffs)})"

    def reduce(self, p: int) -> "Chain":
        if self.modulus and self.modulus != p:
            raise ChainError("can only reduce integer chains")
        return Chain(self.complex, self.dim, dict(self.coeffs), p)

    def to_vector(self) -> list[int]:
        vec = [0] * self.complex.n_cells(self.dim)
        for k, v in self.coeffs.items():
            vec[k] = v
        return vec

    def support(self) -> list[int]:
        return list(self.coeffs)

    def signed_coeffs(self) -> dict[int, int]:
        """Coefficients with Z/p residues mapped to the symmetric range."""
        if not self.modulus:
            return dict(self.coeffs)
        p = self.modulus
        return {k: (v if v <= p // 2 else v - p) for k, v in self.coeffs.items()}

    def to_json(self) -> dict:
        return {"dim": self.dim, "modulus": self.modulus,
                "coeffs": [[k, v] for k, v in sorted(self.coeffs.items())]}

    @classmethod
    def from_json(cls, cx: SimplicialComplex, data: Mapping) -> "Chain":
        return cls(cx, int(data["dim"]), {int(k): int(v) for k, v in data.get("coeffs", [])},
                   int(data.get("modulus", 0)))


def boundary(chain: Chain) -> Chain:
    """Simplicial boundary; exact over Z, reduced mod p otherwise."""
    if chain.dim <= 0:
        raise ChainError("no boundary below dimension 0")
    cx = chain.complex
    acc: dict[int, int] = {}
    for cid, c in chain.coeffs.items():
        for sign, f in _faces(cx.cells[chain.dim][cid]):
            fid = cx._index[chain.dim - 1][f]
            acc[fid] = acc.get(fid, 0) + sign * c
    return Chain(cx, chain.dim - 1, acc, chain.modulus)


def _abs_mult(chain: Chain) -> dict[int, int]:
    return {k: abs(v) for k, v in chain.signed_coeffs().items()}


def mass(chain: Chain, measures: CellMeasures) -> float:
    """Sum of |multiplicity| * area (symmetric representative for Z/p chains)."""
    if chain.dim != 2:
        raise ChainError("mass is defined here for 2-chains")
    # fixed cell-id order keeps the float sum reproducible
    return float(sum(m * measures.area[k] for k, m in sorted(_abs_mult(chain).items())))


def size(chain: Chain, measures: CellMeasures) -> float:
    """Area of the support, multiplicities ignored."""
    if chain.dim != 2:
        raise ChainError("size is defined here for 2-chains")
    return float(sum(measures.area[k] for k in sorted(chain.coeffs)))


def push_forward(chain: Chain, vertex_map: Mapping[int, object],
                 target: SimplicialComplex | None = None) -> Chain:
    """Image of a chain under a simplicial (vertex) map.

    ``vertex_map`` sends vertex ids of the chain's complex either to vertex ids
    of ``target`` (default: the same complex) or to points in R^3.  With
    points, coinciding images are merged into the vertices of a new complex.
    Degenerate image simplices are dropped; missing image simplices are added
    to the target.
    """
    src = chain.complex
    used = sorted({v for cid in chain.coeffs for v in src.cells[chain.dim][cid]})
    missing = [v for v in used if v not in vertex_map]
    if missing:
        raise ChainError(f"vertex_map undefined on vertices {missing[:5]}")

    values = [vertex_map[v] for v in used]
    as_points = bool(values) and not isinstance(values[0], (int, np.integer))
    if as_points:
        if target is not None:
            raise ChainError("target complex is built from the images when mapping to points")
        pts: dict[tuple[float, ...], int] = {}
        idmap: dict[int, int] = {}
        for v in used:
            key = tuple(float(x) for x in np.asarray(vertex_map[v], dtype=float))
            idmap[v] = pts.setdefault(key, len(pts))
        base = SimplicialComplex(np.array(list(pts), dtype=float).reshape(-1, 3),
                                 {0: [[i] for i in range(len(pts))]})
    else:
        base = target if target is not None else src
        idmap = {v: int(vertex_map[v]) for v in used}

    images: dict[tuple[int, ...], int] = {}
    for cid, c in chain.coeffs.items():
        img = tuple(idmap[v] for v in src.cells[chain.dim][cid])
        if len(set(img)) < len(img):
            continue
        key = tuple(sorted(img))
        images[key] = images.get(key, 0) + permutation_sign(img) * c

    new_cells = [s for s in images if not base.has_cell(chain.dim, s)]
    # point images may be collinear; such cells carry zero area but stay combinatorially valid
    out_cx = base.with_cells(chain.dim, new_cells, check_area=not as_points) if new_cells else base
    coeffs = {out_cx.cell_id(chain.dim, s): c for s, c in images.items()}
    return Chain(out_cx, chain.dim, coeffs, chain.modulus)


def dump_json(cx: SimplicialComplex, chains: Mapping[str, Chain] | None = None) -> str:
    data = cx.to_json()
    if chains:
        data["chains"] = {name: ch.to_json() for name, ch in chains.items()}
    return json.dumps(data, sort_keys=True)
