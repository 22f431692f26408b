"""Explicit complexes for the two-circle configuration and the Y and T cones.

Surfaces are assembled from coaxial rings.  ``fan(c, a)`` has boundary loop(a);
``strip(a, b)`` has boundary loop(a) - loop(b), where loop(r) runs through the
ring in increasing angle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .complex_core import Chain, SimplicialComplex


class RingBuilder:
    """Accumulates vertices and oriented triangles."""

    def __init__(self):
        self.points: list[tuple[float, float, float]] = []
        self.tris: dict[str, list[tuple[int, int, int]]] = {}

    def point(self, p) -> int:
        self.points.append(tuple(float(x) for x in p))
        return len(self.points) - 1

    def ring(self, radius: float, z: float, n: int, phase: float = 0.0) -> list[int]:
        t = phase + 2 * np.pi * np.arange(n) / n
        return [self.point((radius * math.cos(a), radius * math.sin(a), z)) for a in t]

    def fan(self, name: str, center: int, ring: list[int]) -> None:
        n = len(ring)
        self.tris.setdefault(name, []).extend(
            (center, ring[i], ring[(i + 1) % n]) for i in range(n))

    def strip(self, name: str, a: list[int], b: list[int]) -> None:
        n = len(a)
        out = self.tris.setdefault(name, [])
        for i in range(n):
            j = (i + 1) % n
            out.append((a[i], a[j], b[j]))
            out.append((a[i], b[j], b[i]))

    def disk(self, name: str, rim: list[int], radius: float, z: float, rings: int) -> None:
        """Flat disk inside ``rim`` (boundary = loop(rim)), ``rings`` concentric layers."""
        n = len(rim)
        c = self.point((0.0, 0.0, z))
        prev = None
        for k in range(1, rings):
            cur = self.ring(radius * k / rings, z, n)
            if prev is None:
                self.fan(name, c, cur)
            else:
                self.strip(name, cur, prev)
            prev = cur
        if prev is None:
            self.fan(name, c, rim)
        else:
            self.strip(name, rim, prev)

    def band(self, name: str, top: list[int], bottom: list[int], profile, z_top: float,
             z_bottom: float, rings: int) -> None:
        """Surface of revolution r = profile(z) from ring ``top`` down to ring ``bottom``."""
        n = len(top)
        prev = top
        for k in range(1, rings):
            z = z_top + (z_bottom - z_top) * k / rings
            cur = self.ring(float(profile(z)), z, n)
            self.strip(name, prev, cur)
            prev = cur
        self.strip(name, prev, bottom)

    def loop_edges(self, ring: list[int]) -> list[tuple[int, int]]:
        n = len(ring)
        return [(ring[i], ring[(i + 1) % n]) for i in range(n)]


@dataclass
class ChainScene:
    """A complex with named 2-chains (sheets) and named 1-cycles (loops)."""

    complex: SimplicialComplex
    sheets: dict[str, Chain] = field(default_factory=dict)
    loops: dict[str, Chain] = field(default_factory=dict)
    edge_groups: dict[str, list[int]] = field(default_factory=dict)

    def sheet_cells(self, *names: str) -> list[int]:
        return sorted({c for n in names for c in self.sheets[n].coeffs})


def _assemble(rb: RingBuilder, loops: dict[str, list[tuple[int, int]]],
              edge_groups: dict[str, list[tuple[int, int]]] | None = None) -> ChainScene:
    all_tris = [t for ts in rb.tris.values() for t in ts]
    cx = SimplicialComplex.from_simplices(np.array(rb.points), all_tris)
    sheets = {name: Chain.from_oriented(cx, ts) for name, ts in rb.tris.items()}
    lp = {name: Chain.from_oriented(cx, es) for name, es in loops.items()}
    groups = {name: sorted(cx.cell_id(1, e) for e in es) for name, es in (edge_groups or {}).items()}
    return ChainScene(cx, sheets, lp, groups)


def two_circle_scene(R: float = 1.0, h: float = 0.1, n: int = 24,
                     sheets=("D1", "D2", "H", "D", "H1", "H2"), disk_rings: int = 2,
                     band_rings: int = 3, tube_rings: int = 4) -> ChainScene:
    """Circles C1 (z = h) and C2 (z = -h) with the candidate sheets.

    D1, D2: flat disks; H: catenoid (cylinder when none exists); D: central disk
    of the Y-film; H1, H2: its bands.  Orientations: boundary(D1) = gamma1,
    boundary(D2) = gamma2, boundary(H) = gamma1 - gamma2, boundary(D) = delta,
    boundary(Hi) = gamma_i - delta.
    """
    from .reference import TwoCircleConfig, catenoid_parameter, y_film

    cfg = TwoCircleConfig(R, h)
    rb = RingBuilder()
    top = rb.ring(R, h, n)
    bottom = rb.ring(R, -h, n)
    loops = {"gamma1": rb.loop_edges(top), "gamma2": rb.loop_edges(bottom)}
    sheets = set(sheets)
    if "D1" in sheets:
        rb.disk("D1", top, R, h, disk_rings)
    if "D2" in sheets:
        rb.disk("D2", bottom, R, -h, disk_rings)
    if "H" in sheets:
        c = catenoid_parameter(cfg)
        prof = (lambda z: c * math.cosh(z / c)) if c is not None else (lambda z: R)
        rb.band("H", top, bottom, prof, h, -h, 2 * tube_rings)
    if sheets & {"D", "H1", "H2"}:
        try:
            yf = y_film(cfg)
            rho, prof = yf.rho, yf.profile
        except ValueError:
            rho = 0.9 * R
            prof = lambda z: rho + (R - rho) * abs(z) / h
        mid = rb.ring(rho, 0.0, n)
        loops["delta"] = rb.loop_edges(mid)
        if "D" in sheets:
            rb.disk("D", mid, rho, 0.0, disk_rings)
        if "H1" in sheets:
            rb.band("H1", top, mid, prof, h, 0.0, band_rings)
        if "H2" in sheets:
            rb.band("H2", bottom, mid, prof, -h, 0.0, band_rings)
    return _assemble(rb, loops)


def cylinder_scene(R: float = 1.0, h: float = 0.3, n: int = 24, rings: int = 4) -> ChainScene:
    return two_circle_scene(R, h, n, sheets=("H",), tube_rings=rings)


def two_disk_scene(R: float = 1.0, h: float = 0.3, n: int = 24, rings: int = 2) -> ChainScene:
    return two_circle_scene(R, h, n, sheets=("D1", "D2"), disk_rings=rings)


def y_cone_scene(n_arc: int = 8, radius: float = 1.0) -> ChainScene:
    """Three half-disks F1, F2, F3 at azimuths 0, 120, 240 degrees sharing the z-axis spine.

    Each Fi is a fan from the origin over a half-circle from the south to the
    north pole; all three induce the same orientation on the spine.
    """
    rb = RingBuilder()
    o = rb.point((0.0, 0.0, 0.0))
    south = rb.point((0.0, 0.0, -radius))
    north = rb.point((0.0, 0.0, radius))
    loops, rims = {}, []
    for i in range(3):
        az = 2 * math.pi * i / 3
        arc = [south]
        for k in range(1, n_arc):
            phi = -math.pi / 2 + math.pi * k / n_arc
            arc.append(rb.point((radius * math.cos(phi) * math.cos(az),
                                 radius * math.cos(phi) * math.sin(az), radius * math.sin(phi))))
        arc.append(north)
        name = f"F{i + 1}"
        rb.tris[name] = [(o, arc[k], arc[k + 1]) for k in range(n_arc)]
        edges = [(arc[k], arc[k + 1]) for k in range(n_arc)]
        loops[f"S{i + 1}"] = edges
        rims.extend(edges)
    spine = [(o, south), (o, north)]
    return _assemble(rb, loops, {"spine": spine, "rim": rims})


def t_cone_scene(radius: float = 1.0) -> ChainScene:
    """Cone over the edges of a regular tetrahedron: six triangles (0, vi, vj)."""
    from .reference import tetrahedron_directions

    rb = RingBuilder()
    o = rb.point((0.0, 0.0, 0.0))
    v = [rb.point(radius * d) for d in tetrahedron_directions()]
    spokes, rims = [], []
    for i in range(4):
        spokes.append((o, v[i]))
        for j in range(i + 1, 4):
            rb.tris[f"F{i}{j}"] = [(o, v[i], v[j])]
            rims.append((v[i], v[j]))
    return _assemble(rb, {}, {"spoke": spokes, "rim": rims})


# -- sliding meshes ---------------------------------------------------------------

def _circle_frame(piece):
    n = np.asarray(piece.normal, dtype=float)
    a = np.array([1.0, 0.0, 0.0]) if abs(n[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(n, a)
    u /= np.linalg.norm(u)
    # circles about the z axis start at +x
    if np.allclose(n, [0.0, 0.0, 1.0]):
        u = np.array([1.0, 0.0, 0.0])
    v = np.cross(n, u)
    return np.asarray(piece.center, dtype=float), u, v


def circle_points(piece, n: int) -> np.ndarray:
    c, u, v = _circle_frame(piece)
    t = 2 * np.pi * np.arange(n) / n
    return c + piece.radius * (np.outer(np.cos(t), u) + np.outer(np.sin(t), v))


def _mesh_from(rb: RingBuilder, labels: dict[int, int], pieces):
    from .sliding import FREE, SlidingMesh

    tris = [t for ts in rb.tris.values() for t in ts]
    lab = np.full(len(rb.points), FREE, dtype=np.int64)
    for v, j in labels.items():
        lab[v] = j
    m = SlidingMesh(np.array(rb.points), tris, lab, pieces)
    m.vertices = m.project()
    m.validate()
    return m


def disk_fan_mesh(pieces, loop: int = 0, n: int = 24, rings: int = 1):
    """Flat disk spanning circle ``pieces[loop]``; rim vertices labeled to it."""
    piece = pieces[loop]
    c, u, v = _circle_frame(piece)
    rb = RingBuilder()
    rim = [rb.point(p) for p in circle_points(piece, n)]
    center = rb.point(c)
    prev = None
    for k in range(1, rings):
        r = piece.radius * k / rings
        t = 2 * np.pi * np.arange(n) / n
        cur = [rb.point(c + r * (math.cos(a) * u + math.sin(a) * v)) for a in t]
        if prev is None:
            rb.fan("disk", center, cur)
        else:
            rb.strip("disk", cur, prev)
        prev = cur
    if prev is None:
        rb.fan("disk", center, rim)
    else:
        rb.strip("disk", rim, prev)
    return _mesh_from(rb, {v_: loop for v_ in rim}, pieces)


def _tube(rb: RingBuilder, A: np.ndarray, B: np.ndarray, rings: int, name: str,
          start: list[int] | None = None, end: list[int] | None = None):
    """Straight tube from ring points A to ring points B; returns the ring id lists."""
    ring_ids = []
    for k in range(rings + 1):
        if k == 0 and start is not None:
            ring_ids.append(start)
            continue
        if k == rings and end is not None:
            ring_ids.append(end)
            continue
        s = k / rings
        ring_ids.append([rb.point(p) for p in (1 - s) * A + s * B])
    for k in range(rings):
        rb.strip(name, ring_ids[k], ring_ids[k + 1])
    return ring_ids


def cylinder_mesh(pieces, loops=(0, 1), n: int = 24, rings: int = 8):
    """Straight tube between two circles; both rims labeled."""
    A = circle_points(pieces[loops[0]], n)
    B = circle_points(pieces[loops[1]], n)
    rb = RingBuilder()
    ids = _tube(rb, A, B, rings, "tube")
    labels = {v: loops[0] for v in ids[0]}
    labels.update({v: loops[1] for v in ids[-1]})
    return _mesh_from(rb, labels, pieces)


def y_seed_mesh(pieces, loops=(0, 1), n: int = 24, rings: int = 16, disk_rings: int = 8):
    """Tube between two circles plus a central disk glued along the middle ring.

    The middle ring is the one circle of edges carrying three faces.
    """
    if rings % 2:
        raise ValueError("y-seed needs an even number of tube rings")
    A = circle_points(pieces[loops[0]], n)
    B = circle_points(pieces[loops[1]], n)
    rb = RingBuilder()
    ids = _tube(rb, A, B, rings, "tube")
    mid = ids[rings // 2]
    M = np.array([rb.points[v] for v in mid])
    c = M.mean(axis=0)
    center = rb.point(c)
    prev = None
    for k in range(1, disk_rings):
        s = k / disk_rings
        cur = [rb.point(p) for p in c + s * (M - c)]
        if prev is None:
            rb.fan("disk", center, cur)
        else:
            rb.strip("disk", cur, prev)
        prev = cur
    if prev is None:
        rb.fan("disk", center, mid)
    else:
        rb.strip("disk", mid, prev)
    labels = {v: loops[0] for v in ids[0]}
    labels.update({v: loops[1] for v in ids[-1]})
    return _mesh_from(rb, labels, pieces)


def scene_mesh(scene: ChainScene, labels=None, pieces=()):
    """A sliding mesh carrying all 2-cells of a chain scene (orientation dropped)."""
    from .sliding import SlidingMesh

    cx = scene.complex
    return SlidingMesh(cx.vertices, cx.cells[2], labels, pieces)
