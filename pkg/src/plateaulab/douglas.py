"""Douglas boundary energy, harmonic extension to the disk, and parameterized area.

The boundary map g: S^1 -> curve is sampled at theta_i = 2 pi i / N through
knots t_i (curve parameters in [0, 1), strictly increasing cyclically).  The
energy is (1/16pi) times the double integral of |g(theta) - g(phi)|^2 /
sin^2((theta - phi)/2); with that constant the identity circle scores pi, the
area of the disk it bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.integrate import trapezoid
from scipy.optimize import minimize

from . import kernels

_NORM = 1.0 / (16.0 * math.pi)


class DouglasError(ValueError):
    pass


# -- curves --------------------------------------------------------------------

@dataclass(frozen=True)
class ClosedCurve:
    """Closed curve t -> point(t), t in [0, 1), period 1."""

    point_fn: Callable[[np.ndarray], np.ndarray]
    deriv_fn: Callable[[np.ndarray], np.ndarray]
    name: str = "curve"

    def __post_init__(self):
        t = np.linspace(0.0, 1.0, 257)[:-1]
        P = self.point(t)
        if not np.all(np.isfinite(P)):
            raise DouglasError("curve evaluates to non-finite points")
        length = float(np.sum(np.linalg.norm(np.roll(P, -1, axis=0) - P, axis=1)))
        if not length > 1e-12:
            raise DouglasError("degenerate curve of zero length")

    def point(self, t) -> np.ndarray:
        t = np.mod(np.atleast_1d(np.asarray(t, dtype=float)), 1.0)
        return np.asarray(self.point_fn(t), dtype=float).reshape(-1, 3)

    def deriv(self, t) -> np.ndarray:
        t = np.mod(np.atleast_1d(np.asarray(t, dtype=float)), 1.0)
        return np.asarray(self.deriv_fn(t), dtype=float).reshape(-1, 3)

    @classmethod
    def ellipse(cls, a: float, b: float, center=(0.0, 0.0, 0.0)) -> "ClosedCurve":
        c = np.asarray(center, dtype=float)
        w = 2 * math.pi
        return cls(lambda t: c + np.stack([a * np.cos(w * t), b * np.sin(w * t), 0 * t], axis=1),
                   lambda t: np.stack([-a * w * np.sin(w * t), b * w * np.cos(w * t), 0 * t], axis=1),
                   name=f"ellipse({a},{b})")

    @classmethod
    def circle(cls, center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0), radius: float = 1.0
               ) -> "ClosedCurve":
        n = np.asarray(normal, dtype=float)
        n = n / np.linalg.norm(n)
        u = np.array([1.0, 0.0, 0.0]) if np.allclose(n, [0, 0, 1]) else np.cross(
            n, [1.0, 0.0, 0.0] if abs(n[0]) < 0.9 else [0.0, 1.0, 0.0])
        u = u / np.linalg.norm(u)
        v = np.cross(n, u)
        c = np.asarray(center, dtype=float)
        w = 2 * math.pi
        return cls(lambda t: c + radius * (np.outer(np.cos(w * t), u) + np.outer(np.sin(w * t), v)),
                   lambda t: radius * w * (-np.outer(np.sin(w * t), u) + np.outer(np.cos(w * t), v)),
                   name=f"circle(r={radius})")

    @classmethod
    def polyline(cls, points) -> "ClosedCurve":
        """Closed polygon parameterized proportionally to arc length."""
        P = np.asarray(points, dtype=float).reshape(-1, 3)
        seg = np.roll(P, -1, axis=0) - P
        L = np.linalg.norm(seg, axis=1)
        total = float(L.sum())
        if not total > 0:
            raise DouglasError("degenerate curve of zero length")
        knots = np.concatenate([[0.0], np.cumsum(L) / total])

        def pt(t):
            k = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, len(P) - 1)
            s = (t - knots[k]) / np.where(L[k] > 0, L[k] / total, 1.0)
            return P[k] + s[:, None] * seg[k]

        def dt(t):
            k = np.clip(np.searchsorted(knots, t, side="right") - 1, 0, len(P) - 1)
            return seg[k] * total / np.where(L[k] > 0, L[k], 1.0)[:, None]

        return cls(pt, dt, name="polyline")

    @classmethod
    def from_piece(cls, piece) -> "ClosedCurve":
        if piece.kind == "circle":
            return cls.circle(piece.center, piece.normal, piece.radius)
        if piece.kind == "polyline" and piece.closed:
            return cls.polyline(piece.points)
        raise DouglasError(f"a {piece.kind} piece is not a closed curve")


# -- boundary parameterizations ---------------------------------------------------

def pinned_indices(N: int) -> tuple[int, int, int]:
    return 0, int(round(N / 3)), int(round(2 * N / 3))


@dataclass
class BoundaryParam:
    """Knots t_i (unwrapped, t_0 <= t_i < t_0 + 1) for the sample angles 2 pi i / N."""

    curve: ClosedCurve
    knots: np.ndarray

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        N = len(self.knots)
        if N < 16:
            raise DouglasError("at least 16 samples are required")
        d = np.diff(np.concatenate([self.knots, [self.knots[0] + 1.0]]))
        if np.any(d <= 0):
            raise DouglasError("knots must be strictly increasing over one period")

    @property
    def N(self) -> int:
        return len(self.knots)

    @property
    def points(self) -> np.ndarray:
        return self.curve.point(self.knots)

    @classmethod
    def uniform(cls, curve: ClosedCurve, N: int) -> "BoundaryParam":
        return cls(curve, np.arange(N) / N)


def _kernel_row(N: int) -> np.ndarray:
    k = np.zeros(N)
    j = np.arange(1, N)
    k[1:] = 1.0 / np.sin(np.pi * j / N) ** 2
    return k


def energy_of_points(G: np.ndarray, with_grad: bool = False):
    """Douglas energy of sampled boundary points G (N, 3), optionally with d/dG."""
    G = np.asarray(G, dtype=float)
    N = len(G)
    h = 2 * math.pi / N
    pair, pgrad = kernels.douglas_pairs(G, _kernel_row(N))
    Dg = (np.roll(G, -1, axis=0) - np.roll(G, 1, axis=0)) / (2 * h)
    diag = 4.0 * float(np.sum(Dg * Dg))
    E = _NORM * h * h * (pair + diag)
    if not with_grad:
        return E
    dgrad = (4.0 / h) * (np.roll(Dg, 1, axis=0) - np.roll(Dg, -1, axis=0))
    return E, _NORM * h * h * (pgrad + dgrad)


def douglas_energy(g: BoundaryParam) -> float:
    return float(energy_of_points(g.points))


# -- minimization ------------------------------------------------------------------

@dataclass
class DouglasResult:
    param: BoundaryParam
    energy: float
    initial_energy: float
    iterations: int
    converged: bool
    max_single_knot_decrease: float
    history: list[float] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"B_initial": self.initial_energy, "B": self.energy, "iterations": self.iterations,
                "converged": self.converged,
                "max_single_knot_decrease": self.max_single_knot_decrease}


class _ArcParam:
    """Knots of the three arcs between pinned samples as softmax-weighted increments."""

    def __init__(self, N: int, pins: tuple[int, int, int], anchors: tuple[float, float, float]):
        self.N = N
        self.pins = pins
        self.anchors = anchors
        ends = list(pins[1:]) + [N]
        self.arcs = [(pins[k], ends[k], (anchors[(k + 1) % 3] + (k == 2)) - anchors[k])
                     for k in range(3)]

    def knots(self, z: np.ndarray) -> np.ndarray:
        t = np.empty(self.N)
        off = 0
        for k, (i0, i1, span) in enumerate(self.arcs):
            m = i1 - i0
            w = np.exp(z[off:off + m] - np.max(z[off:off + m]))
            inc = span * w / w.sum()
            t[i0] = self.anchors[k]
            t[i0 + 1:i1] = self.anchors[k] + np.cumsum(inc[:-1])
            off += m
        return t

    def pullback(self, z: np.ndarray, dEdt: np.ndarray) -> np.ndarray:
        out = np.empty_like(z)
        off = 0
        for k, (i0, i1, span) in enumerate(self.arcs):
            m = i1 - i0
            w = np.exp(z[off:off + m] - np.max(z[off:off + m]))
            p = w / w.sum()
            # t[i0 + j] = anchor + span * sum_{l < j} p_l, j = 1..m-1
            # dE/dp_l = span * sum_{j > l} dE/dt[i0 + j]
            c = dEdt[i0 + 1:i1][::-1].cumsum()[::-1]
            dEdp = span * np.concatenate([c, [0.0]])
            out[off:off + m] = p * (dEdp - p @ dEdp)
            off += m
        return out

    def z_from_knots(self, t: np.ndarray) -> np.ndarray:
        z = []
        for k, (i0, i1, span) in enumerate(self.arcs):
            seg = np.concatenate([t[i0:i1], [self.anchors[(k + 1) % 3] + (k == 2)]])
            z.append(np.log(np.diff(seg)))
        return np.concatenate(z)


def _single_knot_delta(G: np.ndarray, i: int, new: np.ndarray, krow: np.ndarray) -> float:
    """Energy change when sample i moves to ``new`` (O(N))."""
    N = len(G)
    h = 2 * math.pi / N
    idx = (i - np.arange(N)) % N
    w = krow[idx]
    w[i] = 0.0
    old_d = np.sum((G - G[i]) ** 2, axis=1)
    new_d = np.sum((G - new) ** 2, axis=1)
    pair = 2.0 * float(w @ (new_d - old_d))
    G2 = G.copy()
    G2[i] = new
    diag = 0.0
    for j in ((i - 1) % N, (i + 1) % N):
        a = (G[(j + 1) % N] - G[(j - 1) % N]) / (2 * h)
        b = (G2[(j + 1) % N] - G2[(j - 1) % N]) / (2 * h)
        diag += 4.0 * float(b @ b - a @ a)
    return _NORM * h * h * (pair + diag)


def _polish(param: BoundaryParam, pins: tuple[int, ...], step0: float, step_min: float,
            tol: float, history: list[float], max_sweeps: int):
    """Cyclic coordinate descent on single knots with step halving."""
    t = param.knots.copy()
    curve = param.curve
    N = len(t)
    krow = _kernel_row(N)
    G = curve.point(t)
    E = energy_of_points(G)
    free = [i for i in range(N) if i not in pins]
    step = step0
    sweeps = 0
    while step >= step_min and sweeps < max_sweeps:
        improved = False
        for i in free:
            lo = t[i - 1] if i > 0 else t[-1] - 1.0
            hi = t[i + 1] if i < N - 1 else t[0] + 1.0
            for sgn in (1.0, -1.0):
                cand = t[i] + sgn * step
                if not lo < cand < hi:
                    continue
                p = curve.point(cand)[0]
                dE = _single_knot_delta(G, i, p, krow)
                if dE < -tol:
                    t[i] = cand
                    G[i] = p
                    E += dE
                    improved = True
                    break
        sweeps += 1
        if improved:
            E = energy_of_points(G)
            history.append(E)
        else:
            step *= 0.5
    return BoundaryParam(curve, t), E


def max_single_knot_decrease(param: BoundaryParam, step: float) -> float:
    """Largest energy decrease from moving one free knot by +-step (0 if none decreases)."""
    t, G = param.knots, param.points
    N = len(t)
    krow = _kernel_row(N)
    pins = pinned_indices(N)
    worst = 0.0
    for i in range(N):
        if i in pins:
            continue
        lo = t[i - 1] if i > 0 else t[-1] - 1.0
        hi = t[i + 1] if i < N - 1 else t[0] + 1.0
        for sgn in (1.0, -1.0):
            cand = t[i] + sgn * step
            if lo < cand < hi:
                dE = _single_knot_delta(G, i, param.curve.point(cand)[0], krow)
                worst = max(worst, -dE)
    return worst


def minimize_douglas(curve: ClosedCurve, N: int = 512, iterations: int = 500,
                     start: BoundaryParam | None = None, step_min: float = 1e-7,
                     tol: float = 1e-12, polish_sweeps: int = 200) -> DouglasResult:
    """Minimize the Douglas energy over monotone knots with three pinned samples.

    Quasi-Newton descent on the arc increments, followed by single-knot
    coordinate descent whose final pass certifies that no move of size
    ``step_min`` lowers the energy by more than ``tol``.
    """
    g0 = start if start is not None else BoundaryParam.uniform(curve, N)
    N = g0.N
    pins = pinned_indices(N)
    anchors = tuple(float(g0.knots[p]) for p in pins)
    ap = _ArcParam(N, pins, anchors)
    E0 = douglas_energy(g0)
    history = [E0]

    def fun(z):
        t = ap.knots(z)
        G = curve.point(t)
        E, dG = energy_of_points(G, with_grad=True)
        dEdt = np.einsum("ij,ij->i", dG, curve.deriv(t))
        return E, ap.pullback(z, dEdt)

    def cb(z):
        history.append(float(energy_of_points(curve.point(ap.knots(z)))))

    z0 = ap.z_from_knots(g0.knots)
    res = minimize(fun, z0, jac=True, method="L-BFGS-B", callback=cb,
                   options={"maxiter": iterations, "gtol": 1e-12, "ftol": 1e-15})
    # L-BFGS-B line searches are monotone; keep the start if it somehow was not beaten
    cand = BoundaryParam(curve, ap.knots(res.x))
    g1 = cand if douglas_energy(cand) <= E0 else g0
    g2, E2 = _polish(g1, pins, 1e-3, step_min, tol, history, polish_sweeps)
    worst = max_single_knot_decrease(g2, step_min)
    E2 = douglas_energy(g2)
    return DouglasResult(param=g2, energy=E2, initial_energy=E0, iterations=int(res.nit),
                         converged=worst <= tol, max_single_knot_decrease=worst, history=history)


# -- harmonic extension and area -------------------------------------------------

@dataclass
class HarmonicMap:
    """Samples f(r_a, phi_b) on the polar grid r = linspace(0, 1, n_r + 1), phi = 2 pi b / n_theta."""

    r: np.ndarray
    phi: np.ndarray
    values: np.ndarray            # (n_r + 1, n_theta, 3)


def harmonic_extension(g: BoundaryParam | np.ndarray, n_r: int = 64, n_theta: int = 256
                       ) -> HarmonicMap:
    """Poisson extension of boundary samples, evaluated as the Fourier series sum c_n r^|n| e^{in phi}."""
    G = g.points if isinstance(g, BoundaryParam) else np.asarray(g, dtype=float)
    N = len(G)
    C = np.fft.fft(G, axis=0) / N                     # c_n for n = 0..N-1 (negative n wrapped)
    n = np.fft.fftfreq(N, d=1.0 / N)                  # signed frequencies
    if N % 2 == 0:
        # split the Nyquist mode evenly so the interpolant stays real
        ny = N // 2
        C = np.concatenate([C, C[ny:ny + 1]], axis=0)
        C[ny] *= 0.5
        C[-1] *= 0.5
        n = np.concatenate([n, [float(ny)]])
        n[ny] = -float(ny)
    r = np.linspace(0.0, 1.0, n_r + 1)
    phi = 2 * np.pi * np.arange(n_theta) / n_theta
    E = np.exp(1j * np.outer(phi, n))                 # (n_theta, modes)
    R = r[:, None] ** np.abs(n)[None, :]              # (n_r + 1, modes)
    vals = np.einsum("am,bm,md->abd", R, E, C).real
    return HarmonicMap(r=r, phi=phi, values=vals)


def area_integral(f: HarmonicMap) -> float:
    """Integral over the disk of |f_r x f_phi| dr dphi (central differences, trapezoid in r)."""
    F = f.values
    dr = f.r[1] - f.r[0]
    dphi = 2 * np.pi / F.shape[1]
    Fr = np.gradient(F, dr, axis=0, edge_order=2)
    Fp = (np.roll(F, -1, axis=1) - np.roll(F, 1, axis=1)) / (2 * dphi)
    J = np.linalg.norm(np.cross(Fr, Fp), axis=2)
    radial = trapezoid(J, f.r, axis=0)
    return float(np.sum(radial) * dphi)


def mean_value_residual(f: HarmonicMap) -> float:
    """Largest deviation at interior nodes from the 5-point polar Laplacian (scaled by r^2)."""
    F = f.values
    r = f.r
    dr = r[1] - r[0]
    dphi = 2 * np.pi / F.shape[1]
    a = slice(1, -1)
    Frr = (F[2:] - 2 * F[1:-1] + F[:-2]) / dr ** 2
    Fr = (F[2:] - F[:-2]) / (2 * dr)
    Fpp = (np.roll(F[a], -1, axis=1) - 2 * F[a] + np.roll(F[a], 1, axis=1)) / dphi ** 2
    rr = r[a][:, None, None]
    lap = rr ** 2 * Frr + rr * Fr + Fpp
    return float(np.max(np.abs(lap)))


def polar_grid_mesh(f: HarmonicMap) -> tuple[np.ndarray, np.ndarray]:
    """Triangulated polar grid: a fan at the center, quads split into two triangles."""
    F = f.values
    nr, nt = F.shape[0] - 1, F.shape[1]
    verts = [F[0, 0]]
    idx = lambda a, b: 1 + (a - 1) * nt + (b % nt)
    for a in range(1, nr + 1):
        verts.extend(F[a])
    tris = []
    for b in range(nt):
        tris.append((0, idx(1, b), idx(1, b + 1)))
    for a in range(1, nr):
        for b in range(nt):
            p, q, r_, s = idx(a, b), idx(a, b + 1), idx(a + 1, b + 1), idx(a + 1, b)
            tris.append((p, s, r_))
            tris.append((p, r_, q))
    return np.array(verts), np.array(tris, dtype=np.int64)
