"""Exact mass and size minimization over bounded integer 2-chains.

Every integer solution of the boundary equation is u0 + Z k, with u0 a
particular solution and Z an integer kernel basis from the unimodular
diagonalization.  The search enumerates k depth-first; each coordinate's range
and each subtree's objective bound come from LP relaxations (HiGHS).  Leaves are
checked exactly, so the tree is a certificate once it is exhausted.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .complex_core import Chain, ChainError, CellMeasures, boundary, mass, size
from .homology import Diagonalization, solve_boundary

_LP_EPS = 1e-7


@dataclass
class PlateauChainProblem:
    complex: object
    boundary: Chain
    objective: str = "mass"            # "mass" | "size"
    mode: str = "exact"                # "exact" | "homologous"
    M: int = 3
    gamma_cells: Sequence[int] = ()    # 2-cells of Gamma; V lives here in homologous mode
    cells: Sequence[int] | None = None  # allowed support of T; default all 2-cells
    free_edges: Sequence[int] = ()     # edges where the boundary equation is not imposed
    required: Sequence[int] = ()       # cells that must carry a nonzero multiplicity
    node_budget: int = 200_000

    def __post_init__(self):
        if self.objective not in ("mass", "size"):
            raise ValueError(f"objective must be 'mass' or 'size', got {self.objective!r}")
        if self.mode not in ("exact", "homologous"):
            raise ValueError(f"mode must be 'exact' or 'homologous', got {self.mode!r}")
        if int(self.M) < 1:
            raise ValueError("multiplicity bound M must be >= 1")
        S = self.boundary
        if S.complex is not self.complex and S.complex != self.complex:
            raise ChainError("boundary datum lives on a different complex")
        if S.dim != 1:
            raise ChainError("boundary datum must be a 1-chain")
        if S.modulus:
            raise ChainError("the chain solver works over the integers")
        if boundary(S):
            raise ChainError("boundary datum is not a cycle")
        if S.coeffs and max(abs(v) for v in S.coeffs.values()) > self.M:
            raise ValueError("M is smaller than a coefficient of the boundary datum")
        if self.mode == "homologous" and self.free_edges:
            raise ValueError("free edges are only supported in exact mode")
        n2 = self.complex.n_cells(2)
        for name in ("gamma_cells", "required"):
            bad = [c for c in getattr(self, name) if not 0 <= c < n2]
            if bad:
                raise ChainError(f"{name} contains non-2-cells {bad[:5]}")
        if self.cells is not None:
            allowed = set(self.cells)
            if not set(self.required) <= allowed:
                raise ChainError("required cells must be allowed cells")

    @property
    def support_cells(self) -> list[int]:
        n2 = self.complex.n_cells(2)
        return sorted(set(range(n2) if self.cells is None else self.cells))

    @property
    def v_cells(self) -> list[int]:
        return sorted(set(self.gamma_cells)) if self.mode == "homologous" else []


@dataclass
class ChainSolution:
    status: str                       # "optimal" | "infeasible" | "budget_exhausted"
    chain: Chain | None = None
    v_chain: Chain | None = None
    value: float | None = None
    mass: float | None = None
    size: float | None = None
    certificate: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return self.chain is not None


@dataclass
class ChainReport:
    ok: bool
    residual: Chain
    mass: float
    size: float
    support: list[int]
    max_multiplicity: int
    within_bound: bool
    required_ok: bool
    v_chain: Chain | None = None

    def to_json(self) -> dict:
        return {
            "ok": self.ok, "residual": self.residual.to_json(), "mass": self.mass,
            "size": self.size, "support": self.support,
            "max_multiplicity": self.max_multiplicity, "within_bound": self.within_bound,
            "required_ok": self.required_ok,
            "v_chain": self.v_chain.to_json() if self.v_chain is not None else None,
        }


def _rows_for(cx, cols: Sequence[int], signs: Sequence[int], keep_edges: Sequence[int]):
    """Sparse boundary rows restricted to ``keep_edges``; column j is cell cols[j] times signs[j]."""
    pos = {e: i for i, e in enumerate(keep_edges)}
    rows: list[dict[int, int]] = [dict() for _ in keep_edges]
    for j, cid in enumerate(cols):
        s = cx.cells[2][cid]
        for i in range(3):
            e = cx._index[1][s[:i] + s[i + 1:]]
            if e in pos:
                rows[pos[e]][j] = rows[pos[e]].get(j, 0) + signs[j] * (-1) ** i
    return rows


class _Search:
    def __init__(self, problem: PlateauChainProblem):
        self.p = problem
        cx = problem.complex
        self.t_cols = problem.support_cells
        self.v_cols = problem.v_cells
        self.cols = self.t_cols + self.v_cols
        self.n_t = len(self.t_cols)
        free = set(problem.free_edges)
        self.keep_edges = [e for e in range(cx.n_cells(1)) if e not in free]
        rows = _rows_for(cx, self.cols, [1] * len(self.cols), self.keep_edges)
        self.rows = rows
        S = problem.boundary
        self.rhs = [S.coeffs.get(e, 0) for e in self.keep_edges]
        area = CellMeasures.of(cx).area
        self.area = np.array([area[c] for c in self.t_cols] + [0.0] * len(self.v_cols))
        req = set(problem.required)
        self.required = np.array([c in req for c in self.t_cols] + [False] * len(self.v_cols))
        self.M = int(problem.M)
        self.stats = {"nodes": 0, "leaves": 0, "lp_solves": 0, "pruned_by_bound": 0,
                      "pruned_infeasible": 0}

    # -- LP helpers ----------------------------------------------------------

    def _box_rows(self, fixed: dict[int, int]):
        """Constraints -M <= u0 + Z k <= M on varying columns, with fixed k substituted."""
        free_idx = [i for i in range(self.r) if i not in fixed]
        base = self.u0.astype(float).copy()
        for i, v in fixed.items():
            base += self.Z[:, i] * v
        Zf = self.Z[:, free_idx]
        return free_idx, base, Zf

    def _linprog(self, c, A_ub, b_ub, bounds):
        self.stats["lp_solves"] += 1
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs")
        return res

    def _range(self, fixed: dict[int, int], i: int):
        free_idx, base, Zf = self._box_rows(fixed)
        live = np.any(Zf != 0, axis=1)
        if np.any(np.abs(base[~live]) > self.M):
            return None
        A = np.vstack([Zf[live], -Zf[live]])
        b = np.concatenate([self.M - base[live], self.M + base[live]])
        k = free_idx.index(i)
        c = np.zeros(len(free_idx))
        c[k] = 1.0
        bounds = [(None, None)] * len(free_idx)
        lo = self._linprog(c, A, b, bounds)
        if lo.status != 0:
            return None
        hi = self._linprog(-c, A, b, bounds)
        if hi.status != 0:
            return None
        return math.ceil(lo.fun - _LP_EPS), math.floor(-hi.fun + _LP_EPS)

    def _bound(self, fixed: dict[int, int]):
        """Lower bound of the objective over the subtree, plus the LP's k (for value ordering)."""
        free_idx, base, Zf = self._box_rows(fixed)
        live = np.any(Zf != 0, axis=1)
        if np.any(np.abs(base[~live]) > self.M):
            return math.inf, None
        const = 0.0
        dead = ~live
        if self.p.objective == "mass":
            const = float(np.sum(self.area[dead] * np.abs(base[dead])))
            w = self.area[live]
        else:
            const = float(np.sum(self.area[dead & (base != 0)]))
            # indicator(x != 0) >= |x| / M on the bounded box
            w = self.area[live] / self.M
        nf = len(free_idx)
        if nf == 0:
            return const, np.zeros(0)
        nl = int(live.sum())
        Zl, bl = Zf[live], base[live]
        # variables [k (nf), t (nl)]; t >= +-(bl + Zl k); |bl + Zl k| <= M
        I = np.eye(nl)
        A = np.block([[Zl, -I], [-Zl, -I], [Zl, np.zeros((nl, nl))], [-Zl, np.zeros((nl, nl))]])
        b = np.concatenate([-bl, bl, self.M - bl, self.M + bl])
        c = np.concatenate([np.zeros(nf), w])
        bounds = [(None, None)] * nf + [(0, None)] * nl
        res = self._linprog(c, A, b, bounds)
        if res.status != 0:
            return math.inf, None
        return const + float(res.fun), res.x[:nf]

    # -- exact evaluation ----------------------------------------------------

    def _value(self, u: np.ndarray) -> float:
        t = u[: self.n_t]
        a = self.area[: self.n_t]
        total = 0.0
        # fixed cell-id order keeps the float sum reproducible
        if self.p.objective == "mass":
            for j in np.flatnonzero(t):
                total += abs(int(t[j])) * float(a[j])
        else:
            for j in np.flatnonzero(t):
                total += float(a[j])
        return total

    def _leaf(self, k: np.ndarray):
        self.stats["leaves"] += 1
        u = self.u0 + self.Z @ k
        if np.any(np.abs(u) > self.M) or np.any(self.required & (u == 0)):
            return
        val = self._value(u)
        key = tuple(int(x) for x in u)
        if self.best_val is None or val < self.best_val - self._tol(val):
            self.best_val, self.best_key = val, key
        elif abs(val - self.best_val) <= self._tol(val) and key < self.best_key:
            self.best_val, self.best_key = val, key

    @staticmethod
    def _tol(val: float) -> float:
        return 1e-9 * max(1.0, abs(val))

    def _dfs(self, fixed: dict[int, int], depth: int) -> None:
        if self.stats["nodes"] >= self.p.node_budget:
            self.exhausted = False
            return
        self.stats["nodes"] += 1
        lb, kstar = self._bound(fixed)
        if math.isinf(lb):
            self.stats["pruned_infeasible"] += 1
            return
        if self.best_val is not None and lb > self.best_val + self._tol(self.best_val):
            self.stats["pruned_by_bound"] += 1
            return
        if depth == self.r:
            self._leaf(np.array([fixed[i] for i in range(self.r)], dtype=np.int64))
            return
        rng = self._range(fixed, depth)
        if rng is None or rng[0] > rng[1]:
            self.stats["pruned_infeasible"] += 1
            return
        guess = float(kstar[0]) if kstar is not None and len(kstar) else 0.0
        values = sorted(range(rng[0], rng[1] + 1), key=lambda v: (abs(v - guess), v))
        for v in values:
            fixed[depth] = v
            self._dfs(fixed, depth + 1)
            del fixed[depth]

    def run(self) -> ChainSolution:
        p = self.p
        cx = p.complex
        diag = Diagonalization(self.rows, len(self.cols))
        u0 = diag.solve(self.rhs)
        cert = {"kernel_rank": 0, "exhaustive": False, "objective": p.objective,
                "mode": p.mode, "M": self.M, "n_unknowns": len(self.cols)}
        if u0 is None:
            cert["reason"] = "no integer chain has this boundary"
            return ChainSolution("infeasible", certificate=cert)
        kb = diag.kernel_basis()
        self.u0 = np.array(u0, dtype=np.int64)
        self.Z = (np.array(kb, dtype=np.int64).T if kb
                  else np.zeros((len(self.cols), 0), dtype=np.int64))
        self.r = self.Z.shape[1]
        cert["kernel_rank"] = self.r
        self.best_val, self.best_key = None, None
        self.exhausted = True
        self._dfs({}, 0)
        cert.update(self.stats)
        cert["exhaustive"] = self.exhausted
        if self.best_key is None:
            if not self.exhausted:
                cert["reason"] = "node budget exhausted before any feasible chain was found"
                return ChainSolution("budget_exhausted", certificate=cert)
            cert["reason"] = f"no chain with this boundary has all multiplicities within M = {self.M}"
            return ChainSolution("infeasible", certificate=cert)
        u = self.best_key
        T = Chain(cx, 2, {self.t_cols[j]: u[j] for j in range(self.n_t) if u[j]})
        V = None
        if self.v_cols:
            V = Chain(cx, 2, {self.v_cols[j]: u[self.n_t + j] for j in range(len(self.v_cols))
                              if u[self.n_t + j]})
        meas = CellMeasures.of(cx)
        status = "optimal" if self.exhausted else "budget_exhausted"
        return ChainSolution(status, T, V, self.best_val, mass(T, meas), size(T, meas), cert)


def solve(problem: PlateauChainProblem) -> ChainSolution:
    sol = _Search(problem).run()
    if sol.chain is not None:
        rep = verify_chain(problem, sol.chain, sol.v_chain)
        if not rep.ok:
            raise AssertionError("internal error: solver output failed verification")
        sol.certificate["verified"] = True
    return sol


def solve_mass_min(problem: PlateauChainProblem) -> ChainSolution:
    return solve(dataclasses.replace(problem, objective="mass"))


def solve_size_min(problem: PlateauChainProblem) -> ChainSolution:
    return solve(dataclasses.replace(problem, objective="size"))


def verify_chain(problem: PlateauChainProblem, chain: Chain, v_chain: Chain | None = None
                 ) -> ChainReport:
    """Exact check of the boundary condition, the multiplicity bound and the support rules."""
    cx = problem.complex
    if chain.complex is not cx and chain.complex != cx:
        raise ChainError("chain lives on a different complex")
    if chain.dim != 2:
        raise ChainError("a solution must be a 2-chain")
    S = problem.boundary
    diff = S - boundary(chain)
    V = v_chain
    if problem.mode == "homologous" and diff:
        if V is None:
            V = solve_boundary(diff, cx, 0, problem.v_cells) if problem.v_cells else None
        if V is not None:
            if not set(V.coeffs) <= set(problem.v_cells):
                raise ChainError("homology witness leaves Gamma")
            diff = diff - boundary(V)
    free = set(problem.free_edges)
    residual = Chain(cx, 1, {e: c for e, c in diff.coeffs.items() if e not in free})
    meas = CellMeasures.of(cx)
    mx = max((abs(c) for c in chain.coeffs.values()), default=0)
    within = mx <= problem.M and (V is None or all(abs(c) <= problem.M for c in V.coeffs.values()))
    allowed = set(problem.support_cells)
    req_ok = all(chain.coeffs.get(c, 0) != 0 for c in problem.required)
    ok = (not residual) and within and req_ok and set(chain.coeffs) <= allowed
    return ChainReport(ok=ok, residual=residual, mass=mass(chain, meas), size=size(chain, meas),
                       support=chain.support(), max_multiplicity=mx, within_bound=within,
                       required_ok=req_ok, v_chain=V)
