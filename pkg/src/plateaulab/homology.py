"""Integer and Z/p solvability of boundary equations, Reifenberg admissibility.

The linear algebra is a sparse unimodular diagonalisation U A V = D of the
boundary matrix (Smith-style pivoting on the smallest entry), which decides
integrality of solutions exactly and yields an integer kernel basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .complex_core import Chain, ChainError, SimplicialComplex, boundary


def _sparse_boundary(cx: SimplicialComplex, k: int, columns: Sequence[int] | None = None):
    """Rows of the k-boundary matrix as dicts, restricted to ``columns`` (k-cell ids)."""
    cols = range(cx.n_cells(k)) if columns is None else columns
    rows: list[dict[int, int]] = [dict() for _ in range(cx.n_cells(k - 1))]
    for j, cid in enumerate(cols):
        s = cx.cells[k][cid]
        for i in range(len(s)):
            f = s[:i] + s[i + 1:]
            rows[cx._index[k - 1][f]][j] = (-1) ** i
    return rows


class Diagonalization:
    """U A V = D for a sparse integer matrix, or a field reduction mod ``modulus``.

    Row operations are logged and replayed on right-hand sides; V is kept as
    sparse columns.
    """

    def __init__(self, rows: list[dict[int, int]], ncols: int, modulus: int = 0):
        self.m = len(rows)
        self.n = ncols
        self.modulus = modulus
        p = modulus
        self.rows = [{j: (v % p if p else v) for j, v in r.items() if (v % p if p else v)}
                     for r in rows]
        self.cols: list[set[int]] = [set() for _ in range(ncols)]
        for i, r in enumerate(self.rows):
            for j in r:
                self.cols[j].add(i)
        self.V: list[dict[int, int]] = [{j: 1} for j in range(ncols)]
        self.row_ops: list[tuple[int, int, int]] = []   # row_i += q * row_r
        self.pivots: list[tuple[int, int, int]] = []     # (row, col, value)
        self._run()

    # -- elementary operations -------------------------------------------

    def _norm(self, v: int) -> int:
        return v % self.modulus if self.modulus else v

    def _row_axpy(self, i: int, r: int, q: int) -> None:
        """row_i += q * row_r."""
        if not q:
            return
        ri = self.rows[i]
        for j, v in self.rows[r].items():
            nv = self._norm(ri.get(j, 0) + q * v)
            if nv:
                if j not in ri:
                    self.cols[j].add(i)
                ri[j] = nv
            elif j in ri:
                del ri[j]
                self.cols[j].discard(i)
        self.row_ops.append((i, r, q))

    def _col_axpy(self, j: int, c: int, q: int) -> None:
        """col_j += q * col_c (applied to A and to V)."""
        if not q:
            return
        for i in list(self.cols[c]):
            ri = self.rows[i]
            nv = self._norm(ri.get(j, 0) + q * ri[c])
            if nv:
                if j not in ri:
                    self.cols[j].add(i)
                ri[j] = nv
            elif j in ri:
                del ri[j]
                self.cols[j].discard(i)
        vj = self.V[j]
        for i, v in self.V[c].items():
            nv = self._norm(vj.get(i, 0) + q * v)
            if nv:
                vj[i] = nv
            else:
                vj.pop(i, None)

    def _scale_row(self, r: int, s: int) -> None:
        """Multiply row r by a unit s (only used over a field)."""
        for j in self.rows[r]:
            self.rows[r][j] = self._norm(self.rows[r][j] * s)
        self.row_ops.append((r, -1, s))

    # -- main loop -------------------------------------------------------

    def _pick(self, active_rows: set[int]) -> tuple[int, int] | None:
        best = None
        best_key = None
        for i in active_rows:
            for j, v in self.rows[i].items():
                key = (abs(v) if not self.modulus else 1,
                       len(self.rows[i]) * len(self.cols[j]), i, j)
                if best_key is None or key < best_key:
                    best_key, best = key, (i, j)
                    if key[0] == 1 and key[1] <= 2:
                        return best
        return best

    def _run(self) -> None:
        active_rows = {i for i in range(self.m) if self.rows[i]}
        p = self.modulus
        while True:
            active_rows = {i for i in active_rows if self.rows[i]}
            piv = self._pick(active_rows)
            if piv is None:
                break
            r, c = piv
            while True:
                a = self.rows[r][c]
                if p:
                    inv = pow(a, -1, p)
                    if a != 1:
                        self._scale_row(r, inv)
                        a = 1
                clean = True
                for i in sorted(self.cols[c] - {r}):
                    v = self.rows[i][c]
                    q = (v * pow(a, -1, p)) % p if p else v // a
                    self._row_axpy(i, r, -q)
                    if c in self.rows[i]:
                        clean = False
                for j in sorted(set(self.rows[r]) - {c}):
                    v = self.rows[r][j]
                    q = (v * pow(a, -1, p)) % p if p else v // a
                    self._col_axpy(j, c, -q)
                    if j in self.rows[r]:
                        clean = False
                if clean:
                    break
                # a remainder smaller than |a| survived: move it into the pivot slot
                cand = [(abs(self.rows[i][c]), i, c) for i in self.cols[c] if i != r]
                cand += [(abs(self.rows[r][j]), r, j) for j in self.rows[r] if j != c]
                _, r, c = min(cand)
            self.pivots.append((r, c, self.rows[r][c]))
            active_rows.discard(r)
            # retire pivot row/column from further pivot searches
            for j in list(self.rows[r]):
                self.cols[j].discard(r)
            self.rows[r] = {}
            self.cols[c] = set()

    # -- solving ---------------------------------------------------------

    @property
    def rank(self) -> int:
        return len(self.pivots)

    def apply_row_ops(self, b: Sequence[int]) -> list[int]:
        y = [self._norm(int(v)) for v in b]
        for i, r, q in self.row_ops:
            if r < 0:
                y[i] = self._norm(y[i] * q)
            else:
                y[i] = self._norm(y[i] + q * y[r])
        return y

    def solve(self, b: Sequence[int]) -> list[int] | None:
        """A particular solution of A x = b, or None if none exists over the ring."""
        ub = self.apply_row_ops(b)
        pivot_rows = {r for r, _, _ in self.pivots}
        if any(ub[i] for i in range(self.m) if i not in pivot_rows):
            return None
        y: dict[int, int] = {}
        p = self.modulus
        for r, c, d in self.pivots:
            if p:
                y[c] = (ub[r] * pow(d, -1, p)) % p
            else:
                if ub[r] % d:
                    return None
                y[c] = ub[r] // d
        x = [0] * self.n
        for c, yc in y.items():
            if yc:
                for i, v in self.V[c].items():
                    x[i] += v * yc
        return [self._norm(v) for v in x]

    def kernel_basis(self) -> list[list[int]]:
        pivot_cols = {c for _, c, _ in self.pivots}
        out = []
        for c in range(self.n):
            if c in pivot_cols:
                continue
            vec = [0] * self.n
            for i, v in self.V[c].items():
                vec[i] = v
            out.append(vec)
        return out


def solve_boundary(target: Chain, complex: SimplicialComplex | None = None,
                   ring: int = 0, cells: Sequence[int] | None = None) -> Chain | None:
    """Find a chain sigma with boundary(sigma) == target, or None if infeasible.

    ``ring`` is 0 for the integers or a prime p.  ``cells`` optionally restricts
    the support of sigma to the given (k)-cell ids.
    """
    cx = complex if complex is not None else target.complex
    if target.complex is not cx and target.complex != cx:
        raise ChainError("target chain lives on a different complex")
    if target.dim >= 1 and boundary(target.reduce(ring) if ring and not target.modulus else target):
        raise ChainError("target is not a cycle; a boundary must be a cycle")
    k = target.dim + 1
    cols = list(range(cx.n_cells(k))) if cells is None else sorted(cells)
    if not cols:
        return Chain.zero(cx, k, ring) if not target.coeffs else None
    diag = Diagonalization(_sparse_boundary(cx, k, cols), len(cols), ring)
    b = target.to_vector()
    x = diag.solve(b)
    if x is None:
        return None
    sigma = Chain(cx, k, {cols[j]: v for j, v in enumerate(x) if v}, ring)
    # independent re-check of the witness
    rhs = target.reduce(ring) if ring and not target.modulus else target
    if boundary(sigma) != rhs:
        raise AssertionError("internal error: witness does not bound the target")
    return sigma


@dataclass
class AdmissibilityProblem:
    """Candidate set F (a complex), boundary subcomplex Gamma, generator cycles."""

    complex: SimplicialComplex
    gamma_edges: frozenset[int]
    generators: dict[str, Chain]
    ring: int = 0
    cells: Sequence[int] | None = None   # 2-cells of F; default all

    def __post_init__(self):
        self.gamma_edges = frozenset(self.gamma_edges)
        for name, g in self.generators.items():
            if g.complex is not self.complex and g.complex != self.complex:
                raise ChainError(f"generator {name!r} lives on another complex")
            if g.dim >= 1 and boundary(g):
                raise ChainError(f"generator {name!r} is not a cycle")
            off = set(g.coeffs) - self.gamma_edges
            if g.dim == 1 and off:
                raise ChainError(f"generator {name!r} leaves Gamma on edges {sorted(off)[:5]}")


@dataclass
class AdmissibilityResult:
    admissible: bool
    witnesses: dict[str, Chain] = field(default_factory=dict)
    failed: list[str] = field(default_factory=list)


def reifenberg_admissible(problem: AdmissibilityProblem) -> AdmissibilityResult:
    """True iff every generator bounds a chain supported in F over the chosen ring."""
    res = AdmissibilityResult(admissible=True)
    for name, g in problem.generators.items():
        sigma = solve_boundary(g, problem.complex, problem.ring, problem.cells)
        if sigma is None:
            res.admissible = False
            res.failed.append(name)
        else:
            res.witnesses[name] = sigma
    if not res.admissible:
        res.witnesses = {}
    return res
