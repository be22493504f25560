"""Dense linear programming.

``solve`` is a two-phase tableau simplex using Bland's rule, so it always
terminates and is fully deterministic.  ``enumerate_bfs_optimum`` is a
brute-force oracle that visits every basis and shares no code with the
simplex path.

Every program has the form::

    maximize  c . z
    s.t.      A z  = b
              G z >= h

with ``z`` free.  Rows of ``G`` that are plain sign constraints ``a z_j >= 0``
(``a > 0``) are recognised and turned into variable bounds instead of slack
rows, which keeps the tableau small for the conic programs built elsewhere.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from gptd.errors import CapExceededError, DimensionError, IterationLimitError, SolverError

DEFAULT_TOL = 1e-9
PIVOT_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def _matrix(m, n: int, name: str) -> np.ndarray:
    if m is None:
        return np.zeros((0, n))
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return np.zeros((0, n))
    if m.ndim != 2 or m.shape[1] != n:
        raise DimensionError(f"{name} has shape {m.shape}, expected (*, {n})")
    return m


@dataclass(frozen=True)
class LinearProgram:
    """maximize ``objective . z`` s.t. ``eq_matrix z = eq_rhs``, ``ineq_matrix z >= ineq_rhs``."""

    objective: np.ndarray
    eq_matrix: np.ndarray | None = None
    eq_rhs: np.ndarray | None = None
    ineq_matrix: np.ndarray | None = None
    ineq_rhs: np.ndarray | None = None

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        if c.ndim != 1:
            raise DimensionError("objective must be a vector")
        n = c.size
        A = _matrix(self.eq_matrix, n, "eq_matrix")
        G = _matrix(self.ineq_matrix, n, "ineq_matrix")
        b = np.zeros(0) if self.eq_rhs is None else np.asarray(self.eq_rhs, dtype=float).ravel()
        h = np.zeros(0) if self.ineq_rhs is None else np.asarray(self.ineq_rhs, dtype=float).ravel()
        if b.size != A.shape[0]:
            raise DimensionError(f"eq_rhs has {b.size} entries for {A.shape[0]} rows")
        if h.size != G.shape[0]:
            raise DimensionError(f"ineq_rhs has {h.size} entries for {G.shape[0]} rows")
        for name, value in (("objective", c), ("eq_matrix", A), ("eq_rhs", b),
                            ("ineq_matrix", G), ("ineq_rhs", h)):
            if not np.all(np.isfinite(value)):
                raise DimensionError(f"{name} has non-finite entries")
            object.__setattr__(self, name, _readonly(value))

    @property
    def var_count(self) -> int:
        return self.objective.size

    def violation(self, z) -> float:
        """Largest constraint violation of ``z`` (0 when feasible)."""
        z = np.asarray(z, dtype=float)
        if z.shape != (self.var_count,):
            raise DimensionError(f"point has shape {z.shape}, expected ({self.var_count},)")
        worst = 0.0
        if self.eq_rhs.size:
            worst = max(worst, float(np.abs(self.eq_matrix @ z - self.eq_rhs).max()))
        if self.ineq_rhs.size:
            worst = max(worst, float(np.max(self.ineq_rhs - self.ineq_matrix @ z, initial=0.0)))
        return worst


@dataclass(frozen=True)
class LpSolution:
    status: str
    primal_point: np.ndarray | None
    objective_value: float
    tight_set: tuple[int, ...] = ()
    iterations: int = 0
    pivots: int = 0
    max_reduced_cost: float = float("nan")
    stats: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def _tight_set(lp: LinearProgram, z: np.ndarray, tol: float) -> tuple[int, ...]:
    if not lp.ineq_rhs.size:
        return ()
    slack = lp.ineq_matrix @ z - lp.ineq_rhs
    scale = 1.0 + np.abs(lp.ineq_rhs)
    return tuple(int(i) for i in np.flatnonzero(np.abs(slack) <= tol * scale))


# --------------------------------------------------------------------------
# simplex


@dataclass
class _StandardForm:
    """``max c y, A y = b, y >= 0`` together with the map back to ``z``."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    to_z: np.ndarray  # z = to_z @ y[:to_z.shape[1]]
    n_struct: int
    slack_rows: np.ndarray  # slack column k sits in row slack_rows[k]


def _standard_form(lp: LinearProgram) -> _StandardForm:
    n = lp.var_count
    G, h = lp.ineq_matrix, lp.ineq_rhs
    nonneg = np.zeros(n, dtype=bool)
    bound_row = np.zeros(h.size, dtype=bool)
    for i, row in enumerate(G):
        nz = np.flatnonzero(row)
        if nz.size == 1 and row[nz[0]] > 0 and h[i] == 0:
            nonneg[nz[0]] = True
            bound_row[i] = True

    columns = []
    for j in range(n):
        columns.append((j, 1.0))
        if not nonneg[j]:
            columns.append((j, -1.0))
    to_z = np.zeros((n, len(columns)))
    for k, (j, sign) in enumerate(columns):
        to_z[j, k] = sign

    G_rest, h_rest = G[~bound_row], h[~bound_row]
    m_eq, m_in = lp.eq_rhs.size, h_rest.size
    n_struct = len(columns)
    A = np.zeros((m_eq + m_in, n_struct + m_in))
    A[:m_eq, :n_struct] = lp.eq_matrix @ to_z
    A[m_eq:, :n_struct] = G_rest @ to_z
    A[m_eq:, n_struct:] = -np.eye(m_in)
    b = np.concatenate([lp.eq_rhs, h_rest])
    c = np.zeros(n_struct + m_in)
    c[:n_struct] = lp.objective @ to_z
    return _StandardForm(A, b, c, to_z, n_struct, np.arange(m_eq, m_eq + m_in))


class _Budget:
    def __init__(self, cap: int):
        self.cap = cap
        self.iterations = 0
        self.pivots = 0

    def tick(self):
        self.iterations += 1
        if self.iterations > self.cap:
            raise IterationLimitError(f"simplex exceeded {self.cap} iterations")


def _pivot(T: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    factors = T[:, col].copy()
    factors[row] = 0.0
    T -= np.outer(factors, T[row])
    T[:, col] = 0.0
    T[row, col] = 1.0
    rhs = T[:, -1]
    rhs[(rhs < 0) & (rhs > -PIVOT_TOL)] = 0.0


def _reduced_costs(T: np.ndarray, basis: list[int], cost: np.ndarray) -> np.ndarray:
    rc = cost - cost[basis] @ T[:, :-1]
    rc[basis] = 0.0
    return rc


def _simplex(T, basis, cost, allowed, tol, budget) -> str:
    """Maximise ``cost . y`` from a feasible tableau using Bland's rule."""
    while True:
        rc = _reduced_costs(T, basis, cost)
        entering = np.flatnonzero((rc > tol) & allowed)
        if entering.size == 0:
            return OPTIMAL
        budget.tick()
        col = int(entering[0])
        column = T[:, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if rows.size == 0:
            return UNBOUNDED
        ratios = T[rows, -1] / column[rows]
        ties = rows[ratios <= ratios.min() + tol]
        row = int(min(ties, key=lambda i: basis[i]))
        _pivot(T, row, col)
        budget.pivots += 1
        basis[row] = col


def solve(lp: LinearProgram, tol: float = DEFAULT_TOL,
          max_iterations: int | None = None) -> LpSolution:
    """Solve ``lp`` and return a verified basic optimum or a failure status.

    Raises ``IterationLimitError`` when the iteration cap (by default
    ``10 * (rows + cols)**2`` of the standard form) is hit and ``SolverError`` when the final basis
    fails its own optimality or feasibility check.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    sf = _standard_form(lp)
    A, b = sf.A.copy(), sf.b.copy()
    m, ncols = A.shape
    budget = _Budget(10 * (m + ncols) ** 2 if max_iterations is None else max_iterations)

    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1

    # an inequality row whose sign was flipped owns a +1 slack: start with it basic
    basis = [-1] * m
    for k, row in enumerate(sf.slack_rows):
        if flip[row]:
            basis[row] = sf.n_struct + k
    need_art = [i for i in range(m) if basis[i] < 0]
    n_art = len(need_art)
    T = np.zeros((m, ncols + n_art + 1))
    T[:, :ncols] = A
    T[:, -1] = b
    for k, i in enumerate(need_art):
        T[i, ncols + k] = 1.0
        basis[i] = ncols + k

    feas_tol = tol * max(1.0, float(np.abs(b).sum()))
    if n_art:
        cost1 = np.zeros(ncols + n_art)
        cost1[ncols:] = -1.0
        _simplex(T, basis, cost1, np.ones(ncols + n_art, dtype=bool), tol, budget)
        infeasibility = float(T[[i for i in range(m) if basis[i] >= ncols], -1].sum())
        if infeasibility > feas_tol:
            return LpSolution(INFEASIBLE, None, float("nan"), iterations=budget.iterations,
                              pivots=budget.pivots, stats={"infeasibility": infeasibility})
        keep = []
        for i in range(m):
            if basis[i] < ncols:
                keep.append(i)
                continue
            candidates = np.flatnonzero(np.abs(T[i, :ncols]) > PIVOT_TOL)
            candidates = [j for j in candidates if j not in basis]
            if candidates:
                _pivot(T, i, int(candidates[0]))
                budget.pivots += 1
                basis[i] = int(candidates[0])
                keep.append(i)
            # otherwise the row is redundant and is dropped
        T = np.delete(T[keep], np.s_[ncols:ncols + n_art], axis=1)
        basis = [basis[i] for i in keep]
        A, b = A[keep], b[keep]

    status = _simplex(T, basis, sf.c, np.ones(ncols, dtype=bool), tol, budget)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, None, float("inf"), iterations=budget.iterations,
                          pivots=budget.pivots)

    # recompute the basic point and duals from the original data
    y = np.zeros(ncols)
    if basis:
        B = A[:, basis]
        try:
            y[basis] = np.linalg.solve(B, b)
            duals = np.linalg.solve(B.T, sf.c[basis])
            rc = sf.c - A.T @ duals
        except np.linalg.LinAlgError:
            y[basis] = T[:, -1]
            rc = _reduced_costs(T, basis, sf.c)
    else:
        rc = sf.c.copy()
    rc[basis] = 0.0
    max_rc = float(rc.max(initial=0.0))

    z = sf.to_z @ y[:sf.n_struct]
    violation = max(lp.violation(z), float(-y.min(initial=0.0)))
    if max_rc > tol or violation > feas_tol:
        raise SolverError(
            f"final basis failed verification (reduced cost {max_rc:.2e}, violation {violation:.2e})"
        )
    return LpSolution(
        OPTIMAL,
        _readonly(z),
        float(lp.objective @ z),
        _tight_set(lp, z, tol),
        iterations=budget.iterations,
        pivots=budget.pivots,
        max_reduced_cost=max_rc,
        stats={"basis": tuple(int(j) for j in basis), "rows": m, "cols": ncols},
    )


# --------------------------------------------------------------------------
# exhaustive oracle


def _independent_rows(A: np.ndarray, tol: float) -> list[int]:
    rows: list[int] = []
    for i in range(A.shape[0]):
        trial = rows + [i]
        if np.linalg.matrix_rank(A[trial], tol=tol * max(1.0, np.abs(A).max())) == len(trial):
            rows = trial
    return rows


def count_bases(lp: LinearProgram, tol: float = DEFAULT_TOL) -> int:
    """Number of candidate bases ``enumerate_bfs_optimum`` would examine."""
    k = lp.var_count - len(_independent_rows(lp.eq_matrix, tol))
    p = lp.ineq_rhs.size
    return math.comb(p, k) if 0 <= k <= p else 0


def enumerate_bfs_optimum(lp: LinearProgram, cap: int = 10**6, tol: float = DEFAULT_TOL,
                          chunk: int = 4096) -> LpSolution:
    """Best basic feasible solution found by trying every basis.

    A basis is a maximal independent set of equality rows plus
    ``var_count - rank`` inequality rows, all held active.  Raises
    ``CapExceededError`` before doing any work if there are more than ``cap``
    candidates.  Unbounded programs are not detected: only vertices are
    compared.
    """
    A, b, G, h, c = lp.eq_matrix, lp.eq_rhs, lp.ineq_matrix, lp.ineq_rhs, lp.objective
    n = lp.var_count
    rows = _independent_rows(A, tol)
    A_sel, b_sel = A[rows], b[rows]
    k = n - len(rows)
    p = h.size
    total = math.comb(p, k) if 0 <= k <= p else 0
    if total > cap:
        raise CapExceededError(total, cap)

    ftol = tol * (1.0 + max(np.abs(b).max(initial=0.0), np.abs(h).max(initial=0.0)))
    best_val, best_z, feasible = -np.inf, None, 0
    combos = itertools.combinations(range(p), k)
    while True:
        block = list(itertools.islice(combos, chunk))
        if not block:
            break
        idx = np.array(block, dtype=int).reshape(len(block), k)
        nb = idx.shape[0]
        M = np.concatenate([np.broadcast_to(A_sel, (nb, len(rows), n)), G[idx]], axis=1)
        rhs = np.concatenate([np.broadcast_to(b_sel, (nb, len(rows))), h[idx]], axis=1)
        if n == 0:
            continue
        sv = np.linalg.svd(M, compute_uv=False)
        ok = sv[:, -1] > 1e-10 * np.maximum(sv[:, 0], 1e-300)
        if not ok.any():
            continue
        Z = np.linalg.solve(M[ok], rhs[ok][..., None])[..., 0]
        good = np.ones(Z.shape[0], dtype=bool)
        if b.size:
            good &= np.abs(Z @ A.T - b).max(axis=1) <= ftol
        if h.size:
            good &= (Z @ G.T - h).min(axis=1) >= -ftol
        feasible += int(good.sum())
        if not good.any():
            continue
        vals = np.where(good, Z @ c, -np.inf)
        j = int(np.argmax(vals))
        if vals[j] > best_val + tol:
            best_val, best_z = float(vals[j]), Z[j]

    stats = {"bases_examined": total, "feasible_bases": feasible}
    if best_z is None:
        return LpSolution(INFEASIBLE, None, float("nan"), stats=stats)
    return LpSolution(OPTIMAL, _readonly(best_z), float(c @ best_z),
                      _tight_set(lp, best_z, tol), stats=stats)
