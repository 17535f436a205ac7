"""Small dense linear-programming kernel.

Two-phase tableau simplex with Bland's smallest-index rule, so every solve
pivots the same way on every machine. Problems with many more rows than
variables (core-type LPs with one row per coalition) are solved through
their dual, which keeps the tableau narrow.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapacityError, LPError, ShapeError, ValidationError

MAX_CONSTRAINTS = 20_000
MAX_VARIABLES = 5_000
PIVOT_TOL = 1e-9
FEAS_TOL = 1e-7

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass
class LinearProgram:
    """``min`` (or ``max``) ``c @ x`` s.t. ``A_ge @ x >= b_ge``, ``A_eq @ x == b_eq``, bounds.

    ``bounds`` holds one ``(lower, upper)`` pair per variable; ``None`` means
    unbounded on that side. The default is ``x >= 0``.
    """

    c: np.ndarray
    A_ge: np.ndarray | None = None
    b_ge: np.ndarray | None = None
    A_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    bounds: list | None = None
    maximize: bool = False

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A_ge, self.b_ge = _rows(self.A_ge, self.b_ge, n, "A_ge")
        self.A_eq, self.b_eq = _rows(self.A_eq, self.b_eq, n, "A_eq")
        for name in ("c", "A_ge", "b_ge", "A_eq", "b_eq"):
            if not np.all(np.isfinite(getattr(self, name))):
                raise ValidationError(f"LP field {name} has non-finite entries")
        if self.bounds is None:
            self.bounds = [(0.0, None)] * n
        if len(self.bounds) != n:
            raise ShapeError(f"{len(self.bounds)} bounds for {n} variables")
        lo = np.array([-np.inf if b[0] is None else float(b[0]) for b in self.bounds])
        hi = np.array([np.inf if b[1] is None else float(b[1]) for b in self.bounds])
        if np.any(lo > hi) or np.any(lo == np.inf) or np.any(hi == -np.inf):
            raise ValidationError("inconsistent variable bounds")
        self._lo, self._hi = lo, hi

    @property
    def num_variables(self) -> int:
        return self.c.size

    @property
    def num_constraints(self) -> int:
        return self.b_ge.size + self.b_eq.size


def _rows(A, b, n, name):
    if A is None:
        return np.zeros((0, n)), np.zeros(0)
    A = np.atleast_2d(np.asarray(A, dtype=float))
    b = np.asarray(b, dtype=float).ravel()
    if A.shape != (b.size, n):
        raise ShapeError(f"{name} has shape {A.shape}; expected ({b.size}, {n})")
    return A, b


@dataclass
class LPResult:
    status: str
    x: np.ndarray | None = None
    value: float | None = None
    duals_ge: np.ndarray | None = None  # d(optimum)/d(b_ge)
    duals_eq: np.ndarray | None = None  # d(optimum)/d(b_eq)
    iterations: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == OPTIMAL


def _pivot(T, r, j):
    T[r] /= T[r, j]
    col = T[:, j].copy()
    col[r] = 0.0
    T -= np.outer(col, T[r])


def _run(T, basis, allowed, max_iter):
    """Bland-rule pivots on tableau T until optimal or unbounded."""
    m = T.shape[0] - 1
    it = 0
    while True:
        red = T[m, :allowed]
        cand = np.flatnonzero(red < -PIVOT_TOL)
        if cand.size == 0:
            return OPTIMAL, it
        j = int(cand[0])
        col = T[:m, j]
        rows = np.flatnonzero(col > PIVOT_TOL)
        if rows.size == 0:
            return UNBOUNDED, it
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
        r = int(tied[np.argmin(basis[tied])])
        _pivot(T, r, j)
        basis[r] = j
        it += 1
        if it > max_iter:
            raise LPError(f"simplex exceeded {max_iter} pivots")


def simplex_standard(A, b, cost, max_iter: int | None = None):
    """Solve ``min cost @ x`` s.t. ``A @ x == b``, ``x >= 0``.

    Returns ``(status, x, row_duals, value, pivots)`` where ``row_duals``
    are the sensitivities of the optimum to ``b``.
    """
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    cost = np.asarray(cost, dtype=float)
    m, n = A.shape
    flip = b < 0
    A[flip] *= -1.0
    b[flip] *= -1.0
    if max_iter is None:
        max_iter = 50_000 + 20 * (m + n)

    T = np.zeros((m + 1, n + m + 1))
    T[:m, :n] = A
    T[:m, n:n + m] = np.eye(m)
    T[:m, -1] = b
    T[m, :n] = -A.sum(axis=0)
    T[m, -1] = -b.sum()
    basis = np.arange(n, n + m)

    status, it1 = _run(T, basis, n, max_iter)
    if -T[m, -1] > FEAS_TOL * max(1.0, float(np.abs(b).max(initial=0.0))):
        return INFEASIBLE, None, None, None, it1

    # Move leftover artificials out of the basis where a real column allows it.
    for r in range(m):
        if basis[r] >= n:
            nz = np.flatnonzero(np.abs(T[r, :n]) > PIVOT_TOL)
            if nz.size:
                _pivot(T, r, int(nz[0]))
                basis[r] = int(nz[0])

    full_cost = np.concatenate([cost, np.zeros(m)])
    T[m, :] = 0.0
    T[m, :n] = cost
    T[m] -= full_cost[basis] @ T[:m]
    status, it2 = _run(T, basis, n, max_iter)
    if status == UNBOUNDED:
        return UNBOUNDED, None, None, None, it1 + it2

    x = np.zeros(n)
    real = basis < n
    x[basis[real]] = T[:m, -1][real]
    x = np.clip(x, 0.0, None)
    duals = -T[m, n:n + m]
    duals[flip] *= -1.0
    return OPTIMAL, x, duals, float(cost @ x), it1 + it2


def lp_solve(lp: LinearProgram) -> LPResult:
    """Solve ``lp``; never returns a silently wrong answer.

    The returned ``x`` is re-checked against the original constraints and a
    :class:`LPError` is raised if it misses them by more than the tolerance.
    """
    if lp.num_constraints > MAX_CONSTRAINTS or lp.num_variables > MAX_VARIABLES:
        raise CapacityError(f"LP with {lp.num_constraints} constraints and "
                            f"{lp.num_variables} variables exceeds the kernel caps")
    sense = -1.0 if lp.maximize else 1.0
    n = lp.num_variables

    # Map x = offset + M @ y with y >= 0.
    offset = np.zeros(n)
    cols, bound_rows, bound_rhs = [], [], []
    for j in range(n):
        lo, hi = lp._lo[j], lp._hi[j]
        if np.isfinite(lo):
            offset[j] = lo
            cols.append((j, 1.0))
            if np.isfinite(hi):
                bound_rows.append(len(cols) - 1)
                bound_rhs.append(-(hi - lo))
        elif np.isfinite(hi):
            offset[j] = hi
            cols.append((j, -1.0))
        else:
            cols.append((j, 1.0))
            cols.append((j, -1.0))
    M = np.zeros((n, len(cols)))
    for i, (j, s) in enumerate(cols):
        M[j, i] = s
    ny = M.shape[1]

    G = lp.A_ge @ M
    h = lp.b_ge - lp.A_ge @ offset
    if bound_rows:
        B = np.zeros((len(bound_rows), ny))
        B[np.arange(len(bound_rows)), bound_rows] = -1.0
        G = np.vstack([G, B])
        h = np.concatenate([h, bound_rhs])
    E = lp.A_eq @ M
    e = lp.b_eq - lp.A_eq @ offset
    cy = sense * (M.T @ lp.c)
    mg, me = G.shape[0], E.shape[0]

    if mg + me <= 2 * ny:
        A = np.block([[G, -np.eye(mg)], [E, np.zeros((me, mg))]]) if mg + me else np.zeros((0, ny))
        cost = np.concatenate([cy, np.zeros(mg)])
        status, sol, duals, _, its = simplex_standard(A, np.concatenate([h, e]), cost)
        if status != OPTIMAL:
            return LPResult(status, iterations=its)
        y = sol[:ny]
        z_ge, z_eq = duals[:mg], duals[mg:]
        route = "primal"
    else:
        # Dual: max h@zg + e@(zp - zm) s.t. G'zg + E'(zp - zm) + w = cy, all >= 0.
        D = np.hstack([G.T, E.T, -E.T, np.eye(ny)])
        obj = -np.concatenate([h, e, -e, np.zeros(ny)])
        status, sol, duals, _, its = simplex_standard(D, cy, obj)
        if status == UNBOUNDED:
            return LPResult(INFEASIBLE, iterations=its)
        if status == INFEASIBLE:
            feasible, its2 = _primal_feasible(G, h, E, e)
            return LPResult(UNBOUNDED if feasible else INFEASIBLE, iterations=its + its2)
        y = np.clip(-duals, 0.0, None)
        z_ge = sol[:mg]
        z_eq = sol[mg:mg + me] - sol[mg + me:mg + 2 * me]
        route = "dual"

    x = offset + M @ y
    _verify(lp, x)
    value = float(lp.c @ x)
    return LPResult(OPTIMAL, x, value, sense * z_ge[:lp.b_ge.size], sense * z_eq,
                    its, {"route": route})


def _primal_feasible(G, h, E, e):
    # Farkas: {Gy >= h, Ey = e, y >= 0} is empty iff some z has
    # G'zg + E'ze <= 0, zg >= 0 and h@zg + e@ze > 0.
    mg, me = G.shape[0], E.shape[0]
    ny = G.shape[1]
    D = np.hstack([G.T, E.T, -E.T, np.eye(ny), np.zeros((ny, 1))])
    norm = np.concatenate([np.ones(mg + 2 * me), np.zeros(ny), [1.0]])
    A = np.vstack([D, norm])
    b = np.concatenate([np.zeros(ny), [1.0]])
    obj = -np.concatenate([h, e, -e, np.zeros(ny), [0.0]])
    status, _, _, val, its = simplex_standard(A, b, obj)
    if status != OPTIMAL:
        raise LPError("feasibility certificate LP did not solve")
    return val > -FEAS_TOL, its


def _verify(lp: LinearProgram, x: np.ndarray):
    def slack_tol(b):
        return FEAS_TOL * (1.0 + np.abs(b))

    if lp.b_ge.size and np.any(lp.A_ge @ x < lp.b_ge - 10 * slack_tol(lp.b_ge)):
        raise LPError("simplex returned a point violating an inequality row")
    if lp.b_eq.size and np.any(np.abs(lp.A_eq @ x - lp.b_eq) > 10 * slack_tol(lp.b_eq)):
        raise LPError("simplex returned a point violating an equality row")
    if np.any(x < lp._lo - FEAS_TOL) or np.any(x > lp._hi + FEAS_TOL):
        raise LPError("simplex returned a point outside the variable bounds")
