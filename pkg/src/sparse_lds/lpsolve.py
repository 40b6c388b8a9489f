"""Deterministic linear programming by a two-phase revised simplex method.

Dense numpy implementation sized for the few-hundred-variable programs this
package produces. Pricing is Dantzig's rule with a fixed lowest-index tie
break; after a run of degenerate pivots the solve switches permanently to
Bland's rule, which guarantees termination. Identical inputs always take the
identical pivot path, so solutions are reproducible bit for bit.

General-form problems (equalities, inequalities, per-variable bounds, free
variables) are converted internally to standard form by shifting and sign
splitting. Infeasible and unbounded are ordinary statuses; only a numerical
stall raises.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "FEASIBILITY_TOL",
    "OPTIMALITY_TOL",
    "LinearProgram",
    "LpSolution",
    "LpStatus",
    "SolverError",
    "solve_lp",
]

FEASIBILITY_TOL = 1e-8
OPTIMALITY_TOL = 1e-7

_PIVOT_TOL = 1e-10
_ACCEPT_TOL = 1e-6  # minimum pivot size relative to the column, else rejected
_ENTER_TOL = 1e-9  # tighter than the certified optimality tolerance
_STALL_LIMIT = 60
_REFACTOR_EVERY = 60
# rhs perturbation for heavily degenerate problems; removed before returning
_DEGENERATE_FRACTION = 0.25
_PERTURB_SCALE = 1e-11


class LpStatus(str, Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


class SolverError(RuntimeError):
    """Numerical stall or iteration cap; distinct from infeasible/unbounded."""


@dataclass
class LinearProgram:
    """min c.x  s.t.  a_eq x = b_eq,  a_ub x <= b_ub,  lower <= x <= upper.

    Bounds default to free variables; entries may be +-inf.
    """

    c: np.ndarray
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=np.float64).reshape(-1)
        n = self.c.shape[0]
        if not np.all(np.isfinite(self.c)):
            raise ValueError("objective coefficients must be finite")

        def _pair(a, b, name):
            if a is None and b is None:
                return None, None
            a = np.asarray(a, dtype=np.float64)
            a = a.reshape(0, n) if a.size == 0 else np.atleast_2d(a)
            b = np.asarray(b, dtype=np.float64).reshape(-1)
            if a.shape != (b.shape[0], n):
                raise ValueError(f"{name} constraint shapes are inconsistent")
            if a.size and not np.all(np.isfinite(a)) or (b.size and not np.all(np.isfinite(b))):
                raise ValueError(f"{name} constraint entries must be finite")
            return a, b

        self.a_eq, self.b_eq = _pair(self.a_eq, self.b_eq, "equality")
        self.a_ub, self.b_ub = _pair(self.a_ub, self.b_ub, "inequality")

        def _bound(v, fill):
            if v is None:
                return np.full(n, fill)
            v = np.asarray(v, dtype=np.float64).reshape(-1)
            if v.shape[0] != n:
                raise ValueError("bound length does not match variable count")
            return v

        self.lower = _bound(self.lower, -np.inf)
        self.upper = _bound(self.upper, np.inf)

    @property
    def num_vars(self) -> int:
        return self.c.shape[0]


@dataclass
class LpSolution:
    status: LpStatus
    x: np.ndarray
    objective_value: float
    max_constraint_violation: float
    dual_residual: float
    iterations: int


def _constraint_violation(lp: LinearProgram, x: np.ndarray) -> float:
    worst = 0.0
    if lp.a_eq is not None and lp.a_eq.shape[0]:
        worst = max(worst, float(np.abs(lp.a_eq @ x - lp.b_eq).max()))
    if lp.a_ub is not None and lp.a_ub.shape[0]:
        worst = max(worst, float(np.maximum(lp.a_ub @ x - lp.b_ub, 0.0).max()))
    worst = max(worst, float(np.maximum(lp.lower - x, 0.0).max(initial=0.0)))
    worst = max(worst, float(np.maximum(x - lp.upper, 0.0).max(initial=0.0)))
    return worst


def _non_optimal(status: LpStatus, lp: LinearProgram, iterations: int) -> LpSolution:
    obj = -np.inf if status is LpStatus.UNBOUNDED else np.nan
    return LpSolution(
        status=status,
        x=np.full(lp.num_vars, np.nan),
        objective_value=obj,
        max_constraint_violation=np.nan,
        dual_residual=np.nan,
        iterations=iterations,
    )


class _Simplex:
    """Revised simplex on min c.x s.t. A x = b, x >= 0 with b >= 0.

    `partner` marks sign-split column pairs (x = x+ - x-): a split column has
    true reduced cost exactly zero while its partner is basic, so it is barred
    from entering then; admitting it on reduced-cost roundoff would make the
    basis exactly singular.
    """

    def __init__(self, a: np.ndarray, b: np.ndarray, basis: np.ndarray, partner=None):
        self.a = np.ascontiguousarray(a)
        self.b = b
        self.rows, self.cols = a.shape
        self.basis = basis.copy()
        self.partner = partner
        # initial basis is always a selection of unit columns, so Binv = I
        self.binv = np.eye(self.rows)
        self.xb = b.copy()
        self.iterations = 0

    def refactor(self) -> None:
        bmat = self.a[:, self.basis]
        try:
            binv = np.linalg.inv(bmat)
        except np.linalg.LinAlgError as exc:
            raise SolverError("basis matrix became singular") from exc
        check = float(np.abs(bmat @ binv - np.eye(self.rows)).max())
        if not np.isfinite(check) or check > 1e-6:
            raise SolverError(f"basis matrix is numerically singular (residual {check:.2e})")
        self.binv = binv
        self.xb = np.maximum(self.binv @ self.b, 0.0)

    def _choose_row(self, d, ratios, bland: bool) -> int:
        """Leaving row for a computed ratio column.

        Default rule is a Harris-style two pass: relax the minimum ratio by a
        tiny feasibility slack, then take the best-conditioned pivot among the
        rows inside the relaxed window (ties by lowest basic index). Bland
        mode keeps the strict minimum-ratio window and picks the lowest basic
        index among acceptably sized pivots, which breaks cycling.
        """
        theta = ratios.min()
        if bland:
            tied = np.flatnonzero(ratios <= theta + 1e-12 * (1.0 + theta))
            dmax = np.abs(d[tied]).max()
            solid = tied[np.abs(d[tied]) >= max(_PIVOT_TOL, 1e-2 * dmax)]
            return int(solid[np.argmin(self.basis[solid])])
        active = np.isfinite(ratios)
        slack = 1e-10 * (1.0 + np.maximum(self.xb, 0.0))
        relaxed = np.full(self.rows, np.inf)
        relaxed[active] = (np.maximum(self.xb[active], 0.0) + slack[active]) / np.maximum(
            d[active], _PIVOT_TOL
        )
        window = relaxed.min()
        eligible = np.flatnonzero(active & (ratios <= window))
        best = np.abs(d[eligible]).max()
        solid = eligible[np.abs(d[eligible]) >= best * (1.0 - 1e-12)]
        return int(solid[np.argmin(self.basis[solid])])

    def run(self, costs, enterable, art_rows_guard, max_iter) -> LpStatus:
        """Pivot until optimal for `costs`. Returns OPTIMAL or UNBOUNDED."""
        scale = max(1.0, float(np.abs(costs).max()))
        enter_eps = _ENTER_TOL * scale
        bland = False
        stall = 0
        fresh = True
        rejected: set[int] = set()
        while True:
            self.iterations += 1
            if self.iterations > max_iter:
                raise SolverError(f"simplex exceeded {max_iter} iterations")
            if self.iterations % _REFACTOR_EVERY == 0 and not fresh:
                self.refactor()
                fresh = True

            y = costs[self.basis] @ self.binv
            rc = costs - y @ self.a
            rc[self.basis] = 0.0
            mask = (rc < -enter_eps) & enterable
            if self.partner is not None:
                is_basic = np.zeros(self.cols, dtype=bool)
                is_basic[self.basis] = True
                has_partner = self.partner >= 0
                mask[has_partner] &= ~is_basic[self.partner[has_partner]]
            if rejected:
                mask[list(rejected)] = False
            if not mask.any():
                if rejected and not fresh:
                    # improving columns existed but offered only degenerate
                    # pivots; retry them against a freshly factored basis
                    self.refactor()
                    fresh = True
                    rejected.clear()
                    continue
                return LpStatus.OPTIMAL
            candidates = np.flatnonzero(mask)
            if bland:
                j = int(candidates[0])
            else:
                j = int(candidates[np.argmin(rc[candidates])])

            d = self.binv @ self.a[:, j]
            pos = d > _PIVOT_TOL
            ratios = np.full(self.rows, np.inf)
            ratios[pos] = np.maximum(self.xb[pos], 0.0) / d[pos]
            if art_rows_guard is not None:
                # a basic artificial must never grow: force it out at step 0
                force = art_rows_guard[self.basis] & (np.abs(d) > _PIVOT_TOL)
                ratios[force] = 0.0
            if not np.isfinite(ratios).any():
                return LpStatus.UNBOUNDED
            r = self._choose_row(d, ratios, bland)
            theta = ratios[r]
            if abs(d[r]) < _ACCEPT_TOL * max(1.0, float(np.abs(d).max())):
                # every row in the ratio window pivots badly; skip this column
                rejected.add(j)
                continue

            step = max(theta, 0.0)
            if step <= _PIVOT_TOL:
                stall += 1
                if stall > _STALL_LIMIT:
                    bland = True
            else:
                stall = 0

            # pivot: variable j enters, row r leaves
            self.xb -= step * d
            self.xb[r] = step
            np.maximum(self.xb, 0.0, out=self.xb)
            piv = d[r]
            self.binv[r] /= piv
            other = np.arange(self.rows) != r
            self.binv[other] -= np.outer(d[other], self.binv[r])
            self.basis[r] = j
            fresh = False
            rejected.clear()


def _solve_unconstrained(lp: LinearProgram) -> LpSolution:
    """No constraint rows at all: each variable optimizes independently."""
    x = np.zeros(lp.num_vars)
    for j in range(lp.num_vars):
        lo, hi, cj = lp.lower[j], lp.upper[j], lp.c[j]
        if lo > hi:
            return _non_optimal(LpStatus.INFEASIBLE, lp, 0)
        if cj > 0:
            if not np.isfinite(lo):
                return _non_optimal(LpStatus.UNBOUNDED, lp, 0)
            x[j] = lo
        elif cj < 0:
            if not np.isfinite(hi):
                return _non_optimal(LpStatus.UNBOUNDED, lp, 0)
            x[j] = hi
        else:
            x[j] = lo if np.isfinite(lo) else (hi if np.isfinite(hi) else 0.0)
    return LpSolution(
        status=LpStatus.OPTIMAL,
        x=x,
        objective_value=float(lp.c @ x),
        max_constraint_violation=_constraint_violation(lp, x),
        dual_residual=0.0,
        iterations=0,
    )


def solve_lp(lp: LinearProgram, max_iter: int | None = None) -> LpSolution:
    """Solve a general-form linear program.

    Optimal solutions satisfy the original constraints within FEASIBILITY_TOL
    and carry a dual certificate (reduced costs) within OPTIMALITY_TOL.
    """
    n = lp.num_vars
    if np.any(lp.lower > lp.upper):
        return _non_optimal(LpStatus.INFEASIBLE, lp, 0)

    n_eq = lp.a_eq.shape[0] if lp.a_eq is not None else 0
    n_ub = lp.a_ub.shape[0] if lp.a_ub is not None else 0

    # shift/split variables so every standard-form variable is >= 0
    shift = np.zeros(n)
    col_var: list[int] = []
    col_sign: list[float] = []
    split_pairs: list[tuple[int, int]] = []
    box: list[tuple[int, float]] = []  # (std column, width) rows x_k <= width
    for j in range(n):
        lo, hi = lp.lower[j], lp.upper[j]
        if np.isinf(lo) and np.isinf(hi):
            split_pairs.append((len(col_var), len(col_var) + 1))
            col_var += [j, j]
            col_sign += [1.0, -1.0]
        elif np.isinf(hi):
            shift[j] = lo
            col_var.append(j)
            col_sign.append(1.0)
        elif np.isinf(lo):
            shift[j] = hi
            col_var.append(j)
            col_sign.append(-1.0)
        else:
            shift[j] = lo
            box.append((len(col_var), hi - lo))
            col_var.append(j)
            col_sign.append(1.0)
    col_var_arr = np.asarray(col_var, dtype=np.intp)
    col_sign_arr = np.asarray(col_sign)
    n_struct = len(col_var)

    rows = n_eq + n_ub + len(box)
    if rows == 0:
        return _solve_unconstrained(lp)

    a = np.zeros((rows, n_struct))
    b = np.zeros(rows)
    if n_eq:
        a[:n_eq] = lp.a_eq[:, col_var_arr] * col_sign_arr
        b[:n_eq] = lp.b_eq - lp.a_eq @ shift
    if n_ub:
        a[n_eq : n_eq + n_ub] = lp.a_ub[:, col_var_arr] * col_sign_arr
        b[n_eq : n_eq + n_ub] = lp.b_ub - lp.a_ub @ shift
    for i, (k, width) in enumerate(box):
        a[n_eq + n_ub + i, k] = 1.0
        b[n_eq + n_ub + i] = width

    # row and column equilibration for conditioning; solutions are mapped back
    row_scale = np.maximum(np.abs(a).max(axis=1, initial=0.0), 1e-12)
    np.maximum(row_scale, 1e-6 * row_scale.max(initial=1.0), out=row_scale)
    a /= row_scale[:, None]
    b /= row_scale
    col_scale = np.maximum(np.abs(a).max(axis=0, initial=0.0), 1e-8)
    a /= col_scale[None, :]

    is_ub_row = np.zeros(rows, dtype=bool)
    is_ub_row[n_eq:] = True
    flip = b < 0
    a[flip] *= -1.0
    b[flip] *= -1.0

    # slacks for inequality rows; artificials wherever no +1 slack is available
    slack_cols = int(np.count_nonzero(is_ub_row))
    needs_art = ~(is_ub_row & ~flip)
    art_count = int(np.count_nonzero(needs_art))
    total_cols = n_struct + slack_cols + art_count

    full = np.zeros((rows, total_cols))
    full[:, :n_struct] = a
    basis = np.empty(rows, dtype=np.intp)
    sk = 0
    for i in np.flatnonzero(is_ub_row):
        full[i, n_struct + sk] = -1.0 if flip[i] else 1.0
        if not flip[i]:
            basis[i] = n_struct + sk
        sk += 1
    ak = 0
    art_mask = np.zeros(total_cols, dtype=bool)
    for i in np.flatnonzero(needs_art):
        col = n_struct + slack_cols + ak
        full[i, col] = 1.0
        basis[i] = col
        art_mask[col] = True
        ak += 1

    if max_iter is None:
        max_iter = 2000 + 40 * (rows + total_cols)

    # a right-hand side full of zeros makes every vertex massively degenerate
    # and drives the walk through ill-conditioned bases; a tiny deterministic
    # perturbation breaks the ties. The true rhs is restored at the final
    # basis, whose dual (cost-side) optimality certificate is rhs-independent.
    perturbed = np.count_nonzero(b == 0.0) > _DEGENERATE_FRACTION * rows
    if perturbed:
        bump = _PERTURB_SCALE * max(1.0, float(np.abs(b).max()))
        b_solve = b + bump * (1.0 + np.arange(rows)) / rows
    else:
        b_solve = b

    partner = np.full(total_cols, -1, dtype=np.intp)
    for left, right in split_pairs:
        partner[left] = right
        partner[right] = left

    simplex = _Simplex(full, b_solve, basis, partner)

    # phase 1: drive artificial variables to zero
    if art_count:
        phase1_costs = np.zeros(total_cols)
        phase1_costs[art_mask] = 1.0
        status = simplex.run(phase1_costs, np.ones(total_cols, dtype=bool), None, max_iter)
        if status is not LpStatus.OPTIMAL:  # pragma: no cover - phase 1 is bounded
            raise SolverError("phase 1 terminated without an optimum")
        simplex.refactor()
        art_level = float(simplex.xb[art_mask[simplex.basis]].sum())
        if art_level > FEASIBILITY_TOL * max(1.0, float(np.abs(b).max())):
            return _non_optimal(LpStatus.INFEASIBLE, lp, simplex.iterations)
        # pivot out artificials stuck in the basis at level zero when possible
        for r in np.flatnonzero(art_mask[simplex.basis]):
            row = simplex.binv[r] @ simplex.a[:, :n_struct]
            pivots = np.flatnonzero(np.abs(row) > 1e-7)
            pivots = [j for j in pivots if j not in set(simplex.basis)]
            if pivots:
                j = int(pivots[0])
                d = simplex.binv @ simplex.a[:, j]
                simplex.binv[r] /= d[r]
                other = np.arange(simplex.rows) != r
                simplex.binv[other] -= np.outer(d[other], simplex.binv[r])
                simplex.basis[r] = j
                simplex.xb = np.maximum(simplex.binv @ simplex.b, 0.0)

    # phase 2: original objective; artificials barred from entering
    costs = np.zeros(total_cols)
    costs[:n_struct] = lp.c[col_var_arr] * col_sign_arr / col_scale
    enterable = ~art_mask
    guard = art_mask if art_count else None
    status = simplex.run(costs, enterable, guard, max_iter)
    if status is LpStatus.UNBOUNDED:
        return _non_optimal(LpStatus.UNBOUNDED, lp, simplex.iterations)

    if perturbed:
        simplex.b = b  # restore the true rhs at the final (dual-feasible) basis
    simplex.refactor()
    x_std = np.zeros(total_cols)
    x_std[simplex.basis] = simplex.xb
    x = shift.copy()
    np.add.at(x, col_var_arr, col_sign_arr * x_std[:n_struct] / col_scale)

    y = costs[simplex.basis] @ simplex.binv
    rc = costs - y @ simplex.a
    rc[simplex.basis] = 0.0
    dual_residual = float(np.maximum(-rc[enterable], 0.0).max(initial=0.0))

    violation = _constraint_violation(lp, x)
    if violation > 10 * FEASIBILITY_TOL:
        raise SolverError(f"optimal basis violates constraints by {violation:.3e}")
    return LpSolution(
        status=LpStatus.OPTIMAL,
        x=x,
        objective_value=float(lp.c @ x),
        max_constraint_violation=violation,
        dual_residual=dual_residual,
        iterations=simplex.iterations,
    )
