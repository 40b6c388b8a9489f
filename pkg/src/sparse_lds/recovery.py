"""Joint state and sparse-input recovery by l1 minimization.

The joint program minimizes the l1 norm of the stacked inputs subject to the
stacked output equations, with the initial state kept as a free variable so
the solver returns it directly. The l1 objective is linearized by splitting
each input entry into nonnegative positive and negative parts, which yields an
equality-only program with the same minimizers as the slack form.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lds import BlockOperators
from .lpsolve import LinearProgram, LpStatus, solve_lp
from .matrixcore import rank

__all__ = [
    "RECOVERY_TOL",
    "RecoveryResult",
    "coherence",
    "recovery_success",
    "sefati_sufficient",
    "solve_bp",
    "solve_d1",
]

RECOVERY_TOL = 1e-4


@dataclass
class RecoveryResult:
    """Outcome of the joint program: estimates, l1 value, and residual."""

    status: LpStatus
    x0_hat: np.ndarray
    u_hat: np.ndarray
    l1_value: float
    residual: float


def _l1_min(columns_free: np.ndarray, columns_l1: np.ndarray, rhs: np.ndarray):
    """min ||u||_1 over (w, u) with columns_free w + columns_l1 u = rhs.

    Returns (status, w, u). The l1 block is split u = u+ - u- with u+, u- >= 0
    and cost one each; the free block carries no cost.
    """
    n_free = columns_free.shape[1]
    n_l1 = columns_l1.shape[1]
    cost = np.concatenate([np.zeros(n_free), np.ones(2 * n_l1)])
    a_eq = np.hstack([columns_free, columns_l1, -columns_l1])
    lower = np.concatenate([np.full(n_free, -np.inf), np.zeros(2 * n_l1)])
    sol = solve_lp(LinearProgram(c=cost, a_eq=a_eq, b_eq=rhs, lower=lower))
    if sol.status is not LpStatus.OPTIMAL:
        return sol.status, None, None
    w = sol.x[:n_free]
    u = sol.x[n_free : n_free + n_l1] - sol.x[n_free + n_l1 :]
    return sol.status, w, u


def solve_d1(ops: BlockOperators, outputs) -> RecoveryResult:
    """Minimize the input l1 norm subject to the stacked output equations.

    Infeasible only when the outputs lie outside the joint image (corrupted
    data); unbounded cannot occur since the objective is nonnegative.
    """
    y = np.asarray(outputs, dtype=np.float64).reshape(-1)
    rows, n = ops.obsv.shape
    if y.shape[0] != rows:
        raise ValueError(f"output vector has length {y.shape[0]}, expected {rows}")
    status, x0, u = _l1_min(ops.obsv, ops.toeplitz, y)
    if status is not LpStatus.OPTIMAL:
        nm = ops.toeplitz.shape[1]
        return RecoveryResult(status, np.full(n, np.nan), np.full(nm, np.nan), np.nan, np.nan)
    residual = float(np.abs(ops.obsv @ x0 + ops.toeplitz @ u - y).max())
    return RecoveryResult(status, x0, u, float(np.abs(u).sum()), residual)


def solve_bp(theta, y) -> np.ndarray:
    """Basis pursuit: the l1-minimal solution of theta x = y.

    Raises ValueError when y is outside the column span of theta.
    """
    theta = np.asarray(theta, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    status, _, x = _l1_min(np.zeros((theta.shape[0], 0)), theta, y)
    if status is not LpStatus.OPTIMAL:
        raise ValueError("basis pursuit is infeasible: y is outside the column span")
    return x


def recovery_success(x0_true, u_true, result: RecoveryResult, tol: float = RECOVERY_TOL):
    """(joint, input_only) success flags at a relative-infinity tolerance."""
    if result.status is not LpStatus.OPTIMAL:
        return False, False
    x0_true = np.asarray(x0_true, dtype=np.float64).reshape(-1)
    u_true = np.asarray(u_true, dtype=np.float64).reshape(-1)
    x0_ok = np.abs(x0_true - result.x0_hat).max(initial=0.0) <= tol * max(
        1.0, np.abs(x0_true).max(initial=0.0)
    )
    u_ok = np.abs(u_true - result.u_hat).max(initial=0.0) <= tol * max(
        1.0, np.abs(u_true).max(initial=0.0)
    )
    return bool(x0_ok and u_ok), bool(u_ok)


def coherence(theta) -> float:
    """Largest absolute normalized inner product between distinct columns."""
    theta = np.asarray(theta, dtype=np.float64)
    norms = np.linalg.norm(theta, axis=0)
    if theta.shape[1] and norms.min(initial=np.inf) <= 1e-12:
        raise ValueError("coherence undefined: a column is numerically zero")
    if theta.shape[1] < 2:
        return 0.0
    gram = (theta / norms).T @ (theta / norms)
    np.fill_diagonal(gram, 0.0)
    return float(np.abs(gram).max())


def sefati_sufficient(ops: BlockOperators, s: int, rtol: float | None = None) -> bool:
    """Coherence-based sufficient test for joint recovery of s-sparse inputs.

    Requires full observability and coherence of the residual map below
    1/(2 N s - 1). A numerically zero residual column means some input
    direction is invisible, so the bound cannot certify and we return False.
    """
    if s < 1:
        raise ValueError("sparsity level must be at least 1")
    if rank(ops.obsv, rtol) < ops.obsv.shape[1]:
        return False
    # a residual map that is cancellation noise cannot certify anything
    res_scale = np.linalg.norm(ops.residual_map, 2) if ops.residual_map.size else 0.0
    toe_scale = np.linalg.norm(ops.toeplitz, 2) if ops.toeplitz.size else 0.0
    if res_scale <= 1e-10 * max(1.0, toe_scale):
        return False
    try:
        mu = coherence(ops.residual_map)
    except ValueError:
        return False
    return mu < 1.0 / (2 * ops.horizon * s - 1)
