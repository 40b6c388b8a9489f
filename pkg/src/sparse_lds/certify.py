"""Certificates for sparse-input identifiability and l1 recoverability.

The central quantity is the nullspace constant of a subspace K with respect to
an admissible support family: the largest fraction of l1 mass any vector of K
can place on an admissible support. Values below one half certify that l1
minimization recovers every admissibly sparse vector; values at or above one
half refute it and yield explicit counterexample inputs.

Per admissible support S the constant is an exact maximum of a piecewise
linear function over the l1 ball sliced by K, computed by enumerating sign
patterns on S (one LP each; opposite patterns coincide by symmetry, so the
first sign is fixed). Supports are pruned with the sum of single-coordinate
values, which upper-bounds the support value; threshold mode additionally
stops as soon as the running bounds settle the comparison against one half.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .lds import LinearSystem, build_operators, simulate
from .lpsolve import LinearProgram, LpStatus, SolverError, solve_lp
from .matrixcore import (
    Subspace,
    kernel_basis,
    rank,
    subspace_equal,
    subspace_image,
    subspace_preimage,
)
from .sparsity import (
    Asc,
    ProductSupport,
    Support,
    flatten_product_asc,
    flatten_support,
    maximal_pair_unions,
    num_product_faces,
    restrict,
)

__all__ = [
    "NSC_TOL",
    "Classification",
    "CertificationError",
    "Counterexample",
    "InjectivityReport",
    "InstanceTooLargeError",
    "Mode",
    "NscInterval",
    "TightCase",
    "construct_counterexample",
    "delta_injective",
    "gnup_holds",
    "joint_injectivity",
    "joint_recoverability",
    "necessary_condition",
    "nsc_interval",
    "nsc_matrix",
    "sufficient_condition",
    "tight_case",
]

NSC_TOL = 0.05
_KERNEL_ROUTE_TOL = 1e-8
DEFAULT_CAP = 10**6


class Mode(str, Enum):
    FULL = "full"
    THRESHOLD = "threshold"


class Classification(str, Enum):
    BELOW = "below"
    NEAR = "near"
    ABOVE = "above"


class TightCase(str, Enum):
    FULL_RANK_C = "full_rank_c"
    UNOBSERVABLE_TIGHT = "unobservable_tight"
    GENERIC = "generic"


class InstanceTooLargeError(ValueError):
    """Exhaustive product-support enumeration would exceed the configured cap."""


class CertificationError(RuntimeError):
    """Two computations that must agree disagreed beyond tolerance."""


def _residual_kernel(ops, rtol: float | None) -> Subspace:
    """ker of the projected input map, computed without the projector.

    Equals the preimage of the observability image under the input-output
    matrix. Going through an orthonormal image basis avoids the cancellation
    noise of forming projector times map with a pseudoinverse, which matters
    when the observability image is (almost) the whole stacked output space.
    """
    image = Subspace.from_spanning(ops.obsv, rtol)
    return subspace_preimage(ops.toeplitz, image, rtol)


def _classify(lo: float, hi: float, tol: float) -> Classification:
    if hi < 0.5 - tol:
        return Classification.BELOW
    if lo > 0.5 + tol:
        return Classification.ABOVE
    return Classification.NEAR


@dataclass(frozen=True)
class NscInterval:
    """Certified bounds on a nullspace constant, classified against one half.

    lo is attained by the stored witness (support, vector); hi bounds the true
    constant from above. Full mode collapses the interval to the exact value.
    """

    lo: float
    hi: float
    classification: Classification
    supports_examined: int
    witness: tuple[Support, np.ndarray] | None

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def to_json(self) -> dict:
        s, h = (None, None) if self.witness is None else self.witness
        return {
            "lo": self.lo,
            "hi": self.hi,
            "classification": self.classification.value,
            "witness_support": None if s is None else list(s),
            "witness_vector": None if h is None else [float(v) for v in h],
            "supports_examined": self.supports_examined,
        }


class _SubspaceNscSolver:
    """Shared LP scaffolding for one subspace: max a.z over ||B z||_1 <= 1."""

    def __init__(self, basis: np.ndarray):
        self.basis = basis
        ambient, d = basis.shape
        eye = np.eye(ambient)
        # variables (z, t): B z - t <= 0, -B z - t <= 0, sum t <= 1
        self.a_ub = np.vstack(
            [
                np.hstack([basis, -eye]),
                np.hstack([-basis, -eye]),
                np.concatenate([np.zeros(d), np.ones(ambient)])[None, :],
            ]
        )
        self.b_ub = np.concatenate([np.zeros(2 * ambient), [1.0]])
        self.lower = np.concatenate([np.full(d, -np.inf), np.zeros(ambient)])
        self.d = d
        self.ambient = ambient

    def directional_value(self, a: np.ndarray) -> tuple[float, np.ndarray]:
        cost = np.concatenate([-a, np.zeros(self.ambient)])
        sol = solve_lp(LinearProgram(c=cost, a_ub=self.a_ub, b_ub=self.b_ub, lower=self.lower))
        if sol.status is not LpStatus.OPTIMAL:
            raise SolverError(f"nullspace constant subproblem ended {sol.status.value}")
        z = sol.x[: self.d]
        return -sol.objective_value, self.basis @ z

    def face_value(
        self, support: Support, stop_above: float | None = None
    ) -> tuple[float, np.ndarray | None]:
        """Exact max of ||h_S||_1 over the sliced l1 ball, via sign patterns.

        With stop_above set, returns early once the running max exceeds it
        (the returned value is still attained by the returned vector).
        """
        if not support:
            return 0.0, None
        rows = self.basis[list(support), :]
        best, best_h = -1.0, None
        for tail in itertools.product((1.0, -1.0), repeat=len(support) - 1):
            sigma = np.array((1.0,) + tail)
            value, h = self.directional_value(sigma @ rows)
            if value > best:
                best, best_h = value, h
            if stop_above is not None and best > stop_above:
                break
        return max(best, 0.0), best_h


def _mass_fraction(h: np.ndarray, support: Support) -> float:
    total = float(np.abs(h).sum())
    if total <= 0.0:
        return 0.0
    return float(np.abs(h[list(support)]).sum()) / total


def nsc_interval(
    space: Subspace, asc: Asc, tol: float = NSC_TOL, mode: Mode = Mode.FULL
) -> NscInterval:
    """Nullspace constant of a subspace over an admissible support family.

    A zero-dimensional subspace has constant exactly zero (the recovery
    property holds vacuously). Support iteration is lexicographic with a
    deterministic running max, so results are reproducible run to run.
    """
    if space.ambient_dim != asc.ambient:
        raise ValueError("subspace and support family have different ambient dimensions")
    mode = Mode(mode)
    if space.dim == 0:
        return NscInterval(0.0, 0.0, _classify(0.0, 0.0, tol), 0, None)

    solver = _SubspaceNscSolver(space.basis)
    faces = list(asc.maximal_faces())
    active = sorted(set(itertools.chain.from_iterable(faces)))

    examined = 0
    lo = 0.0
    witness: tuple[Support, np.ndarray] | None = None

    def consider(support: Support, h: np.ndarray | None):
        nonlocal lo, witness
        if h is None:
            return
        frac = _mass_fraction(h, support)
        if frac > lo:
            lo = frac
            witness = (support, h)

    # single-coordinate values: exact seeds for the running max and the
    # ingredients of the per-support upper bound
    single = {}
    for i in active:
        value, h = solver.face_value((i,))
        single[i] = value
        examined += 1
        consider((i,), h)

    ubs = np.array([min(1.0, sum(single[i] for i in f)) for f in faces])
    suffix = np.maximum.accumulate(ubs[::-1])[::-1] if len(faces) else np.array([])

    hi: float | None = None
    for idx, face in enumerate(faces):
        if mode is Mode.THRESHOLD:
            if lo > 0.5 + tol:
                hi = min(1.0, max(lo, float(suffix[idx])))
                break
            if suffix[idx] < 0.5 - tol:
                hi = max(lo, float(suffix[idx]))
                break
        if len(face) <= 1:
            continue  # exact value already folded in via the single-coordinate pass
        if ubs[idx] <= lo:
            continue  # cannot raise the max
        stop = (0.5 + tol) if mode is Mode.THRESHOLD else None
        value, h = solver.face_value(face, stop_above=stop)
        examined += 1
        consider(face, h)
        if stop is not None and value > stop:
            # face enumeration was cut short; remaining signs are covered by
            # the suffix bound and the classification is already settled
            hi = min(1.0, max(lo, float(suffix[idx])))
            break
    if hi is None:
        hi = lo  # every support evaluated or pruned: the max is exact
    return NscInterval(lo, hi, _classify(lo, hi, tol), examined, witness)


def nsc_matrix(
    theta, asc: Asc, tol: float = NSC_TOL, mode: Mode = Mode.FULL, rtol: float | None = None
) -> NscInterval:
    """Nullspace constant of ker(theta) over the support family."""
    return nsc_interval(kernel_basis(theta, rtol), asc, tol, mode)


def gnup_holds(interval: NscInterval) -> bool | None:
    """Whether the constant is certified below one half; None when undetermined."""
    if interval.hi < 0.5:
        return True
    if interval.lo >= 0.5:
        return False
    return None


def delta_injective(theta, asc: Asc, rtol: float | None = None):
    """Whether admissibly sparse vectors are distinguished by theta.

    Checks full column rank of every inclusion-maximal pairwise support union.
    Returns (verdict, witness) where the witness is (face_a, face_b, h) with h
    a kernel vector supported on the violating union.
    """
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape[1] != asc.ambient:
        raise ValueError("matrix columns do not match the support family ambient")
    for union, fa, fb in maximal_pair_unions(asc):
        if not union:
            continue
        cols = theta[:, list(union)]
        if rank(cols, rtol) < len(union):
            null = kernel_basis(cols, rtol).basis[:, 0]
            h = np.zeros(asc.ambient)
            h[list(union)] = null
            return False, (fa, fb, h)
    return True, None


@dataclass(frozen=True)
class InjectivityReport:
    """Verdicts of the two computable joint-injectivity characterizations.

    rank_condition: the stacked rank identity over all product support unions
        plus injectivity of C Psi on the base family.
    projector_condition: full observability plus injectivity of the residual
        map on the product family.
    The two are equivalent in exact arithmetic; disagreement indicates a
    numerical tolerance problem, not a valid state.
    """

    rank_condition: bool
    projector_condition: bool
    obsv_rank: int
    state_dim: int
    cpsi_injective: bool
    witness_pair: tuple[ProductSupport, ProductSupport] | None

    @property
    def injective(self) -> bool:
        return self.rank_condition


def joint_injectivity(
    system: LinearSystem,
    asc: Asc,
    horizon: int,
    rtol: float | None = None,
    cap: int = DEFAULT_CAP,
) -> InjectivityReport:
    """Evaluate both joint-injectivity characterizations on a small instance."""
    block_unions = maximal_pair_unions(asc)
    count = len(block_unions) ** horizon
    if count > cap:
        raise InstanceTooLargeError(
            f"instance too large: {count} product support unions exceed cap {cap}"
        )
    ops = build_operators(system, horizon, rtol)
    n, m = system.n, system.m
    obsv_rank = rank(ops.obsv, rtol)
    obs_full = obsv_rank == n
    cpsi_ok, _ = delta_injective(system.c @ system.psi, asc, rtol)

    rank_ok = cpsi_ok
    proj_ok = obs_full
    image = Subspace.from_spanning(ops.obsv, rtol)
    witness: tuple[ProductSupport, ProductSupport] | None = None
    for combo in itertools.product(block_unions, repeat=horizon):
        if not rank_ok and not proj_ok:
            break
        flat = flatten_support(tuple(u for u, _, _ in combo), m)
        pair = (tuple(a for _, a, _ in combo), tuple(b for _, _, b in combo))
        cols = list(flat)
        gam = ops.toeplitz[:, cols]
        if rank_ok:
            stacked = np.hstack([ops.obsv, gam])
            if rank(stacked, rtol) != n + rank(gam, rtol):
                rank_ok = False
                witness = witness or pair
        if proj_ok:
            # projected columns are injective iff no input maps into the image
            if subspace_preimage(gam, image, rtol).dim > 0:
                proj_ok = False
                witness = witness or pair
    return InjectivityReport(
        rank_condition=rank_ok,
        projector_condition=proj_ok,
        obsv_rank=obsv_rank,
        state_dim=n,
        cpsi_injective=cpsi_ok,
        witness_pair=witness,
    )


def joint_recoverability(
    system: LinearSystem,
    asc: Asc,
    horizon: int,
    tol: float = NSC_TOL,
    cap: int = DEFAULT_CAP,
    rtol: float | None = None,
) -> bool | None:
    """Joint recoverability by l1 minimization over the product support family.

    Full observability plus the nullspace property of the residual map over
    the flattened product complex. Exhaustive in the product supports, so
    intended for small instances only. None means undetermined at this
    tolerance (the constant landed too close to one half to certify).
    """
    count = num_product_faces(asc, horizon)
    if count > cap:
        raise InstanceTooLargeError(
            f"instance too large: {count} product supports exceed cap {cap}"
        )
    ops = build_operators(system, horizon, rtol)
    if rank(ops.obsv, rtol) < system.n:
        return False
    flat = flatten_product_asc(asc, horizon)
    interval = nsc_interval(_residual_kernel(ops, rtol), flat, tol, Mode.THRESHOLD)
    return gnup_holds(interval)


def necessary_condition(
    system: LinearSystem,
    asc: Asc,
    tol: float = NSC_TOL,
    mode: Mode = Mode.FULL,
    rtol: float | None = None,
) -> NscInterval:
    """Nullspace constant of C Psi: above one half refutes input recovery for every horizon."""
    return nsc_matrix(system.c @ system.psi, asc, tol, mode, rtol)


def sufficient_condition(
    system: LinearSystem,
    asc: Asc,
    tol: float = NSC_TOL,
    mode: Mode = Mode.FULL,
    rtol: float | None = None,
) -> NscInterval:
    """Nullspace constant of the one-step residual kernel: below one half
    certifies input recovery for every horizon.

    The kernel is computed two independent ways and cross-checked: directly
    from the one-step residual map, and as the preimage under C Psi of the
    image of ker C under C A.
    """
    ops = build_operators(system, 1, rtol)
    direct = _residual_kernel(ops, rtol)
    cpsi = system.c @ system.psi
    ca = system.c @ system.a
    image = subspace_image(ca, kernel_basis(system.c, rtol), rtol)
    chained = subspace_preimage(cpsi, image, rtol)
    if not subspace_equal(direct, chained, _KERNEL_ROUTE_TOL):
        raise CertificationError(
            "one-step residual kernel routes disagree "
            f"(dims {direct.dim} vs {chained.dim})"
        )
    return nsc_interval(direct, asc, tol, mode)


def tight_case(system: LinearSystem, rtol: float | None = None, tol: float = 1e-8) -> TightCase:
    """Detect the system classes where the necessary and sufficient constants coincide."""
    if rank(system.c, rtol) == system.n:
        return TightCase.FULL_RANK_C
    ker_c = kernel_basis(system.c, rtol)
    if ker_c.contains(subspace_image(system.a, ker_c, rtol), tol):
        return TightCase.UNOBSERVABLE_TIGHT
    return TightCase.GENERIC


@dataclass(frozen=True)
class Counterexample:
    """An admissibly sparse input the l1 program provably does not return.

    u_truth places the on-support part of the kernel witness in the final
    input slot; u_alt swaps in the (strictly lighter) off-support part with
    flipped sign and produces the identical output from a zero initial state.
    """

    x0: np.ndarray
    u_truth: np.ndarray
    u_alt: np.ndarray
    support: Support
    h: np.ndarray
    norm_on_support: float
    norm_off_support: float
    outputs: np.ndarray


def construct_counterexample(
    system: LinearSystem, asc: Asc, horizon: int, witness: tuple[Support, np.ndarray]
) -> Counterexample:
    """Turn a strict nullspace-property violation of C Psi into a failing input.

    The witness must be a kernel vector of C Psi carrying strictly more than
    half of its l1 mass on an admissible support; non-strict violations are
    rejected since they cannot certify failure.
    """
    support, h = witness
    support = tuple(int(i) for i in support)
    h = np.asarray(h, dtype=np.float64).reshape(-1)
    if h.shape[0] != system.m:
        raise ValueError("witness vector length does not match the input dimension")
    if not asc.is_face(support):
        raise ValueError("witness support is not an admissible face")
    cpsi = system.c @ system.psi
    scale = max(1.0, float(np.abs(cpsi).max()) * float(np.abs(h).max(initial=0.0)))
    if float(np.abs(cpsi @ h).max(initial=0.0)) > 1e-7 * scale:
        raise ValueError("witness vector is not in the kernel of C Psi")
    on = restrict(h, support)
    off = h - on
    norm_on = float(np.abs(on).sum())
    norm_off = float(np.abs(off).sum())
    if norm_on <= norm_off:
        raise ValueError(
            "witness violation is not strict: on-support mass does not exceed off-support mass"
        )
    m, n = system.m, system.n
    u_truth = np.zeros(horizon * m)
    u_truth[(horizon - 1) * m :] = on
    u_alt = np.zeros(horizon * m)
    u_alt[(horizon - 1) * m :] = -off
    x0 = np.zeros(n)
    return Counterexample(
        x0=x0,
        u_truth=u_truth,
        u_alt=u_alt,
        support=support,
        h=h,
        norm_on_support=norm_on,
        norm_off_support=norm_off,
        outputs=simulate(system, x0, u_truth),
    )
