"""Certificates and l1 recovery for sparse inputs to linear dynamical systems."""

__version__ = "0.1.0"

from .certify import (
    Classification,
    Counterexample,
    InjectivityReport,
    InstanceTooLargeError,
    Mode,
    NscInterval,
    TightCase,
    construct_counterexample,
    delta_injective,
    gnup_holds,
    joint_injectivity,
    joint_recoverability,
    necessary_condition,
    nsc_interval,
    nsc_matrix,
    sufficient_condition,
    tight_case,
)
from .lds import BlockOperators, LinearSystem, build_operators, observable, simulate
from .lpsolve import LinearProgram, LpSolution, LpStatus, SolverError, solve_lp
from .matrixcore import (
    Subspace,
    complement_projector,
    kernel_basis,
    pseudoinverse,
    rank,
    subspace_equal,
    subspace_image,
    subspace_preimage,
    subspace_sum,
)
from .recovery import (
    RecoveryResult,
    coherence,
    recovery_success,
    sefati_sufficient,
    solve_bp,
    solve_d1,
)
from .sparsity import Asc, flatten_support, product_faces, restrict, support_union
