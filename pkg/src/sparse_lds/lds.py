"""Linear system container, trajectory simulation, and stacked block operators.

A system is the triple (A, Psi, C) of state, input, and output matrices for
x[k+1] = A x[k] + Psi u[k], y[k] = C x[k]. For a horizon N the stacked output
over y[0..N] splits into an observability part acting on the initial state and
a block lower-triangular Toeplitz part acting on the flattened inputs
u[0..N-1]; note the output stack has one more block entry than the input
stack. Block vectors are flattened with entry (k, i) at index k*m + i, the
same convention sparsity.flatten_support uses.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .matrixcore import complement_projector, rank

__all__ = [
    "BlockOperators",
    "LinearSystem",
    "build_operators",
    "load_system",
    "observable",
    "save_system",
    "simulate",
]


@dataclass(frozen=True)
class LinearSystem:
    """State matrix a (n x n), input matrix psi (n x m), output matrix c (p x n)."""

    a: np.ndarray
    psi: np.ndarray
    c: np.ndarray

    def __post_init__(self) -> None:
        a = np.atleast_2d(np.asarray(self.a, dtype=np.float64))
        psi = np.atleast_2d(np.asarray(self.psi, dtype=np.float64))
        c = np.atleast_2d(np.asarray(self.c, dtype=np.float64))
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError(f"state matrix must be square, got {a.shape}")
        if psi.shape[0] != n:
            raise ValueError("input matrix row count must equal state dimension")
        if c.shape[1] != n:
            raise ValueError("output matrix column count must equal state dimension")
        for name, mat in (("a", a), ("psi", psi), ("c", c)):
            if mat.size and not np.all(np.isfinite(mat)):
                raise ValueError(f"matrix {name} has non-finite entries")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "psi", psi)
        object.__setattr__(self, "c", c)

    @property
    def n(self) -> int:
        return self.a.shape[0]

    @property
    def m(self) -> int:
        return self.psi.shape[1]

    @property
    def p(self) -> int:
        return self.c.shape[0]

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "p": self.p,
            "A": self.a.tolist(),
            "Psi": self.psi.tolist(),
            "C": self.c.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "LinearSystem":
        sys = cls(a=np.array(obj["A"]), psi=np.array(obj["Psi"]), c=np.array(obj["C"]))
        for key in ("n", "m", "p"):
            if key in obj and int(obj[key]) != getattr(sys, key):
                raise ValueError(f"declared {key}={obj[key]} does not match matrix shapes")
        return sys


def save_system(system: LinearSystem, path) -> None:
    Path(path).write_text(json.dumps(system.to_json(), indent=2) + "\n")


def load_system(path) -> LinearSystem:
    return LinearSystem.from_json(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class BlockOperators:
    """Stacked operators for a horizon N.

    obsv: ((N+1)p, n) observability matrix, block row k equal to C A^k.
    toeplitz: ((N+1)p, N m) input-output matrix, block (k, j) equal to
        C A^(k-1-j) Psi for j < k and zero otherwise (first block row zero).
    perp_proj: orthogonal projector annihilating the observability image.
    residual_map: perp_proj @ toeplitz, the part of the output the initial
        state cannot explain.
    """

    horizon: int
    obsv: np.ndarray
    toeplitz: np.ndarray
    perp_proj: np.ndarray
    residual_map: np.ndarray


def simulate(system: LinearSystem, x0, inputs) -> np.ndarray:
    """Iterate the recursion and return the flattened outputs y[0..N]."""
    x = np.asarray(x0, dtype=np.float64).reshape(-1)
    u = np.asarray(inputs, dtype=np.float64).reshape(-1)
    n, m = system.n, system.m
    if x.shape[0] != n:
        raise ValueError(f"initial state has length {x.shape[0]}, expected {n}")
    if u.size % m:
        raise ValueError(f"input length {u.size} is not a multiple of m={m}")
    steps = u.size // m
    outputs = np.empty((steps + 1) * system.p)
    outputs[: system.p] = system.c @ x
    for k in range(steps):
        x = system.a @ x + system.psi @ u[k * m : (k + 1) * m]
        outputs[(k + 1) * system.p : (k + 2) * system.p] = system.c @ x
    return outputs


def build_operators(system: LinearSystem, horizon: int, rtol: float | None = None) -> BlockOperators:
    """Construct the stacked operators for y[0..horizon]."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    n, m, p = system.n, system.m, system.p
    # accumulate C A^k iteratively for exactness at desk scale
    ca = [system.c]
    for _ in range(horizon):
        ca.append(ca[-1] @ system.a)
    obsv = np.vstack(ca)
    markov = [ca[k] @ system.psi for k in range(horizon)]
    toeplitz = np.zeros(((horizon + 1) * p, horizon * m))
    for k in range(1, horizon + 1):
        for j in range(k):
            toeplitz[k * p : (k + 1) * p, j * m : (j + 1) * m] = markov[k - 1 - j]
    perp = complement_projector(obsv, rtol)
    return BlockOperators(
        horizon=horizon,
        obsv=obsv,
        toeplitz=toeplitz,
        perp_proj=perp,
        residual_map=perp @ toeplitz,
    )


def observable(system: LinearSystem, horizon: int, rtol: float | None = None) -> bool:
    """Whether the stacked observability matrix has full column rank."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    ca = [system.c]
    for _ in range(horizon):
        ca.append(ca[-1] @ system.a)
    return rank(np.vstack(ca), rtol) == system.n
