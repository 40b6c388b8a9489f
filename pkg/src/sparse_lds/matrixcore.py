"""Dense linear algebra and subspace calculus used by every other module.

Rank, kernel, and pseudoinverse decisions all go through the SVD with a
relative singular value cutoff (max(rows, cols) * machine epsilon by default),
so results are reproducible and independent of the basis a caller happens to
hold. Subspaces always carry orthonormal bases, and the zero-dimensional
subspace is a regular value rather than an error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "Subspace",
    "complement_projector",
    "default_rtol",
    "kernel_basis",
    "pseudoinverse",
    "rank",
    "subspace_equal",
    "subspace_image",
    "subspace_preimage",
    "subspace_sum",
]

_EPS = float(np.finfo(np.float64).eps)

# safety factor for deciding that a projected direction is cancellation noise:
# projector arithmetic accumulates a modest multiple of eps per entry, so the
# floor sits three decades above the bare epsilon scale (still ~1e-12 relative)
_CANCEL_SAFETY = 1e3


def default_rtol(mat: np.ndarray) -> float:
    """Relative singular value cutoff: max(rows, cols) * machine epsilon."""
    return max(mat.shape, default=1) * _EPS if mat.size else _EPS


def cancellation_floor(mat: np.ndarray, rtol: float | None = None) -> float:
    """Absolute singular-value floor for products that may cancel to zero."""
    scale = _spectral_norm(_as_matrix(mat))
    return _CANCEL_SAFETY * (rtol if rtol is not None else default_rtol(mat)) * scale


def _as_matrix(mat) -> np.ndarray:
    out = np.asarray(mat, dtype=np.float64)
    if out.ndim != 2:
        raise ValueError(f"expected a 2-d array, got shape {out.shape}")
    if out.size and not np.all(np.isfinite(out)):
        raise ValueError("matrix entries must be finite")
    return out


def rank(mat, rtol: float | None = None, atol: float = 0.0) -> int:
    """Numerical rank: singular values above max(rtol * largest, atol).

    The absolute floor matters for matrices formed by cancelling products
    (projector times map): there the largest singular value may itself be
    roundoff noise, and a purely relative cutoff would hallucinate rank.
    """
    mat = _as_matrix(mat)
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if rtol is None:
        rtol = default_rtol(mat)
    return int(np.count_nonzero(s > max(rtol * s[0], atol)))


@dataclass(frozen=True)
class Subspace:
    """A linear subspace of R^n stored as an orthonormal column basis.

    basis has shape (ambient_dim, dim); dim may be zero.
    """

    basis: np.ndarray

    _ORTHO_TOL = 1e-10

    def __post_init__(self) -> None:
        b = np.asarray(self.basis, dtype=np.float64)
        if b.ndim != 2:
            raise ValueError(f"basis must be 2-d, got shape {b.shape}")
        if b.shape[1] > b.shape[0]:
            raise ValueError("more basis columns than ambient dimensions")
        if b.shape[1]:
            gram = b.T @ b
            if not np.allclose(gram, np.eye(b.shape[1]), atol=self._ORTHO_TOL):
                raise ValueError("basis columns are not orthonormal")
        object.__setattr__(self, "basis", b)

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[0]

    @property
    def dim(self) -> int:
        return self.basis.shape[1]

    @classmethod
    def zero(cls, ambient: int) -> "Subspace":
        return cls(np.zeros((ambient, 0)))

    @classmethod
    def full(cls, ambient: int) -> "Subspace":
        return cls(np.eye(ambient))

    @classmethod
    def from_spanning(cls, columns, rtol: float | None = None, atol: float = 0.0) -> "Subspace":
        """Orthonormalize an arbitrary (possibly rank-deficient) spanning set."""
        cols = _as_matrix(columns)
        if cols.shape[1] == 0 or cols.size == 0:
            return cls.zero(cols.shape[0])
        u, s, _ = np.linalg.svd(cols, full_matrices=False)
        if rtol is None:
            rtol = default_rtol(cols)
        r = int(np.count_nonzero(s > max(rtol * s[0], atol))) if s.size else 0
        return cls(u[:, :r].copy())

    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.T

    def contains(self, other: "Subspace", tol: float = 1e-8) -> bool:
        """Whether other is contained in self, up to residual tol."""
        if other.ambient_dim != self.ambient_dim:
            raise ValueError("ambient dimensions differ")
        if other.dim == 0:
            return True
        if other.dim > self.dim:
            return False
        resid = other.basis - self.basis @ (self.basis.T @ other.basis)
        return float(np.abs(resid).max()) < tol


def kernel_basis(mat, rtol: float | None = None, atol: float = 0.0) -> Subspace:
    """Orthonormal basis of the right null space, via the SVD."""
    mat = _as_matrix(mat)
    cols = mat.shape[1]
    if cols == 0:
        return Subspace.zero(0)
    if mat.shape[0] == 0:
        return Subspace.full(cols)
    _, s, vh = np.linalg.svd(mat, full_matrices=True)
    if rtol is None:
        rtol = default_rtol(mat)
    cutoff = max(rtol * s[0], atol) if s.size else atol
    r = int(np.count_nonzero(s > cutoff))
    return Subspace(vh[r:].T.copy())


def pseudoinverse(mat, rtol: float | None = None) -> np.ndarray:
    """Moore-Penrose pseudoinverse with the shared singular value cutoff."""
    mat = _as_matrix(mat)
    if mat.size == 0:
        return np.zeros((mat.shape[1], mat.shape[0]))
    if rtol is None:
        rtol = default_rtol(mat)
    return np.linalg.pinv(mat, rcond=rtol)


def complement_projector(mat, rtol: float | None = None) -> np.ndarray:
    """Orthogonal projector onto the complement of the column space of mat."""
    mat = _as_matrix(mat)
    return np.eye(mat.shape[0]) - mat @ pseudoinverse(mat, rtol)


def subspace_image(
    mat, space: Subspace, rtol: float | None = None, atol: float | None = None
) -> Subspace:
    """The image {M x : x in space}.

    Directions below roundoff at the scale of M count as zero, so a map that
    annihilates the subspace yields the zero image rather than noise. When M
    is itself a product with internal cancellation, pass an explicit atol at
    the scale of the factors.
    """
    mat = _as_matrix(mat)
    if mat.shape[1] != space.ambient_dim:
        raise ValueError("matrix columns do not match subspace ambient dimension")
    if atol is None:
        atol = cancellation_floor(mat, rtol)
    return Subspace.from_spanning(mat @ space.basis, rtol, atol=atol)


def subspace_preimage(
    mat, space: Subspace, rtol: float | None = None, atol: float | None = None
) -> Subspace:
    """The preimage {x : M x in space}, computed as ker((I - P_space) M).

    The kernel cutoff is floored at the scale of M itself (or an explicit
    atol): when M maps almost entirely into the subspace, the projected matrix
    is cancellation noise and must count as zero.
    """
    mat = _as_matrix(mat)
    if mat.shape[0] != space.ambient_dim:
        raise ValueError("matrix rows do not match subspace ambient dimension")
    off_component = mat - space.basis @ (space.basis.T @ mat)
    if atol is None:
        atol = cancellation_floor(mat, rtol)
    return kernel_basis(off_component, rtol, atol=atol)


def _spectral_norm(mat: np.ndarray) -> float:
    if mat.size == 0:
        return 0.0
    return float(np.linalg.svd(mat, compute_uv=False)[0])


def subspace_sum(u: Subspace, v: Subspace, rtol: float | None = None) -> Subspace:
    if u.ambient_dim != v.ambient_dim:
        raise ValueError("ambient dimensions differ")
    return Subspace.from_spanning(np.hstack([u.basis, v.basis]), rtol)


def subspace_equal(u: Subspace, v: Subspace, tol: float = 1e-8) -> bool:
    """Equal dimensions and every basis vector of u within tol of v."""
    if u.ambient_dim != v.ambient_dim:
        raise ValueError("ambient dimensions differ")
    if u.dim != v.dim:
        return False
    if u.dim == 0:
        return True
    resid = u.basis - v.basis @ (v.basis.T @ u.basis)
    return float(np.abs(resid).max()) < tol
