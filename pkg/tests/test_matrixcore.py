import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparse_lds.matrixcore import (
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

from _oracles import rational_rank


def test_rank_identity():
    assert rank(np.eye(3)) == 3


def test_rank_all_ones():
    assert rank(np.ones((2, 2))) == 1


def test_rank_random_vs_rational_elimination():
    rng = np.random.default_rng(314)
    for _ in range(10):
        mat = rng.normal(size=(5, 8))
        assert rank(mat) == rational_rank(mat) == 5


def test_rank_rejects_nonfinite():
    with pytest.raises(ValueError):
        rank(np.array([[np.nan, 1.0]]))


def test_kernel_identity_is_zero_dimensional():
    assert kernel_basis(np.eye(4)).dim == 0


def test_kernel_of_row_ones():
    k = kernel_basis(np.array([[1.0, 1.0]]))
    assert k.dim == 1
    expected = np.array([1.0, -1.0]) / np.sqrt(2.0)
    assert min(
        np.abs(k.basis[:, 0] - expected).max(), np.abs(k.basis[:, 0] + expected).max()
    ) < 1e-12


def test_kernel_random_residual():
    rng = np.random.default_rng(7)
    mat = rng.normal(size=(4, 7))
    k = kernel_basis(mat)
    assert k.dim == 3
    assert np.abs(mat @ k.basis).max() < 1e-10


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(1, 6), st.integers(0, 4), st.integers(0, 2**32 - 1))
def test_rank_nullity(rows, cols, deficiency, seed):
    rng = np.random.default_rng(seed)
    inner = max(min(rows, cols) - deficiency, 0)
    mat = rng.normal(size=(rows, inner)) @ rng.normal(size=(inner, cols))
    r = rank(mat)
    assert r == min(rows, cols, inner)
    assert r + kernel_basis(mat).dim == cols


def test_pseudoinverse_identity_and_zero():
    assert np.allclose(pseudoinverse(np.eye(3)), np.eye(3))
    assert pseudoinverse(np.zeros((4, 2))).shape == (2, 4)
    assert np.all(pseudoinverse(np.zeros((4, 2))) == 0.0)


def test_pseudoinverse_penrose_identities():
    rng = np.random.default_rng(11)
    m = rng.normal(size=(6, 3))
    pinv = pseudoinverse(m)
    assert np.abs(pinv @ m - np.eye(3)).max() < 1e-8
    assert np.abs(m @ pinv @ m - m).max() < 1e-8
    assert np.abs(pinv @ m @ pinv - pinv).max() < 1e-8
    assert np.abs((m @ pinv).T - m @ pinv).max() < 1e-8
    assert np.abs((pinv @ m).T - pinv @ m).max() < 1e-8


def test_complement_projector_trivial_cases():
    assert np.abs(complement_projector(np.eye(3))).max() < 1e-12
    assert np.allclose(complement_projector(np.zeros((3, 2))), np.eye(3))


def test_complement_projector_properties():
    rng = np.random.default_rng(23)
    m = rng.normal(size=(8, 3))
    proj = complement_projector(m)
    assert np.abs(proj @ proj - proj).max() < 1e-8
    assert np.abs(proj - proj.T).max() < 1e-8
    assert np.abs(proj @ m).max() < 1e-8
    # pinv roundoff sits just above the default relative cutoff for a projector
    assert rank(proj, rtol=1e-12) == 8 - rank(m)


def test_subspace_validation():
    with pytest.raises(ValueError):
        Subspace(np.array([[1.0, 1.0], [0.0, 1.0]]))  # not orthonormal
    assert Subspace.zero(3).dim == 0
    assert Subspace.full(3).dim == 3


def test_subspace_image_trivial():
    assert subspace_image(np.eye(3), Subspace.full(3)).dim == 3
    assert subspace_image(np.eye(3), Subspace.zero(3)).dim == 0


def test_subspace_image_columns_live_in_span():
    rng = np.random.default_rng(5)
    m = rng.normal(size=(6, 4))
    v = Subspace.from_spanning(rng.normal(size=(4, 2)))
    img = subspace_image(m, v)
    spanning = m @ v.basis
    # each basis column of the image is a combination of the spanning columns
    coef, *_ = np.linalg.lstsq(spanning, img.basis, rcond=None)
    assert np.abs(spanning @ coef - img.basis).max() < 1e-8


def test_subspace_preimage_trivial():
    v = Subspace.from_spanning(np.random.default_rng(0).normal(size=(3, 2)))
    assert subspace_equal(subspace_preimage(np.eye(3), v), v)
    assert subspace_preimage(np.eye(3), Subspace.full(3)).dim == 3


def test_subspace_preimage_dimension_formula():
    rng = np.random.default_rng(44)
    for _ in range(8):
        m = rng.normal(size=(4, 6))
        v = Subspace.from_spanning(rng.normal(size=(4, 2)))
        pre = subspace_preimage(m, v)
        img = Subspace.from_spanning(m)
        inter_dim = v.dim + img.dim - subspace_sum(v, img).dim
        assert pre.dim == kernel_basis(m).dim + inter_dim
        # every preimage vector really maps into v
        mapped = m @ pre.basis
        assert np.abs(mapped - v.basis @ (v.basis.T @ mapped)).max() < 1e-8


def test_subspace_sum_with_zero():
    u = Subspace.from_spanning(np.random.default_rng(1).normal(size=(5, 2)))
    assert subspace_equal(subspace_sum(u, Subspace.zero(5)), u)


def test_subspace_equal_under_change_of_basis():
    rng = np.random.default_rng(9)
    raw = rng.normal(size=(6, 3))
    u = Subspace.from_spanning(raw)
    v = Subspace.from_spanning(raw @ rng.normal(size=(3, 3)))  # invertible a.s.
    assert subspace_equal(u, v)
    assert subspace_equal(u, u)


def test_subspace_not_equal_when_different():
    rng = np.random.default_rng(10)
    u = Subspace.from_spanning(rng.normal(size=(6, 3)))
    w = Subspace.from_spanning(rng.normal(size=(6, 3)))
    assert not subspace_equal(u, w)


def test_contains():
    rng = np.random.default_rng(3)
    big = Subspace.from_spanning(rng.normal(size=(6, 4)))
    small = Subspace.from_spanning(big.basis @ rng.normal(size=(4, 2)))
    assert big.contains(small)
    assert not small.contains(big)
    assert big.contains(Subspace.zero(6))
