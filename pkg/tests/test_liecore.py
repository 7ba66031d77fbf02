import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orbitaction.errors import DegenerateInputError, ValidationError
from orbitaction.liecore import (
    check_skew_hermitian,
    check_unitary,
    commutator,
    dagger,
    eig_skew_hermitian,
    expm_skew,
    project_unitary,
    random_haar_unitary,
    random_skew_hermitian,
    unitarity_defect,
)

seeds = st.integers(0, 2**32 - 1)
dims = st.integers(1, 5)


def test_check_skew_hermitian_accepts_and_rejects():
    A = np.array([[1j, 2 + 1j], [-2 + 1j, -3j]])
    np.testing.assert_array_equal(check_skew_hermitian(A), A)
    with pytest.raises(ValidationError):
        check_skew_hermitian(A + 1e-3)
    with pytest.raises(ValidationError):
        check_skew_hermitian(np.zeros((2, 3)))


def test_check_unitary():
    check_unitary(np.eye(3))
    with pytest.raises(ValidationError):
        check_unitary(2 * np.eye(2))


@given(seeds, dims)
def test_eig_roundtrip(seed, n):
    A = random_skew_hermitian(n, seed)
    lam, V = eig_skew_hermitian(A)
    assert np.allclose(lam.real, 0)
    # imaginary parts sorted descending
    assert np.all(np.diff(lam.imag) <= 1e-12)
    assert unitarity_defect(V) < 1e-12
    np.testing.assert_allclose(V @ np.diag(lam) @ dagger(V), A, atol=1e-12)


def test_eig_batched_matches_single(rng):
    A = np.stack([random_skew_hermitian(3, rng) for _ in range(4)])
    lam, V = eig_skew_hermitian(A)
    for k in range(4):
        l1, V1 = eig_skew_hermitian(A[k])
        np.testing.assert_allclose(lam[k], l1, atol=1e-13)
        np.testing.assert_allclose(V[k], V1, atol=1e-10)


def test_expm_known_values():
    # e^{pi diag(i, -i)} = -I
    np.testing.assert_allclose(expm_skew(np.diag([1j * np.pi, -1j * np.pi])), -np.eye(2), atol=1e-15)
    # rotation generator
    t = 0.7
    R = expm_skew(np.array([[0, -t], [t, 0]], dtype=complex))
    np.testing.assert_allclose(R, [[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]], atol=1e-15)


@given(seeds, dims)
def test_expm_against_scipy(seed, n):
    from scipy.linalg import expm

    A = random_skew_hermitian(n, seed, scale=2.0)
    np.testing.assert_allclose(expm_skew(A), expm(A), atol=1e-11)


@given(seeds, dims)
def test_project_unitary_matches_svd_polar(seed, n):
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    s = np.linalg.svd(M, compute_uv=False)
    if s[-1] < 1e-3:
        return
    U_, _, Vh = np.linalg.svd(M)
    np.testing.assert_allclose(project_unitary(M), U_ @ Vh, atol=1e-9)


def test_project_unitary_fixes_unitaries_and_rejects_singular():
    U = random_haar_unitary(4, 3)
    np.testing.assert_allclose(project_unitary(U), U, atol=1e-13)
    with pytest.raises(DegenerateInputError):
        project_unitary(np.diag([1.0, 1.0, 0.0]))


@given(seeds, dims)
def test_haar_unitary(seed, n):
    U = random_haar_unitary(n, seed)
    assert unitarity_defect(U) < 1e-12
    np.testing.assert_array_equal(U, random_haar_unitary(n, seed))


def test_haar_conjugation_mean_is_scalar():
    # E[g N g^dagger] = (tr N / n) I under Haar measure; compare within 3 standard errors
    n, K = 3, 10_000
    N = np.diag([0.5j, -0.2j, 1.3j])
    rng = np.random.default_rng(7)
    G = np.stack([random_haar_unitary(n, rng) for _ in range(K)])
    samples = G @ N @ dagger(G)
    mean = samples.mean(axis=0)
    expected = np.trace(N) / n * np.eye(n)
    var = samples.real.var(axis=0) + samples.imag.var(axis=0)
    stderr = np.sqrt(var.sum() / K)
    assert np.linalg.norm(mean - expected) < 3 * stderr


def test_haar_first_column_uniform_modulus():
    # |U_11|^2 is Beta(1, n-1) distributed: mean 1/n, variance (n-1)/(n^2 (n+1))
    n, K = 4, 20_000
    rng = np.random.default_rng(11)
    x = np.array([abs(random_haar_unitary(n, rng)[0, 0]) ** 2 for _ in range(K)])
    sd = np.sqrt((n - 1) / (n**2 * (n + 1)) / K)
    assert abs(x.mean() - 1 / n) < 4 * sd


def test_commutator_antisymmetric(rng):
    A, B = random_skew_hermitian(3, rng), random_skew_hermitian(3, rng)
    np.testing.assert_allclose(commutator(A, B), -commutator(B, A))
    # commutator of skew-Hermitian matrices is skew-Hermitian
    check_skew_hermitian(commutator(A, B), tol=1e-12)
