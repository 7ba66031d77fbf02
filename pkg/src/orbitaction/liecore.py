"""Dense matrix substrate for u(n) and U(n).

All matrices are plain complex ``numpy`` arrays. Functions accept stacks of
matrices (shape ``(..., n, n)``) wherever that is cheap, because caps and
trajectories are evaluated in batches.

Exponentials go through the Hermitian eigendecomposition of ``-iA``; there is
no power-series path, so results stay unitary to rounding.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateInputError, NumericalFailure, ValidationError
from .numerics import DEFAULT

__all__ = [
    "dagger",
    "commutator",
    "check_skew_hermitian",
    "check_unitary",
    "unitarity_defect",
    "eig_skew_hermitian",
    "expm_skew",
    "project_unitary",
    "random_haar_unitary",
    "random_skew_hermitian",
    "as_rng",
]


def dagger(A):
    return np.conj(np.swapaxes(A, -1, -2))


def commutator(A, B):
    return A @ B - B @ A


def as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def check_skew_hermitian(A, tol: float = DEFAULT.skew_tol) -> np.ndarray:
    """Return ``A`` as a complex square array, or raise ``ValidationError``.

    The tolerance is relative to the Frobenius norm of ``A`` (absolute when
    ``A`` is zero).
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ValidationError(f"expected a non-empty square matrix, got shape {A.shape}")
    scale = max(np.linalg.norm(A), 1.0)
    defect = np.linalg.norm(A + dagger(A))
    if defect > tol * scale:
        raise ValidationError(f"matrix is not skew-Hermitian (defect {defect:.3e})")
    return A


def unitarity_defect(U) -> float:
    U = np.asarray(U, dtype=complex)
    n = U.shape[-1]
    err = np.linalg.norm(dagger(U) @ U - np.eye(n), axis=(-2, -1))
    return float(np.max(err))


def check_unitary(U, tol: float = DEFAULT.unitary_tol) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1] or U.shape[0] == 0:
        raise ValidationError(f"expected a non-empty square matrix, got shape {U.shape}")
    defect = unitarity_defect(U)
    if defect > tol:
        raise ValidationError(f"matrix is not unitary (defect {defect:.3e})")
    return U


def _eigh(H):
    try:
        return np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"eigendecomposition did not converge: {exc}") from exc


def _fix_phases(V):
    # make the first non-negligible component of every eigenvector real positive
    mags = np.abs(V)
    first = np.argmax(mags > 1e-12 * np.max(mags, axis=-2, keepdims=True), axis=-2)
    lead = np.take_along_axis(V, first[..., None, :], axis=-2)
    return V * (np.conj(lead) / np.abs(lead))


def eig_skew_hermitian(A):
    """Eigendecomposition ``A = V diag(lam) V^dagger`` of skew-Hermitian ``A``.

    Returns:
        lam: purely imaginary eigenvalues, imaginary part descending.
        V: unitary matrix of eigenvectors, each with its first non-negligible
            component made real and positive.

    Works on stacks; ties in the eigenvalues keep the order produced by the
    underlying Hermitian solver.
    """
    A = np.asarray(A, dtype=complex)
    mu, V = _eigh(-1j * A)
    # eigh sorts ascending; A = i * (-iA) so the order we want is the reverse
    mu = mu[..., ::-1]
    V = _fix_phases(V[..., ::-1])
    return 1j * mu, V


def expm_skew(A):
    """Matrix exponential of a skew-Hermitian matrix (or stack of them)."""
    A = np.asarray(A, dtype=complex)
    mu, V = _eigh(-1j * A)
    E = (V * np.exp(1j * mu)[..., None, :]) @ dagger(V)
    # one Newton-Schulz step removes the eigenvector rounding bias, which
    # otherwise adds up coherently when the same factor is applied many times
    return 1.5 * E - 0.5 * E @ dagger(E) @ E


def project_unitary(M, tol: float = DEFAULT.singular_tol) -> np.ndarray:
    """Nearest unitary matrix in Frobenius norm: the polar factor ``M (M^dagger M)^(-1/2)``."""
    M = np.asarray(M, dtype=complex)
    mu, V = _eigh(dagger(M) @ M)
    smin = np.sqrt(max(float(np.min(mu)), 0.0))
    if smin <= tol:
        raise DegenerateInputError(f"matrix is (nearly) singular: smallest singular value {smin:.3e}")
    inv_sqrt = (V * (1.0 / np.sqrt(mu))[..., None, :]) @ dagger(V)
    return M @ inv_sqrt


def random_haar_unitary(n: int, seed=None) -> np.ndarray:
    """Haar-distributed element of U(n).

    QR of a complex Ginibre matrix, with the phases of ``diag(R)`` moved into
    ``Q`` so the distribution is exactly Haar. ``seed`` may be an integer or
    a ``numpy`` Generator.
    """
    if n < 1:
        raise ValidationError(f"dimension must be positive, got {n}")
    rng = as_rng(seed)
    z = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_skew_hermitian(n: int, seed=None, scale: float = 1.0) -> np.ndarray:
    rng = as_rng(seed)
    z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * 0.5 * (z - dagger(z))
