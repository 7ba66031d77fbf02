"""Characters of U(n): the stabilizer character, Schur polynomials and Weyl dimensions."""

from __future__ import annotations

from math import prod
from typing import Sequence

import numpy as np

from .errors import NotRegularError, StabilizerMembershipError, ValidationError
from .liecore import dagger
from .numerics import DEFAULT
from .orbit import OrbitSpec

__all__ = [
    "dominant",
    "stabilizer_character",
    "highest_weight_of_orbit",
    "schur_eval",
    "schur_bialternant",
    "schur_jacobi_trudi",
    "complete_homogeneous",
    "weyl_dimension",
    "su2_character",
    "dual_character",
]


def dominant(weight: Sequence[int]) -> tuple[int, ...]:
    """Validate a dominant U(n) weight: integers, weakly decreasing."""
    w = tuple(int(x) for x in weight)
    if any(int(x) != x for x in weight):
        raise ValidationError(f"weight entries must be integers, got {tuple(weight)}")
    if any(a < b for a, b in zip(w, w[1:])):
        raise ValidationError(f"weight {w} is not weakly decreasing")
    if not w:
        raise ValidationError("empty weight")
    return w


def stabilizer_character(spec: OrbitSpec, h, tol: float = DEFAULT.block_tol) -> complex:
    """``Lambda(h) = prod_j det(h_j)^{m_j}`` for ``h`` block diagonal along the blocks of ``D``."""
    h = np.asarray(h, dtype=complex)
    lab = spec.labels
    off = lab[:, None] != lab[None, :]
    leak = float(np.linalg.norm(np.where(off, h, 0.0)))
    if leak > tol:
        raise StabilizerMembershipError(f"h is not in the stabilizer (off-block norm {leak:.3e})")
    value = 1.0 + 0.0j
    for blk, m in zip(spec.blocks, spec.char_ints):
        d = np.linalg.det(h[blk, blk])
        # blocks are unitary up to tol, so det has unit modulus; keep only its phase
        value *= (d / abs(d)) ** m
    return complex(value)


def highest_weight_of_orbit(spec: OrbitSpec) -> tuple[int, ...]:
    """Highest weight ``-2 pi i eta`` in U(n) coordinates: ``(-m_j)`` sorted decreasing."""
    if not spec.is_regular:
        raise NotRegularError(f"orbit with multiplicities {spec.multiplicities} is not regular")
    return tuple(sorted((-m for m in spec.char_ints), reverse=True))


def weyl_dimension(weight: Sequence[int]) -> int:
    """``prod_{i<j} (w_i - w_j + j - i) / (j - i)``, computed exactly."""
    w = dominant(weight)
    n = len(w)
    num = prod(w[i] - w[j] + j - i for i in range(n) for j in range(i + 1, n))
    den = prod(j - i for i in range(n) for j in range(i + 1, n))
    q, r = divmod(num, den)
    assert r == 0
    return q


def _shift(weight, x):
    """Shift a weight to a partition; returns (partition, factor) with s_w = factor * s_partition."""
    w = np.asarray(dominant(weight))
    c = min(int(w[-1]), 0)
    x = np.asarray(x, dtype=complex)
    return w - c, np.prod(x) ** c


def schur_bialternant(weight: Sequence[int], x) -> complex:
    """``det(x_i^{w_j + n - j}) / det(x_i^{n - j})``; ill-conditioned at coincident ``x``."""
    lam, factor = _shift(weight, x)
    x = np.asarray(x, dtype=complex)
    n = len(x)
    if len(lam) != n:
        raise ValidationError(f"weight of length {len(lam)} with {n} variables")
    delta = np.arange(n - 1, -1, -1)
    num = np.linalg.det(x[:, None] ** (lam + delta)[None, :])
    den = np.linalg.det(x[:, None] ** delta[None, :])
    return complex(factor * num / den)


def complete_homogeneous(x, kmax: int) -> np.ndarray:
    """``[h_0(x), ..., h_kmax(x)]`` by the recurrence ``h_k(x_1..x_j) = h_k(x_1..x_{j-1}) + x_j h_{k-1}(x_1..x_j)``."""
    h = np.zeros(kmax + 1, dtype=complex)
    h[0] = 1.0
    for xj in np.asarray(x, dtype=complex):
        for k in range(1, kmax + 1):
            h[k] = h[k] + xj * h[k - 1]
    return h


def schur_jacobi_trudi(weight: Sequence[int], x) -> complex:
    """``det(h_{w_i - i + j})``; stable at coincident arguments."""
    lam, factor = _shift(weight, x)
    x = np.asarray(x, dtype=complex)
    n = len(lam)
    if n != len(x):
        raise ValidationError(f"weight of length {n} with {len(x)} variables")
    top = int(lam[0]) + n
    h = complete_homogeneous(x, top)
    M = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            k = int(lam[i]) - i + j
            if 0 <= k <= top:
                M[i, j] = h[k]
    return complex(factor * np.linalg.det(M))


def schur_eval(weight: Sequence[int], eigenvalues, confluence_tol: float = DEFAULT.confluence_tol) -> complex:
    """Schur polynomial ``s_weight`` at unit-modulus arguments.

    Uses the bialternant unless two arguments are within ``confluence_tol``
    of each other in angle, where it switches to Jacobi-Trudi.
    """
    x = np.asarray(eigenvalues, dtype=complex).ravel()
    if np.any(np.abs(np.abs(x) - 1.0) > 1e-8):
        raise ValidationError("schur_eval expects unit-modulus arguments")
    ang = np.angle(x)
    d = np.abs(ang[:, None] - ang[None, :])
    d = np.minimum(d, 2 * np.pi - d)
    np.fill_diagonal(d, np.inf)
    if len(x) > 1 and float(np.min(d)) < confluence_tol:
        return schur_jacobi_trudi(weight, x)
    return schur_bialternant(weight, x)


def su2_character(n_char: int, t: complex) -> complex:
    """``sum_{k=0}^{-n} t^{-n - 2k}``: the SU(2) character of dimension ``-n + 1``."""
    if n_char >= 0:
        raise ValidationError(f"n_char must be negative, got {n_char}")
    t = complex(t)
    return complex(sum(t ** (-n_char - 2 * k) for k in range(-n_char + 1)))


def dual_character(weight: Sequence[int], h) -> complex:
    """Character of the dual representation at unitary ``h``: ``conj(s_weight(eig h))``."""
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    if float(np.linalg.norm(dagger(h) @ h - np.eye(n))) > 1e-8:
        raise ValidationError("dual_character expects a unitary matrix")
    eig = np.linalg.eigvals(h)
    eig = eig / np.abs(eig)
    return complex(np.conj(schur_eval(weight, eig)))
