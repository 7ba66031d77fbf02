"""Coadjoint orbits of U(n) as isospectral sets of skew-Hermitian matrices.

A quantizable orbit is fixed by multiplicities ``(n_1, ..., n_k)`` and
distinct integers ``(m_1 > ... > m_k)``; its base point is

    D = diag(i p_1 (n_1 times), ..., i p_k (n_k times)),   p_j = -m_j / (2 pi),

and every other point is ``N = g D g^dagger``. The functional paired with
``N`` is ``Y -> tr(N Y)``, the infinitesimal action is ``X_A(N) = [A, N]`` and
the Kirillov-Kostant-Souriau form reads ``omega_N([A,N], [B,N]) = tr(N [A, B])``.

Hamiltonians use ``f_A(N) = SIGN * tr(N A)`` with ``SIGN = -1``, which is the
sign for which ``iota_{X_A} omega = -d f_A``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import (
    CapDegeneracyError,
    DegenerateInputError,
    InvalidTangentError,
    QuadratureFailure,
    ValidationError,
)
from .liecore import (
    as_rng,
    check_skew_hermitian,
    dagger,
    eig_skew_hermitian,
    random_haar_unitary,
)
from .numerics import DEFAULT, Numerics

SIGN = -1

__all__ = [
    "SIGN",
    "OrbitSpec",
    "OrbitPoint",
    "TangentVector",
    "make_orbit",
    "base_point",
    "random_orbit_point",
    "spectral_projection",
    "project_tangent",
    "ad_solve",
    "kks_eval",
    "hamiltonian",
    "hamiltonian_normalized",
    "barycenter",
    "torus_fixed_points",
    "VertexReport",
    "vertex_lattice_check",
    "Surface",
    "cap_surface",
    "cap_for_loop",
    "sphere_surface",
    "AreaConvergence",
    "area_convergence",
    "symplectic_area",
    "grid_area",
]


def _as_int(value, what: str) -> int:
    if isinstance(value, (bool, np.bool_)):
        raise ValidationError(f"{what} must be an integer, got {value!r}")
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)) and float(value).is_integer():
        return int(value)
    raise ValidationError(f"{what} must be an integer, got {value!r}")


@dataclass(frozen=True)
class OrbitSpec:
    """A quantizable coadjoint orbit ``U(n) / U(n_1) x ... x U(n_k)``."""

    multiplicities: tuple[int, ...]
    char_ints: tuple[int, ...]

    def __post_init__(self):
        mults = tuple(_as_int(x, "multiplicity") for x in self.multiplicities)
        ints = tuple(_as_int(x, "char_int") for x in self.char_ints)
        if not mults:
            raise ValidationError("an orbit needs at least one block")
        if len(mults) != len(ints):
            raise ValidationError(
                f"{len(mults)} multiplicities but {len(ints)} char_ints"
            )
        if any(x <= 0 for x in mults):
            raise ValidationError(f"multiplicities must be positive, got {mults}")
        if len(set(ints)) != len(ints):
            raise ValidationError(f"char_ints must be pairwise distinct, got {ints}")
        object.__setattr__(self, "multiplicities", mults)
        object.__setattr__(self, "char_ints", ints)

    @property
    def n(self) -> int:
        return int(sum(self.multiplicities))

    @property
    def k(self) -> int:
        return len(self.multiplicities)

    @property
    def spectrum_values(self) -> np.ndarray:
        """The ``p_j = -m_j / 2 pi``, one per block."""
        return -np.asarray(self.char_ints, dtype=float) / (2 * np.pi)

    @property
    def labels(self) -> np.ndarray:
        """Block index of every diagonal slot of ``D``."""
        return np.repeat(np.arange(self.k), self.multiplicities)

    @property
    def diagonal(self) -> np.ndarray:
        return self.spectrum_values[self.labels]

    @property
    def blocks(self) -> list[slice]:
        edges = np.concatenate([[0], np.cumsum(self.multiplicities)])
        return [slice(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]

    @property
    def D(self) -> np.ndarray:
        return np.diag(1j * self.diagonal)

    @property
    def sorted_labels(self) -> np.ndarray:
        """Block labels in the order of imaginary part descending."""
        order = np.argsort(-self.spectrum_values, kind="stable")
        return np.repeat(order, np.asarray(self.multiplicities)[order])

    @property
    def sorted_spectrum(self) -> np.ndarray:
        """Imaginary parts of the spectrum, descending (the order of ``eig_skew_hermitian``)."""
        return self.spectrum_values[self.sorted_labels]

    @cached_property
    def inverse_gaps(self) -> np.ndarray:
        """``1 / (lam_k - lam_j)`` for the sorted spectrum, zero on equal-eigenvalue blocks."""
        lab = self.sorted_labels
        lam = 1j * self.sorted_spectrum
        diff = lam[None, :] - lam[:, None]
        off = lab[:, None] != lab[None, :]
        return np.where(off, 1.0 / np.where(off, diff, 1.0), 0.0)

    @cached_property
    def offblock_mask(self) -> np.ndarray:
        lab = self.sorted_labels
        return lab[:, None] != lab[None, :]

    @property
    def is_regular(self) -> bool:
        return all(x == 1 for x in self.multiplicities)


def make_orbit(multiplicities: Sequence[int], char_ints: Sequence[int], n: int | None = None) -> OrbitSpec:
    spec = OrbitSpec(tuple(multiplicities), tuple(char_ints))
    if n is not None and spec.n != n:
        raise ValidationError(f"multiplicities sum to {spec.n}, expected {n}")
    return spec


def _spectrum_defect(spec: OrbitSpec, N) -> float:
    lam, _ = eig_skew_hermitian(N)
    return float(np.max(np.abs(lam.imag - spec.sorted_spectrum)))


@dataclass(frozen=True, eq=False)
class OrbitPoint:
    """A point ``N = g D g^dagger`` of the orbit."""

    orbit: OrbitSpec
    N: np.ndarray
    check: bool = field(default=True, repr=False)
    tol: float = field(default=DEFAULT.spectrum_tol, repr=False)

    def __post_init__(self):
        N = check_skew_hermitian(self.N, tol=max(self.tol, 1e-12))
        if N.shape[0] != self.orbit.n:
            raise ValidationError(f"point has dimension {N.shape[0]}, orbit has {self.orbit.n}")
        object.__setattr__(self, "N", N)
        if self.check:
            defect = _spectrum_defect(self.orbit, N)
            if defect > self.tol:
                raise ValidationError(f"point is off the orbit (spectrum defect {defect:.3e})")

    @cached_property
    def frame(self) -> np.ndarray:
        """Unitary ``V`` with ``N = V diag(i * sorted_spectrum) V^dagger``."""
        return eig_skew_hermitian(self.N)[1]

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return eig_skew_hermitian(self.N)[0]


def base_point(spec: OrbitSpec) -> OrbitPoint:
    return OrbitPoint(spec, spec.D)


def random_orbit_point(spec: OrbitSpec, seed=None) -> OrbitPoint:
    U = random_haar_unitary(spec.n, seed)
    N = U @ spec.D @ dagger(U)
    return OrbitPoint(spec, 0.5 * (N - dagger(N)))


def _as_matrix(x) -> np.ndarray:
    return x.N if isinstance(x, OrbitPoint) else np.asarray(x, dtype=complex)


# --- tangent vectors and the KKS form -------------------------------------


def _tangency_defect(base: OrbitPoint, xi) -> float:
    V = base.frame
    xt = dagger(V) @ xi @ V
    return float(np.linalg.norm(np.where(base.orbit.offblock_mask, 0.0, xt)))


@dataclass(frozen=True, eq=False)
class TangentVector:
    """A tangent vector ``xi = [A, N]`` at ``base``."""

    base: OrbitPoint
    xi: np.ndarray
    tol: float = field(default=DEFAULT.tangent_tol, repr=False)

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=complex)
        if xi.shape != self.base.N.shape:
            raise ValidationError(f"tangent vector has shape {xi.shape}, base has {self.base.N.shape}")
        defect = _tangency_defect(self.base, xi)
        if defect > self.tol * max(1.0, float(np.linalg.norm(xi))):
            raise InvalidTangentError(f"not tangent to the orbit (block defect {defect:.3e})")
        object.__setattr__(self, "xi", xi)

    @classmethod
    def of_generator(cls, base: OrbitPoint, A) -> "TangentVector":
        """The fundamental vector ``X_A(N) = [A, N]``."""
        A = np.asarray(A, dtype=complex)
        return cls(base, A @ base.N - base.N @ A)


def project_tangent(base: OrbitPoint, u) -> np.ndarray:
    """Zero the equal-eigenvalue blocks of ``u`` in the eigenbasis of ``base``."""
    V = base.frame
    ut = dagger(V) @ np.asarray(u, dtype=complex) @ V
    return V @ np.where(base.orbit.offblock_mask, ut, 0.0) @ dagger(V)


def _check_gaps(base: OrbitPoint, tol: float):
    spec = base.orbit
    w = base.eigenvalues.imag
    lab = spec.sorted_labels
    boundary = lab[1:] != lab[:-1]
    if boundary.any():
        gap = float(np.min((w[:-1] - w[1:])[boundary]))
        if gap <= tol:
            raise DegenerateInputError(f"eigenvalue gap {gap:.3e} at a degenerate point")


def ad_solve(zeta: TangentVector, tol: float = DEFAULT.gap_tol) -> np.ndarray:
    """Minimal-norm ``B`` with ``[B, N] = zeta``.

    In the eigenbasis of ``N``, ``B_jk = zeta_jk / (lam_k - lam_j)`` off the
    equal-eigenvalue blocks and zero on them.
    """
    base = zeta.base
    _check_gaps(base, tol)
    V = base.frame
    zt = dagger(V) @ zeta.xi @ V
    return V @ (zt * base.orbit.inverse_gaps) @ dagger(V)


def _omega_in_frames(Vd, V, u, v, inverse_gaps):
    """Batched ``omega_P(u, v) = -Re tr(ad^{-1}(v) u)`` given eigenframes of ``P``."""
    ut = Vd @ u @ V
    vt = Vd @ v @ V
    return -np.real(np.sum(vt * inverse_gaps * np.swapaxes(ut, -1, -2), axis=(-2, -1)))


def kks_eval(xi: TangentVector, zeta: TangentVector) -> float:
    """The KKS form ``omega_N(xi, zeta)``, computed as ``-Re tr(B xi)`` with ``[B, N] = zeta``."""
    if xi.base is not zeta.base and not np.allclose(xi.base.N, zeta.base.N, atol=1e-12):
        raise ValidationError("tangent vectors live at different points")
    B = ad_solve(zeta)
    return float(-np.real(np.trace(B @ xi.xi)))


# --- Hamiltonians and the moment map --------------------------------------


def barycenter(spec: OrbitSpec) -> np.ndarray:
    """Haar average of ``g D g^dagger``, which is ``(tr D / n) I``."""
    return (np.trace(spec.D) / spec.n) * np.eye(spec.n)


def hamiltonian(spec: OrbitSpec, A, N) -> float | np.ndarray:
    """Equivariant moment-map Hamiltonian ``f_A(N) = SIGN * Re tr(N A)``.

    Accepts stacks of ``A`` and ``N`` with matching leading shape.
    """
    N = _as_matrix(N)
    A = np.asarray(A, dtype=complex)
    val = SIGN * np.real(np.einsum("...ij,...ji->...", N, A))
    return float(val) if np.ndim(val) == 0 else val


def hamiltonian_normalized(spec: OrbitSpec, A, N) -> float | np.ndarray:
    """Hamiltonian with zero orbit average: the barycenter is subtracted from ``N``."""
    N = _as_matrix(N) - barycenter(spec)
    A = np.asarray(A, dtype=complex)
    val = SIGN * np.real(np.einsum("...ij,...ji->...", N, A))
    return float(val) if np.ndim(val) == 0 else val


# --- torus fixed points and vertices --------------------------------------


def _multiset_permutations(labels: Sequence[int]):
    counts: dict[int, int] = {}
    for x in labels:
        counts[x] = counts.get(x, 0) + 1
    keys = sorted(counts)
    out: list[int] = []

    def rec():
        if len(out) == len(labels):
            yield tuple(out)
            return
        for key in keys:
            if counts[key]:
                counts[key] -= 1
                out.append(key)
                yield from rec()
                out.pop()
                counts[key] += 1

    yield from rec()


def torus_fixed_points(spec: OrbitSpec) -> list[OrbitPoint]:
    """Diagonal points of the orbit, the fixed points of the maximal torus.

    There are ``n! / (n_1! ... n_k!)`` of them; ``D`` itself comes first.
    """
    p = spec.spectrum_values
    return [OrbitPoint(spec, np.diag(1j * p[list(perm)])) for perm in _multiset_permutations(spec.labels)]


@dataclass(frozen=True)
class VertexReport:
    passed: bool
    vertices: np.ndarray  # (F, n) moment-map vertices, real coordinates p_sigma
    differences: np.ndarray  # (F, F, n) rounded 2 pi (v - v')
    max_residual: float
    shifted_vertices: np.ndarray  # 2 pi (v - v_0), integral when passed


def vertex_lattice_check(spec: OrbitSpec, tol: float = 1e-9) -> VertexReport:
    """Check that differences of vertices lie on the integer lattice (scaled by ``2 pi``)."""
    p = np.asarray(spec.spectrum_values, dtype=float)
    verts = np.array([p[list(perm)] for perm in _multiset_permutations(spec.labels)])
    scaled = 2 * np.pi * (verts[:, None, :] - verts[None, :, :])
    nearest = np.rint(scaled)
    residual = float(np.max(np.abs(scaled - nearest))) if scaled.size else 0.0
    return VertexReport(
        passed=residual <= tol,
        vertices=verts,
        differences=nearest.astype(int),
        max_residual=residual,
        shifted_vertices=2 * np.pi * (verts - verts[0]),
    )


# --- surfaces, caps and symplectic area -----------------------------------


def _eig_frames(points):
    _, V = eig_skew_hermitian(points)
    return V


def spectral_projection(spec: OrbitSpec, M):
    """Replace the sorted spectrum of skew-Hermitian ``M`` (or a stack) by the orbit's.

    Returns ``(points, frames, relgap, absgap)``. ``absgap`` is, per matrix,
    the smallest eigenvalue gap of ``M`` across distinct target values and
    ``relgap`` the smallest such gap divided by the matching target gap.
    """
    lam, V = eig_skew_hermitian(M)
    target = 1j * spec.sorted_spectrum
    points = (V * target[..., None, :]) @ dagger(V)
    lab = spec.sorted_labels
    boundary = np.nonzero(lab[1:] != lab[:-1])[0]
    if boundary.size:
        w = lam.imag
        gaps = w[..., boundary] - w[..., boundary + 1]
        tgap = spec.sorted_spectrum[boundary] - spec.sorted_spectrum[boundary + 1]
        relgap = np.min(gaps / tgap, axis=-1)
        absgap = np.min(gaps, axis=-1)
    else:
        relgap = np.full(lam.shape[:-1], np.inf)
        absgap = relgap
    return points, V, relgap, absgap


@dataclass(frozen=True, eq=False)
class Surface:
    """A parametrised surface ``[0,1]^2 -> orbit`` that can be sampled on any grid.

    ``sampler(S, T)`` returns the ``(S+1, T+1, n, n)`` point grid and either
    the matching eigenframes or ``None``.
    """

    spec: OrbitSpec
    sampler: Callable[[int, int], tuple[np.ndarray, np.ndarray | None]]
    grid: tuple[int, int]
    label: str = "surface"

    def sample(self, S: int | None = None, T: int | None = None):
        S = self.grid[0] if S is None else S
        T = self.grid[1] if T is None else T
        points, frames = self.sampler(S, T)
        if frames is None:
            frames = _eig_frames(points)
        return points, frames


@dataclass(frozen=True, eq=False)
class CapSurface(Surface):
    base: np.ndarray | None = None
    points: np.ndarray | None = None
    frames: np.ndarray | None = None
    min_relgap: float = np.inf

    def point(self, i: int, j: int) -> OrbitPoint:
        return OrbitPoint(self.spec, self.points[i, j])


def _smoothstep(s):
    return 3 * s**2 - 2 * s**3


def _loop_sampler(loop):
    """Normalise a loop to a function ``T -> (T+1, n, n)`` points at ``t_j = j / T``."""
    if callable(loop):
        return loop
    pts = np.asarray(loop, dtype=complex)
    L = pts.shape[0] - 1

    def sample(T: int):
        if T <= 0 or L % T:
            raise QuadratureFailure(
                f"discrete loop with {L} intervals cannot be sampled on {T} intervals"
            )
        return pts[:: L // T]

    return sample


def cap_surface(
    spec: OrbitSpec,
    loop,
    base,
    grid: tuple[int, int] | None = None,
    numerics: Numerics = DEFAULT,
) -> CapSurface:
    """Cap ``c(s, t) = Proj(spectrum)((1 - sigma(s)) base + sigma(s) loop(t))``.

    ``sigma`` is the smoothstep ``3s^2 - 2s^3``. ``loop`` is either an array of
    points ``(L+1, n, n)`` on a uniform grid of ``[0, 1]`` or a callable that
    returns such an array for a requested number of intervals. Raises
    ``CapDegeneracyError`` when an interpolant nearly loses a spectral gap.
    """
    grid = tuple(numerics.cap_grid if grid is None else grid)
    base_m = _as_matrix(base)
    sample_loop = _loop_sampler(loop)
    gap_tol = numerics.cap_gap_tol

    first = sample_loop(grid[1])
    closure = float(np.linalg.norm(first[0] - first[-1]))
    if closure > 1e-8:
        raise ValidationError(f"loop is not closed (|first - last| = {closure:.3e})")
    if _spectrum_defect(spec, base_m) > numerics.spectrum_tol:
        raise ValidationError("cap base is not on the orbit")

    def sampler(S: int, T: int):
        s = _smoothstep(np.linspace(0.0, 1.0, S + 1))
        gamma = sample_loop(T)
        M = (1 - s)[:, None, None, None] * base_m + s[:, None, None, None] * gamma[None]
        points, frames, _, absgap = spectral_projection(spec, M)
        worst = float(np.min(absgap))
        if worst < gap_tol:
            raise CapDegeneracyError(f"cap interpolant spectral gap collapsed to {worst:.3e}")
        # exact rows: the base and the loop itself
        points[0] = base_m
        points[-1] = gamma
        return points, frames

    s = _smoothstep(np.linspace(0.0, 1.0, grid[0] + 1))
    M = (1 - s)[:, None, None, None] * base_m + s[:, None, None, None] * first[None]
    points, frames, relgap, absgap = spectral_projection(spec, M)
    if float(np.min(absgap)) < gap_tol:
        raise CapDegeneracyError(f"cap interpolant spectral gap collapsed to {float(np.min(absgap)):.3e}")
    points[0] = base_m
    points[-1] = first
    return CapSurface(
        spec=spec,
        sampler=sampler,
        grid=grid,
        label="cap",
        base=base_m,
        points=points,
        frames=frames,
        min_relgap=float(np.min(relgap)),
    )


def cap_for_loop(
    spec: OrbitSpec,
    loop,
    numerics: Numerics = DEFAULT,
    base=None,
    seed=None,
    well_conditioned: float = 0.1,
) -> CapSurface:
    """Build a cap over ``loop``, choosing a base point when none is given.

    Candidates are tried in order: the spectral projection of the loop's
    centroid, the loop's first point, then ``numerics.cap_attempts`` Haar
    random points. The first candidate whose interpolants keep at least
    ``well_conditioned`` of the target spectral gaps wins; otherwise the best
    non-degenerate one is used.
    """
    if base is not None:
        return cap_surface(spec, loop, base, numerics=numerics)

    first = _loop_sampler(loop)(numerics.cap_grid[1])
    candidates = []
    centroid = np.mean(first[:-1], axis=0)
    proj, _, relgap, _ = spectral_projection(spec, centroid)
    if np.isfinite(relgap) and relgap > 1e-6:
        candidates.append(proj)
    candidates.append(first[0])
    rng = as_rng(numerics.seed if seed is None else seed)
    candidates.extend(random_orbit_point(spec, rng).N for _ in range(numerics.cap_attempts))

    best = None
    for cand in candidates:
        try:
            cap = cap_surface(spec, loop, cand, numerics=numerics)
        except CapDegeneracyError:
            continue
        if cap.min_relgap >= well_conditioned:
            return cap
        if best is None or cap.min_relgap > best.min_relgap:
            best = cap
    if best is None:
        raise CapDegeneracyError(f"no non-degenerate cap after {len(candidates)} base points")
    return best


def sphere_surface(spec: OrbitSpec, grid: tuple[int, int] = (64, 128)) -> Surface:
    """The whole two-sphere orbit of u(2), swept by polar angle ``pi s`` and azimuth ``2 pi t``."""
    if spec.n != 2 or spec.k != 2:
        raise ValidationError("sphere_surface needs a regular orbit in u(2)")
    D = spec.D

    def sampler(S: int, T: int):
        th = np.pi * np.linspace(0.0, 1.0, S + 1)[:, None]
        ph = 2 * np.pi * np.linspace(0.0, 1.0, T + 1)[None, :]
        c, s = np.cos(th / 2), np.sin(th / 2)
        R = np.empty(np.broadcast(th, ph).shape + (2, 2), dtype=complex)
        R[..., 0, 0] = c
        R[..., 0, 1] = -np.exp(-1j * ph) * s
        R[..., 1, 0] = np.exp(1j * ph) * s
        R[..., 1, 1] = c
        # R D R^dagger has sorted eigenframe R with columns reordered to match
        order = np.argsort(-spec.diagonal, kind="stable")
        return R @ D @ dagger(R), R[..., :, order]

    return Surface(spec, sampler, tuple(grid), label="sphere")


def _area_kernel(spec: OrbitSpec, P, V, rule: str) -> float:
    Vd = dagger(V)
    g = spec.inverse_gaps

    def om(i, u, v):
        return _omega_in_frames(Vd[i], V[i], u, v, g)

    c00 = (slice(0, -1), slice(0, -1))
    c10 = (slice(1, None), slice(0, -1))
    c11 = (slice(1, None), slice(1, None))
    c01 = (slice(0, -1), slice(1, None))
    p00, p10, p11, p01 = P[c00], P[c10], P[c11], P[c01]
    if rule == "vertex":
        w = om(c00, p10 - p00, p11 - p00) + om(c00, p11 - p00, p01 - p00)
        return 0.5 * float(np.sum(w))
    if rule == "symmetric":
        # triangle (00, 10, 11) and triangle (00, 11, 01), each averaged over its vertices
        w = (
            om(c00, p10 - p00, p11 - p00)
            + om(c10, p11 - p10, p00 - p10)
            + om(c11, p00 - p11, p10 - p11)
            + om(c00, p11 - p00, p01 - p00)
            + om(c11, p01 - p11, p00 - p11)
            + om(c01, p00 - p01, p11 - p01)
        )
        return float(np.sum(w)) / 6.0
    raise ValidationError(f"unknown area rule {rule!r}")


def grid_area(spec: OrbitSpec, points, frames, rule: str = "symmetric", chunk: int = 32) -> float:
    """Triangulated KKS area of one sampled grid; rows are processed in chunks."""
    S = points.shape[0] - 1
    total = 0.0
    for i0 in range(0, S, chunk):
        i1 = min(i0 + chunk, S)
        total += _area_kernel(spec, points[i0 : i1 + 1], frames[i0 : i1 + 1], rule)
    return total


_RULE_ORDERS = {"vertex": (1, 2, 3), "symmetric": (2, 3, 4)}


@dataclass(frozen=True)
class AreaConvergence:
    value: float
    converged: bool
    grids: list[tuple[int, int]]
    estimates: list[float]
    extrapolated: list[float]

    @property
    def deltas(self) -> list[float]:
        return [float("nan")] + [abs(b - a) for a, b in zip(self.estimates, self.estimates[1:])]

    def rows(self):
        """Rows ``(grid, area_estimate, delta, extrapolated)`` for the convergence table."""
        return [
            (f"{S}x{T}", est, d, ext)
            for (S, T), est, d, ext in zip(self.grids, self.estimates, self.deltas, self.extrapolated)
        ]


def area_convergence(
    surface: Surface,
    refinement_tol: float = DEFAULT.quad_tol,
    max_refine: int = DEFAULT.max_refine,
    rule: str = DEFAULT.area_rule,
    max_points: int = DEFAULT.max_grid_points,
) -> AreaConvergence:
    """Double the grid until Richardson-extrapolated areas agree to ``refinement_tol``.

    Refinement also stops (unconverged) once a grid would exceed ``max_points``.
    """
    orders = _RULE_ORDERS[rule]
    S0, T0 = surface.grid
    grids, raw, table = [], [], []
    best = []
    for level in range(max_refine + 1):
        S, T = S0 * 2**level, T0 * 2**level
        if level and S * T > max_points:
            break
        if level == 0 and isinstance(surface, CapSurface) and surface.points is not None:
            pts, frs = surface.points, surface.frames
        else:
            pts, frs = surface.sample(S, T)
        a = grid_area(surface.spec, pts, frs, rule)
        grids.append((S, T))
        raw.append(a)
        row = [a]
        for j, p in enumerate(orders[: level]):
            prev = table[-1][j]
            row.append(row[j] + (row[j] - prev) / (2.0**p - 1.0))
        table.append(row)
        best.append(row[-1])
        if level >= 2 and abs(best[-1] - best[-2]) < refinement_tol:
            return AreaConvergence(best[-1], True, grids, raw, best)
    return AreaConvergence(best[-1], False, grids, raw, best)


def symplectic_area(
    surface: Surface,
    refinement_tol: float = DEFAULT.quad_tol,
    max_refine: int = DEFAULT.max_refine,
    rule: str = DEFAULT.area_rule,
    max_points: int = DEFAULT.max_grid_points,
) -> float:
    """Converged integral of the KKS form over ``surface``.

    Raises ``QuadratureFailure`` if the extrapolated totals have not settled
    after ``max_refine`` doublings.
    """
    conv = area_convergence(surface, refinement_tol, max_refine, rule, max_points)
    if not conv.converged:
        change = abs(conv.extrapolated[-1] - conv.extrapolated[-2]) if len(conv.grids) > 1 else float("nan")
        raise QuadratureFailure(
            f"area did not converge after {len(conv.grids) - 1} doublings (last change {change:.3e})"
        )
    return conv.value
