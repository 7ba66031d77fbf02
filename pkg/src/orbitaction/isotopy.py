"""Time-dependent generators ``t -> A_t`` in u(n) and the Lax equation ``h' h^{-1} = A_t``.

A :class:`GeneratorPath` is a finite sum ``sum_i c_i(t) B_i`` of fixed
skew-Hermitian matrices with closed-form real coefficients. The solver is the
fourth-order two-node Gauss-Legendre Magnus scheme, so every step is an exact
group element ``expm_skew(Omega) h`` and no drift correction is needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.integrate import simpson

from .errors import InternalConsistencyError, ValidationError
from .liecore import (
    as_rng,
    check_skew_hermitian,
    dagger,
    expm_skew,
    random_haar_unitary,
    random_skew_hermitian,
    unitarity_defect,
)
from .numerics import DEFAULT, Numerics
from .orbit import OrbitPoint, OrbitSpec, _spectrum_defect, random_orbit_point

__all__ = [
    "Constant",
    "Cosine",
    "Sine",
    "PiecewiseConstant",
    "Window",
    "GeneratorPath",
    "GroupTrajectory",
    "ClosureReport",
    "sample_generator",
    "lax_solve",
    "trajectory",
    "closure_check",
    "conjugate_deformation",
    "concatenate",
    "aligned_steps",
    "segment_integral",
    "central_loop",
    "su2_pi_loop",
    "diagonal_loop",
    "fourier_path",
    "random_closed_loop",
]


# --- coefficients ----------------------------------------------------------
# Each coefficient maps an array of times to real values. ``left=True`` asks
# for the left limit at a breakpoint; continuous coefficients ignore it.


@dataclass(frozen=True)
class Constant:
    c: float = 1.0

    def __call__(self, t, left: bool = False):
        return np.full(np.shape(t), float(self.c))

    @property
    def breakpoints(self) -> tuple[Fraction, ...]:
        return ()


@dataclass(frozen=True)
class Cosine:
    """``amplitude * cos(2 pi k t)``"""

    k: int
    amplitude: float = 1.0

    def __call__(self, t, left: bool = False):
        return self.amplitude * np.cos(2 * np.pi * self.k * np.asarray(t, dtype=float))

    @property
    def breakpoints(self) -> tuple[Fraction, ...]:
        return ()


@dataclass(frozen=True)
class Sine:
    """``amplitude * sin(2 pi k t)``"""

    k: int
    amplitude: float = 1.0

    def __call__(self, t, left: bool = False):
        return self.amplitude * np.sin(2 * np.pi * self.k * np.asarray(t, dtype=float))

    @property
    def breakpoints(self) -> tuple[Fraction, ...]:
        return ()


@dataclass(frozen=True)
class PiecewiseConstant:
    """``values[j]`` on ``[j/L, (j+1)/L)`` for ``L = len(values)``; right-continuous."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        if not vals:
            raise ValidationError("piecewise_constant needs at least one value")
        object.__setattr__(self, "values", vals)

    def __call__(self, t, left: bool = False):
        t = np.asarray(t, dtype=float)
        L = len(self.values)
        x = t * L
        idx = np.ceil(x - 1e-12) - 1 if left else np.floor(x + 1e-12)
        idx = np.clip(idx, 0, L - 1).astype(int)
        return np.asarray(self.values)[idx]

    @property
    def breakpoints(self) -> tuple[Fraction, ...]:
        L = len(self.values)
        return tuple(Fraction(j, L) for j in range(1, L))


@dataclass(frozen=True)
class Window:
    """``inner`` squeezed into ``[start, stop)`` and scaled by ``1 / (stop - start)``; zero elsewhere.

    This is how loops are concatenated: the generator of ``psi * xi`` is
    ``2 A(2t)`` on ``[0, 1/2)`` and ``2 B(2t - 1)`` on ``[1/2, 1]``.
    """

    inner: object
    start: Fraction
    stop: Fraction

    def __post_init__(self):
        object.__setattr__(self, "start", Fraction(self.start))
        object.__setattr__(self, "stop", Fraction(self.stop))
        if not 0 <= self.start < self.stop <= 1:
            raise ValidationError(f"bad window [{self.start}, {self.stop})")

    def __call__(self, t, left: bool = False):
        t = np.asarray(t, dtype=float)
        a, b = float(self.start), float(self.stop)
        width = b - a
        if left:
            inside = (t > a + 1e-12) & (t <= b + 1e-12)
        else:
            inside = (t >= a - 1e-12) & (t < b - 1e-12)
            if self.stop == 1:
                inside |= t >= b - 1e-12
        local = np.clip((t - a) / width, 0.0, 1.0)
        return np.where(inside, self.inner(local, left=left) / width, 0.0)

    @property
    def breakpoints(self) -> tuple[Fraction, ...]:
        width = self.stop - self.start
        pts = {self.start + width * b for b in self.inner.breakpoints}
        pts |= {self.start, self.stop}
        return tuple(sorted(p for p in pts if 0 < p < 1))


# --- paths -----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GeneratorPath:
    """``A_t = sum_i coefficient_i(t) basis_i``."""

    n: int
    terms: tuple = field(default_factory=tuple)

    def __post_init__(self):
        terms = []
        for basis, coeff in self.terms:
            B = check_skew_hermitian(basis, tol=1e-10)
            if B.shape[0] != self.n:
                raise ValidationError(f"basis of dimension {B.shape[0]} in a path of dimension {self.n}")
            if not callable(coeff):
                raise ValidationError(f"coefficient {coeff!r} is not callable")
            terms.append((B, coeff))
        object.__setattr__(self, "terms", tuple(terms))

    def __call__(self, t, left: bool = False) -> np.ndarray:
        """Generator at time(s) ``t``; shape ``t.shape + (n, n)``."""
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape + (self.n, self.n), dtype=complex)
        for B, coeff in self.terms:
            out += np.asarray(coeff(t, left=left))[..., None, None] * B
        return out

    @property
    def breakpoints(self) -> tuple[Fraction, ...]:
        pts = set()
        for _, coeff in self.terms:
            pts.update(coeff.breakpoints)
        return tuple(sorted(pts))

    def conjugated(self, U) -> "GeneratorPath":
        U = np.asarray(U, dtype=complex)
        return GeneratorPath(self.n, tuple((U @ B @ dagger(U), c) for B, c in self.terms))


def sample_generator(path: GeneratorPath, t: float) -> np.ndarray:
    if not 0.0 <= t <= 1.0:
        raise ValidationError(f"t = {t} is outside [0, 1]")
    return path(t)


def concatenate(first: GeneratorPath, second: GeneratorPath) -> GeneratorPath:
    """Generator of the loop product: ``first`` on ``[0, 1/2]`` then ``second`` on ``[1/2, 1]``."""
    if first.n != second.n:
        raise ValidationError("cannot concatenate paths of different dimension")
    half = Fraction(1, 2)
    terms = [(B, Window(c, 0, half)) for B, c in first.terms]
    terms += [(B, Window(c, half, 1)) for B, c in second.terms]
    return GeneratorPath(first.n, tuple(terms))


def conjugate_deformation(path: GeneratorPath, C, s: float) -> GeneratorPath:
    """The path ``t -> e^{sC} A_t e^{-sC}``, conjugating each basis matrix."""
    C = check_skew_hermitian(C, tol=1e-10)
    return path.conjugated(expm_skew(s * C))


def aligned_steps(path: GeneratorPath, at_least: int, multiple_of: int = 2) -> int:
    """Smallest step count ``>= at_least`` that is a multiple of ``multiple_of`` and
    puts every breakpoint of ``path`` on the grid."""
    denom = 1
    for b in path.breakpoints:
        denom = np.lcm(denom, b.denominator)
    unit = int(np.lcm(denom, multiple_of))
    return int(unit * -(-max(at_least, 1) // unit))


# --- the Lax equation ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GroupTrajectory:
    times: np.ndarray
    samples: np.ndarray  # (steps + 1, n, n), samples[0] = I
    order: int
    drift: float

    @property
    def end(self) -> np.ndarray:
        return self.samples[-1]

    @property
    def steps(self) -> int:
        return len(self.times) - 1


_GAUSS = np.sqrt(3.0) / 6.0


def lax_solve(path: GeneratorPath, steps: int, order: int = 4) -> GroupTrajectory:
    """Solve ``h' h^{-1} = A_t``, ``h_0 = I`` on a uniform grid of ``steps`` intervals.

    ``order=4`` is the two-node Gauss-Legendre Magnus truncation
    ``Omega = dt/2 (A1 + A2) + sqrt(3) dt^2 / 12 [A2, A1]``; ``order=2`` is the
    exponential midpoint rule, kept for order cross-checks. Piecewise
    coefficients must have their breakpoints on the grid.
    """
    if steps < 2:
        raise ValidationError(f"need at least 2 steps, got {steps}")
    for b in path.breakpoints:
        if (b * steps).denominator != 1:
            raise ValidationError(f"breakpoint t = {b} is not on a grid of {steps} steps")
    dt = 1.0 / steps
    t0 = np.arange(steps) * dt
    if order == 4:
        A1 = path(t0 + (0.5 - _GAUSS) * dt)
        A2 = path(t0 + (0.5 + _GAUSS) * dt)
        omega = 0.5 * dt * (A1 + A2) + (np.sqrt(3.0) * dt**2 / 12.0) * (A2 @ A1 - A1 @ A2)
    elif order == 2:
        omega = dt * path(t0 + 0.5 * dt)
    else:
        raise ValidationError(f"unsupported Magnus order {order}")
    factors = expm_skew(omega)
    samples = np.empty((steps + 1, path.n, path.n), dtype=complex)
    h = np.eye(path.n, dtype=complex)
    samples[0] = h
    for k in range(steps):
        h = factors[k] @ h
        samples[k + 1] = h
    times = np.linspace(0.0, 1.0, steps + 1)
    return GroupTrajectory(times, samples, order, unitarity_defect(samples))


def trajectory(traj: GroupTrajectory, x, tol: float = 1e-9) -> np.ndarray:
    """Orbit curve ``h_t x h_t^dagger`` on the trajectory grid, shape ``(steps+1, n, n)``."""
    point = x if isinstance(x, OrbitPoint) else None
    N = x.N if point is not None else np.asarray(x, dtype=complex)
    if N.shape[-1] != traj.samples.shape[-1]:
        raise ValidationError("dimension mismatch between trajectory and point")
    H = traj.samples
    gamma = H @ N @ dagger(H)
    gamma = 0.5 * (gamma - dagger(gamma))
    if point is not None:
        defect = max(_spectrum_defect(point.orbit, g) for g in gamma[:: max(1, len(gamma) // 64)])
        defect = max(defect, _spectrum_defect(point.orbit, gamma[-1]))
        if defect > tol:
            raise InternalConsistencyError(f"trajectory left the orbit (spectrum defect {defect:.3e})")
    return gamma


@dataclass(frozen=True)
class ClosureReport:
    closed: bool
    residual: float
    scalar: bool
    in_stabilizer: bool

    def __bool__(self):
        return self.closed


def closure_check(
    traj: GroupTrajectory,
    spec: OrbitSpec,
    n_probes: int = 4,
    seed=None,
    numerics: Numerics = DEFAULT,
) -> ClosureReport:
    """Does ``h_1`` act trivially on the orbit?

    The residual is the largest ``|h_1 N h_1^dagger - N|_F`` over ``n_probes``
    random orbit points. Also reports whether ``h_1`` is scalar and whether it
    is block diagonal for the eigenspaces of ``D`` (i.e. lies in the stabilizer).
    """
    h1 = traj.end
    rng = as_rng(numerics.seed if seed is None else seed)
    residual = 0.0
    for _ in range(n_probes):
        N = random_orbit_point(spec, rng).N
        residual = max(residual, float(np.linalg.norm(h1 @ N @ dagger(h1) - N)))
    n = h1.shape[0]
    scalar = float(np.linalg.norm(h1 - (np.trace(h1) / n) * np.eye(n))) < numerics.scalar_tol
    lab = spec.labels
    off = lab[:, None] != lab[None, :]
    in_stab = float(np.linalg.norm(np.where(off, h1, 0.0))) < numerics.block_tol
    return ClosureReport(residual < numerics.closure_tol, residual, scalar, in_stab)


def segment_integral(times: np.ndarray, path: GeneratorPath, integrand) -> float:
    """Simpson integral of ``integrand(index_slice, A)`` over the grid, split at breakpoints.

    ``integrand`` receives the grid indices of a segment and the generator
    evaluated there with one-sided limits at the segment ends, so jumps of
    piecewise coefficients never straddle a Simpson panel.
    """
    steps = len(times) - 1
    cuts = [0] + [int(b * steps) for b in path.breakpoints] + [steps]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        idx = np.arange(a, b + 1)
        t = times[idx]
        A = path(t)
        A[-1] = path(t[-1], left=True)
        total += float(simpson(integrand(idx, A), x=t))
    return total


# --- named loops -------------------------------------------------------------


def central_loop(n: int, theta: float, shifts: Sequence[int] | None = None, frame=None) -> GeneratorPath:
    """Constant generator ``2 pi i W diag(theta + s_j) W^dagger``; ends at ``h_1 = e^{2 pi i theta} I``."""
    shifts = np.zeros(n, dtype=int) if shifts is None else np.asarray(shifts)
    if shifts.shape != (n,) or not np.all(np.equal(np.mod(shifts, 1), 0)):
        raise ValidationError(f"shifts must be {n} integers")
    A = np.diag(2j * np.pi * (theta + shifts.astype(float)))
    if frame is not None:
        W = np.asarray(frame, dtype=complex)
        A = W @ A @ dagger(W)
    return GeneratorPath(n, ((A, Constant(1.0)),))


def su2_pi_loop() -> GeneratorPath:
    """``E = pi diag(i, -i)``: a closed loop of the two-sphere with ``e^E = -I``."""
    return GeneratorPath(2, ((np.diag([1j * np.pi, -1j * np.pi]), Constant(1.0)),))


def diagonal_loop(ints: Sequence[int]) -> GeneratorPath:
    """Constant ``2 pi i diag(ints)``; ``h_1 = I``."""
    ints = np.asarray(ints)
    return GeneratorPath(len(ints), ((np.diag(2j * np.pi * ints.astype(float)), Constant(1.0)),))


def fourier_path(n: int, modes: int = 2, seed=None, scale: float = 1.0) -> GeneratorPath:
    """Smooth non-commuting generator ``sum_k cos(2 pi k t) B_k + sin(2 pi k t) C_k`` (generally not closed)."""
    rng = as_rng(seed)
    terms = [(random_skew_hermitian(n, rng, scale), Constant(1.0))]
    for k in range(1, modes + 1):
        terms.append((random_skew_hermitian(n, rng, scale), Cosine(k)))
        terms.append((random_skew_hermitian(n, rng, scale), Sine(k)))
    return GeneratorPath(n, tuple(terms))


def random_closed_loop(n: int, seed=None, pieces: int = 2, theta: float = 0.0, max_int: int = 1) -> GeneratorPath:
    """Piecewise-constant loop whose pieces are rotations about random frames.

    Piece ``j`` runs ``L * 2 pi i W_j diag(theta / L + k_j) W_j^dagger`` for a
    duration ``1/L``, with integer ``k_j``; the product is ``e^{2 pi i theta} I``.
    """
    rng = as_rng(seed)
    terms = []
    for j in range(pieces):
        W = random_haar_unitary(n, rng)
        k = rng.integers(-max_int, max_int + 1, size=n)
        while np.all(k == k[0]):
            k = rng.integers(-max_int, max_int + 1, size=n)
        A = W @ np.diag(2j * np.pi * pieces * (theta / pieces + k)) @ dagger(W)
        values = [0.0] * pieces
        values[j] = 1.0
        terms.append((0.5 * (A - dagger(A)), PiecewiseConstant(tuple(values))))
    return GeneratorPath(n, tuple(terms))
