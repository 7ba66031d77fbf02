"""The action integral of a closed loop ``t -> h_t`` acting on a coadjoint orbit.

Three independent routes:

* direct: ``exp(2 pi i (int_S omega - int_0^1 f_t(gamma(t)) dt))`` with ``S`` a
  cap over the orbit curve ``gamma(t) = h_t x h_t^dagger``;
* stabilizer: ``Lambda(h_1)``;
* Weyl: ``chi_{pi*}(h_1) / dim pi`` for regular orbits.

A fourth, for loops that fix a torus fixed point ``x0``, is
``exp(-2 pi i <Phi(x0), int A_t dt>)``.

The Hamiltonian of the direct route is the equivariant moment-map pairing
``f_A(N) = SIGN tr(N A)``, which is the one matched by ``Lambda(h_1)``. The
orbit-normalized variant (barycenter removed) is reported alongside; the two
agree whenever the generator is traceless.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .characters import dual_character, highest_weight_of_orbit, stabilizer_character, weyl_dimension
from .errors import InapplicableError, InternalConsistencyError, NotClosedError, QuadratureFailure, ValidationError
from .isotopy import (
    ClosureReport,
    GeneratorPath,
    GroupTrajectory,
    aligned_steps,
    closure_check,
    concatenate,
    conjugate_deformation,
    lax_solve,
    segment_integral,
    trajectory,
)
from .liecore import as_rng, check_skew_hermitian, dagger
from .numerics import DEFAULT, Numerics
from .orbit import (
    SIGN,
    AreaConvergence,
    OrbitPoint,
    OrbitSpec,
    area_convergence,
    barycenter,
    cap_for_loop,
    hamiltonian,
    hamiltonian_normalized,
    random_orbit_point,
    torus_fixed_points,
)

__all__ = [
    "DirectResult",
    "KappaReport",
    "solve_loop",
    "direct_action",
    "cap_convergence",
    "kappa_direct",
    "kappa_stabilizer",
    "kappa_weyl",
    "kappa_fixed_point",
    "compute_kappa",
    "IndependenceReport",
    "verify_base_point_independence",
    "ProductReport",
    "verify_product",
    "DeformationReport",
    "verify_deformation_derivative",
]


def solve_loop(spec: OrbitSpec, path: GeneratorPath, numerics: Numerics = DEFAULT):
    """Integrate ``path`` on the configured grid and insist the loop is closed on the orbit."""
    if path.n != spec.n:
        raise ValidationError(f"path dimension {path.n} does not match orbit dimension {spec.n}")
    steps = aligned_steps(path, numerics.lax_steps, multiple_of=2)
    traj = lax_solve(path, steps, order=numerics.magnus_order)
    closure = closure_check(traj, spec, seed=numerics.seed, numerics=numerics)
    if not closure.closed:
        raise NotClosedError(f"isotopy is not closed on the orbit (residual {closure.residual:.3e})")
    return traj, closure


@dataclass(frozen=True, eq=False)
class DirectResult:
    kappa: complex
    area: float
    hamiltonian_integral: float
    kappa_normalized: complex
    hamiltonian_integral_normalized: float
    base: np.ndarray
    convergence: AreaConvergence
    closure: ClosureReport
    cap_relgap: float


def _loop_points(path: GeneratorPath, traj: GroupTrajectory, x: OrbitPoint, order: int):
    cache: dict[int, np.ndarray] = {}

    def loop(T: int) -> np.ndarray:
        if T not in cache:
            if traj.steps % T == 0:
                H = traj.samples[:: traj.steps // T]
            else:
                sub = lax_solve(path, aligned_steps(path, T, multiple_of=T), order=order)
                H = sub.samples[:: sub.steps // T]
            g = H @ x.N @ dagger(H)
            cache[T] = 0.5 * (g - dagger(g))
        return cache[T]

    return loop


def _cap_convergence(spec, path, traj, x, numerics, cap_base=None):
    cap = cap_for_loop(spec, _loop_points(path, traj, x, numerics.magnus_order), numerics, base=cap_base)
    conv = area_convergence(cap, numerics.quad_tol, numerics.max_refine, numerics.area_rule, numerics.max_grid_points)
    return cap, conv


def cap_convergence(
    spec: OrbitSpec, path: GeneratorPath, x: OrbitPoint, numerics: Numerics = DEFAULT, cap_base=None
) -> AreaConvergence:
    """Refinement table of the cap area over the orbit curve through ``x``; never raises on non-convergence."""
    traj, _ = solve_loop(spec, path, numerics)
    return _cap_convergence(spec, path, traj, x, numerics, cap_base)[1]


def direct_action(
    spec: OrbitSpec,
    path: GeneratorPath,
    x: OrbitPoint,
    numerics: Numerics = DEFAULT,
    cap_base=None,
) -> DirectResult:
    """Evaluate the action integral along the orbit curve through ``x``."""
    traj, closure = solve_loop(spec, path, numerics)
    gamma = trajectory(traj, x)

    cap, conv = _cap_convergence(spec, path, traj, x, numerics, cap_base)
    if not conv.converged:
        raise QuadratureFailure(
            f"cap area did not converge to {numerics.quad_tol:g} "
            f"(estimates {conv.extrapolated[-3:]})"
        )

    imag = segment_integral(
        traj.times, path, lambda idx, A: np.abs(np.imag(np.einsum("tij,tji->t", gamma[idx], A)))
    )
    if imag > 1e-10 * max(1.0, float(np.max(np.abs(gamma)))):
        raise InternalConsistencyError(f"Hamiltonian pairing has imaginary residue {imag:.3e}")

    ham = segment_integral(traj.times, path, lambda idx, A: hamiltonian(spec, A, gamma[idx]))
    ham_norm = segment_integral(traj.times, path, lambda idx, A: hamiltonian_normalized(spec, A, gamma[idx]))
    area = conv.value
    return DirectResult(
        kappa=complex(np.exp(2j * np.pi * (area - ham))),
        area=area,
        hamiltonian_integral=ham,
        kappa_normalized=complex(np.exp(2j * np.pi * (area - ham_norm))),
        hamiltonian_integral_normalized=ham_norm,
        base=cap.base,
        convergence=conv,
        closure=closure,
        cap_relgap=cap.min_relgap,
    )


def kappa_direct(
    spec: OrbitSpec, path: GeneratorPath, x: OrbitPoint, numerics: Numerics = DEFAULT, cap_base=None
) -> complex:
    return direct_action(spec, path, x, numerics, cap_base).kappa


def kappa_stabilizer(spec: OrbitSpec, path: GeneratorPath, numerics: Numerics = DEFAULT) -> complex:
    traj, _ = solve_loop(spec, path, numerics)
    return stabilizer_character(spec, traj.end, tol=numerics.block_tol)


def kappa_weyl(spec: OrbitSpec, path: GeneratorPath, numerics: Numerics = DEFAULT) -> complex:
    """``chi_{pi*}(h_1) / dim pi`` for the representation of highest weight ``-2 pi i eta``."""
    weight = highest_weight_of_orbit(spec)
    traj, _ = solve_loop(spec, path, numerics)
    return dual_character(weight, traj.end) / weyl_dimension(weight)


def _fixed_point_of(spec: OrbitSpec, traj: GroupTrajectory, tol: float) -> OrbitPoint | None:
    H = traj.samples
    for x0 in torus_fixed_points(spec):
        moved = H @ x0.N @ dagger(H) - x0.N
        if float(np.max(np.linalg.norm(moved, axis=(-2, -1)))) <= tol:
            return x0
    return None


def kappa_fixed_point(
    spec: OrbitSpec, path: GeneratorPath, numerics: Numerics = DEFAULT, normalized: bool = False
) -> complex:
    """``exp(-2 pi i <Phi(x0), int_0^1 A_t dt>)`` at a torus fixed point ``x0`` the flow does not move.

    Raises ``InapplicableError`` when no torus fixed point stays put.
    """
    traj, _ = solve_loop(spec, path, numerics)
    x0 = _fixed_point_of(spec, traj, numerics.fixed_point_tol)
    if x0 is None:
        raise InapplicableError("the flow fixes none of the torus fixed points")
    f = hamiltonian_normalized if normalized else hamiltonian
    pairing = segment_integral(
        traj.times, path, lambda idx, A: f(spec, A, np.broadcast_to(x0.N, A.shape))
    )
    return complex(np.exp(-2j * np.pi * pairing))


@dataclass(frozen=True, eq=False)
class KappaReport:
    kappa_direct: complex
    kappa_stabilizer: complex
    kappa_weyl: complex | None
    kappa_fixed_point: complex | None
    kappa_direct_normalized: complex
    pairwise_deviations: dict[str, float]
    base_point_spread: float | None
    quadrature_diagnostics: list[tuple]
    sign_convention: int
    closure_residual: float
    unitarity_drift: float
    area: float
    hamiltonian_integral: float
    passed: bool

    def values(self) -> dict[str, complex | None]:
        return {
            "kappa_direct": self.kappa_direct,
            "kappa_stabilizer": self.kappa_stabilizer,
            "kappa_weyl": self.kappa_weyl,
            "kappa_fixed_point": self.kappa_fixed_point,
            "kappa_direct_normalized": self.kappa_direct_normalized,
        }


def compute_kappa(
    spec: OrbitSpec,
    path: GeneratorPath,
    x: OrbitPoint | None = None,
    numerics: Numerics = DEFAULT,
    n_spread_points: int = 0,
) -> KappaReport:
    """Run every applicable route and compare them.

    ``passed`` requires ``|direct - stabilizer| < direct_tol`` and the exact
    routes (Weyl, fixed point) to match the stabilizer to ``exact_tol``.
    """
    if x is None:
        x = random_orbit_point(spec, numerics.seed)
    traj, closure = solve_loop(spec, path, numerics)
    direct = direct_action(spec, path, x, numerics)
    stab = stabilizer_character(spec, traj.end, tol=numerics.block_tol)
    weyl = kappa_weyl(spec, path, numerics) if spec.is_regular else None
    try:
        fixed = kappa_fixed_point(spec, path, numerics)
    except InapplicableError:
        fixed = None

    dev = {"direct-stabilizer": abs(direct.kappa - stab)}
    if weyl is not None:
        dev["stabilizer-weyl"] = abs(stab - weyl)
        dev["direct-weyl"] = abs(direct.kappa - weyl)
    if fixed is not None:
        dev["stabilizer-fixed_point"] = abs(stab - fixed)
    passed = dev["direct-stabilizer"] < numerics.direct_tol
    passed &= all(v < numerics.exact_tol for k, v in dev.items() if not k.startswith("direct"))

    spread = None
    if n_spread_points:
        spread = verify_base_point_independence(spec, path, n_spread_points, numerics.seed, numerics).spread

    return KappaReport(
        kappa_direct=direct.kappa,
        kappa_stabilizer=stab,
        kappa_weyl=weyl,
        kappa_fixed_point=fixed,
        kappa_direct_normalized=direct.kappa_normalized,
        pairwise_deviations=dev,
        base_point_spread=spread,
        quadrature_diagnostics=direct.convergence.rows(),
        sign_convention=SIGN,
        closure_residual=closure.residual,
        unitarity_drift=traj.drift,
        area=direct.area,
        hamiltonian_integral=direct.hamiltonian_integral,
        passed=bool(passed),
    )


# --- theorem checks ----------------------------------------------------------


@dataclass(frozen=True)
class IndependenceReport:
    values: list[complex]
    spread: float
    threshold: float
    passed: bool


def verify_base_point_independence(
    spec: OrbitSpec, path: GeneratorPath, n_points: int = 10, seed=None, numerics: Numerics = DEFAULT
) -> IndependenceReport:
    """Direct route at ``n_points`` Haar-random points; spread = max pairwise ``|k_i - k_j|``."""
    rng = as_rng(numerics.seed if seed is None else seed)
    values = [kappa_direct(spec, path, random_orbit_point(spec, rng), numerics) for _ in range(n_points)]
    v = np.asarray(values)
    spread = float(np.max(np.abs(v[:, None] - v[None, :]))) if len(v) > 1 else 0.0
    threshold = 10 * numerics.quad_tol
    return IndependenceReport(values, spread, threshold, spread < threshold)


@dataclass(frozen=True)
class ProductReport:
    stabilizer: tuple[complex, complex, complex]  # psi, xi, psi * xi
    direct: tuple[complex, complex, complex] | None
    stabilizer_error: float
    direct_error: float | None
    passed: bool


def verify_product(
    spec: OrbitSpec,
    path1: GeneratorPath,
    path2: GeneratorPath,
    numerics: Numerics = DEFAULT,
    x: OrbitPoint | None = None,
    direct: bool = True,
) -> ProductReport:
    """Check ``kappa(psi * xi) = kappa(psi) kappa(xi)`` on the stabilizer and direct routes."""
    prod = concatenate(path1, path2)
    stab = tuple(kappa_stabilizer(spec, p, numerics) for p in (path1, path2, prod))
    stab_err = abs(stab[2] - stab[0] * stab[1])
    passed = stab_err < 2 * numerics.exact_tol
    dvals = derr = None
    if direct:
        x = random_orbit_point(spec, numerics.seed) if x is None else x
        dvals = tuple(kappa_direct(spec, p, x, numerics) for p in (path1, path2, prod))
        derr = abs(dvals[2] - dvals[0] * dvals[1])
        passed &= derr < 2 * numerics.direct_tol
    return ProductReport(stab, dvals, stab_err, derr, bool(passed))


@dataclass(frozen=True)
class DeformationReport:
    kappa: complex
    derivative: complex  # finite-difference d kappa / ds at s = 0
    predicted: complex  # -2 pi i kappa int_0^1 fdot dt
    fdot_integral: float
    fdot_integrals: list[float] = field(default_factory=list)  # at extra random points
    x_spread: float = 0.0
    tolerance: float = 0.0
    passed: bool = False


def _fdot_integral(spec, path, traj, C, x) -> float:
    gamma = trajectory(traj, x)
    shift = barycenter(spec)

    def integrand(idx, A):
        comm = C @ A - A @ C
        return SIGN * np.real(np.einsum("tij,tji->t", gamma[idx] - shift, comm))

    return segment_integral(traj.times, path, integrand)


def verify_deformation_derivative(
    spec: OrbitSpec,
    path: GeneratorPath,
    C,
    x: OrbitPoint,
    ds: float = 1e-3,
    numerics: Numerics = DEFAULT,
    n_points: int = 5,
    seed=None,
) -> DeformationReport:
    """Compare ``d kappa(psi^s)/ds`` with ``-2 pi i kappa int fdot_t(psi_t(x)) dt``.

    ``psi^s`` is the conjugation family ``e^{sC} A_t e^{-sC}``; ``fdot_t`` is the
    ``s``-derivative of its Hamiltonian, ``SIGN tr(N' [C, A_t])``. The right
    side is also evaluated at ``n_points`` random points to confirm it does
    not depend on ``x``.
    """
    C = check_skew_hermitian(C, tol=1e-10)
    kappa = kappa_stabilizer(spec, path, numerics)
    plus = kappa_stabilizer(spec, conjugate_deformation(path, C, ds), numerics)
    minus = kappa_stabilizer(spec, conjugate_deformation(path, C, -ds), numerics)
    derivative = (plus - minus) / (2 * ds)

    traj, _ = solve_loop(spec, path, numerics)
    fdot = _fdot_integral(spec, path, traj, C, x)
    predicted = -2j * np.pi * kappa * fdot

    rng = as_rng(numerics.seed if seed is None else seed)
    others = [_fdot_integral(spec, path, traj, C, random_orbit_point(spec, rng)) for _ in range(n_points)]
    allv = np.asarray([fdot] + others)
    spread = float(np.max(allv) - np.min(allv))

    tol = 10 * max(1e-6, ds**2)
    passed = abs(derivative - predicted) < tol and spread < 1e-6
    return DeformationReport(kappa, complex(derivative), complex(predicted), fdot, others, spread, tol, bool(passed))
