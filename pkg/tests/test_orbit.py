import itertools
from math import factorial

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from orbitaction.errors import CapDegeneracyError, DegenerateInputError, InvalidTangentError, ValidationError
from orbitaction.liecore import dagger, expm_skew, random_haar_unitary, random_skew_hermitian
from orbitaction.numerics import DEFAULT
from orbitaction.orbit import (
    SIGN,
    OrbitPoint,
    Surface,
    TangentVector,
    ad_solve,
    area_convergence,
    barycenter,
    base_point,
    cap_for_loop,
    cap_surface,
    grid_area,
    hamiltonian,
    hamiltonian_normalized,
    kks_eval,
    make_orbit,
    project_tangent,
    random_orbit_point,
    spectral_projection,
    sphere_surface,
    symplectic_area,
    torus_fixed_points,
    vertex_lattice_check,
)

ORBITS = [
    ((1, 1), (3, 0)),
    ((1, 1, 1), (3, 1, 0)),
    ((1, 2), (2, -1)),
    ((2, 1, 1), (4, 0, -3)),
    ((1, 1, 1, 1), (5, 2, -1, 0)),
]


@pytest.fixture(params=ORBITS, ids=lambda o: f"{o[0]}-{o[1]}")
def spec(request):
    return make_orbit(*request.param)


# --- orbit specs and points -------------------------------------------------


@pytest.mark.parametrize(
    "mults, ints",
    [((1, 1), (2, 2)), ((0, 2), (1, 0)), ((1, -1), (1, 0)), ((1, 1), (1,)), ((1,), (0.5,)), ((), ())],
)
def test_invalid_orbit_specs(mults, ints):
    with pytest.raises(ValidationError):
        make_orbit(mults, ints)


def test_make_orbit_dimension_check():
    with pytest.raises(ValidationError):
        make_orbit((1, 2), (1, 0), n=4)
    assert make_orbit((1, 2), (1, 0), n=3).n == 3


@pytest.mark.parametrize("m", [1, 3, 7])
def test_base_point_two_sphere(m):
    N = base_point(make_orbit((1, 1), (m, 0))).N
    np.testing.assert_allclose(N, np.diag([-1j * m / (2 * np.pi), 0]), atol=1e-15)


def test_base_point_repeats_by_multiplicity():
    spec = make_orbit((2, 1), (1, -2))
    d = np.diag(base_point(spec).N).imag * 2 * np.pi
    np.testing.assert_allclose(d, [-1, -1, 2])


def test_unsorted_char_ints_are_accepted():
    a, b = make_orbit((1, 1, 1), (0, 3, 1)), make_orbit((1, 1, 1), (3, 1, 0))
    np.testing.assert_allclose(a.sorted_spectrum, b.sorted_spectrum)


@given(st.integers(0, 2**32 - 1), st.sampled_from(ORBITS))
def test_random_points_lie_on_orbit(seed, orbit):
    spec = make_orbit(*orbit)
    x = random_orbit_point(spec, seed)
    lam = np.sort(np.linalg.eigvals(x.N).imag)
    np.testing.assert_allclose(lam, np.sort(spec.diagonal), atol=1e-12)
    np.testing.assert_allclose(x.N, -dagger(x.N), atol=1e-14)


def test_point_off_orbit_rejected(spec):
    with pytest.raises(ValidationError):
        OrbitPoint(spec, spec.D * 1.01)


# --- tangent vectors and ad_solve ---------------------------------------------


def test_tangent_vector_checks(spec, rng):
    x = random_orbit_point(spec, rng)
    TangentVector.of_generator(x, random_skew_hermitian(spec.n, rng))
    # N itself commutes with N, so it is normal to the orbit
    with pytest.raises(InvalidTangentError):
        TangentVector(x, x.N)
    with pytest.raises(ValidationError):
        TangentVector(x, np.zeros((spec.n + 1, spec.n + 1)))


def test_project_tangent_idempotent(spec, rng):
    x = random_orbit_point(spec, rng)
    u = random_skew_hermitian(spec.n, rng)
    p = project_tangent(x, u)
    np.testing.assert_allclose(project_tangent(x, p), p, atol=1e-12)
    TangentVector(x, p)


def _lstsq_ad_inverse(N, zeta):
    # minimal-norm B with [B, N] = zeta from the Kronecker form of ad_N
    n = N.shape[0]
    I = np.eye(n)
    K = np.kron(I, N.T) - np.kron(N, I)  # row-major vec(B N - N B)
    B, *_ = np.linalg.lstsq(K, zeta.reshape(-1), rcond=1e-10)
    return B.reshape(n, n)


def test_ad_solve_against_least_squares(spec, rng):
    x = random_orbit_point(spec, rng)
    zeta = TangentVector.of_generator(x, random_skew_hermitian(spec.n, rng))
    B = ad_solve(zeta)
    np.testing.assert_allclose(B @ x.N - x.N @ B, zeta.xi, atol=1e-12)
    np.testing.assert_allclose(B, _lstsq_ad_inverse(x.N, zeta.xi), atol=1e-9)


def test_ad_solve_degenerate_point():
    spec = make_orbit((1, 1), (1, 0))
    # a stale OrbitPoint with collapsed spectrum, built without the spectrum check
    x = OrbitPoint(spec, np.zeros((2, 2)), check=False)
    zeta = TangentVector(x, np.zeros((2, 2)))
    with pytest.raises(DegenerateInputError):
        ad_solve(zeta)


# --- the KKS form ---------------------------------------------------------------


def test_kks_matches_commutator_pairing(spec, rng):
    x = random_orbit_point(spec, rng)
    A, B = random_skew_hermitian(spec.n, rng), random_skew_hermitian(spec.n, rng)
    u, v = TangentVector.of_generator(x, A), TangentVector.of_generator(x, B)
    expected = np.real(np.trace(x.N @ (A @ B - B @ A)))
    assert kks_eval(u, v) == pytest.approx(expected, abs=1e-12)


def test_kks_antisymmetric_and_invariant(spec, rng):
    x = random_orbit_point(spec, rng)
    A, B = random_skew_hermitian(spec.n, rng), random_skew_hermitian(spec.n, rng)
    u, v = TangentVector.of_generator(x, A), TangentVector.of_generator(x, B)
    assert kks_eval(u, v) == pytest.approx(-kks_eval(v, u), abs=1e-12)
    assert kks_eval(u, u) == pytest.approx(0.0, abs=1e-12)

    g = random_haar_unitary(spec.n, rng)
    y = OrbitPoint(spec, g @ x.N @ dagger(g))
    gu = TangentVector(y, g @ u.xi @ dagger(g))
    gv = TangentVector(y, g @ v.xi @ dagger(g))
    assert kks_eval(gu, gv) == pytest.approx(kks_eval(u, v), abs=1e-11)


def test_kks_nondegenerate(spec, rng):
    # u is itself a generator orthogonal to the stabilizer, so omega(u, [u, N]) = |u|^2
    x = random_orbit_point(spec, rng)
    u = TangentVector.of_generator(x, random_skew_hermitian(spec.n, rng))
    v = TangentVector.of_generator(x, u.xi)
    assert kks_eval(u, v) == pytest.approx(np.linalg.norm(u.xi) ** 2, rel=1e-10)


def test_kks_rejects_mismatched_points(rng):
    spec = make_orbit((1, 1), (1, 0))
    x, y = random_orbit_point(spec, 1), random_orbit_point(spec, 2)
    A = random_skew_hermitian(2, rng)
    with pytest.raises(ValidationError):
        kks_eval(TangentVector.of_generator(x, A), TangentVector.of_generator(y, A))


# --- Hamiltonians -----------------------------------------------------------------


def test_hamiltonian_generates_the_fundamental_field(spec, rng):
    # d/de f_A(e^{eB} N e^{-eB}) = SIGN * omega(X_A, X_B), i.e. iota_{X_A} omega = SIGN df_A
    x = random_orbit_point(spec, rng)
    A, B = random_skew_hermitian(spec.n, rng), random_skew_hermitian(spec.n, rng)
    h = 1e-5
    fp = hamiltonian(spec, A, expm_skew(h * B) @ x.N @ expm_skew(-h * B))
    fm = hamiltonian(spec, A, expm_skew(-h * B) @ x.N @ expm_skew(h * B))
    fd = (fp - fm) / (2 * h)
    omega = kks_eval(TangentVector.of_generator(x, A), TangentVector.of_generator(x, B))
    assert fd == pytest.approx(SIGN * omega, abs=1e-8)


def test_hamiltonian_equivariance(spec, rng):
    x = random_orbit_point(spec, rng)
    A = random_skew_hermitian(spec.n, rng)
    g = random_haar_unitary(spec.n, rng)
    assert hamiltonian(spec, g @ A @ dagger(g), g @ x.N @ dagger(g)) == pytest.approx(
        hamiltonian(spec, A, x), abs=1e-12
    )


def test_normalized_hamiltonian_has_zero_orbit_average():
    spec = make_orbit((1, 2), (3, 0))
    A = random_skew_hermitian(3, 5)
    rng = np.random.default_rng(9)
    K = 4000
    N = np.stack([random_orbit_point(spec, rng).N for _ in range(K)])
    f = hamiltonian_normalized(spec, np.broadcast_to(A, N.shape), N)
    assert abs(f.mean()) < 4 * f.std() / np.sqrt(K)
    raw = hamiltonian(spec, np.broadcast_to(A, N.shape), N)
    # the unnormalized average is the pairing with the barycenter
    assert raw.mean() == pytest.approx(SIGN * np.real(np.trace(barycenter(spec) @ A)), abs=4 * raw.std() / np.sqrt(K))


def test_barycenter_traceless_orbit():
    spec = make_orbit((1, 1, 1), (1, 0, -1))
    np.testing.assert_allclose(barycenter(spec), 0, atol=1e-15)


def test_hamiltonian_batched(rng):
    spec = make_orbit((1, 1, 1), (3, 1, 0))
    A = np.stack([random_skew_hermitian(3, rng) for _ in range(5)])
    N = np.stack([random_orbit_point(spec, rng).N for _ in range(5)])
    batch = hamiltonian(spec, A, N)
    assert batch.shape == (5,)
    assert batch[2] == pytest.approx(hamiltonian(spec, A[2], N[2]))


# --- torus fixed points and vertices ------------------------------------------------


def test_torus_fixed_points_enumeration(spec):
    pts = torus_fixed_points(spec)
    expected = factorial(spec.n)
    for m in spec.multiplicities:
        expected //= factorial(m)
    assert len(pts) == expected
    np.testing.assert_allclose(pts[0].N, spec.D)
    diags = {tuple(np.round(np.diag(p.N).imag, 12)) for p in pts}
    oracle = {tuple(np.round(perm, 12)) for perm in itertools.permutations(spec.diagonal)}
    assert diags == oracle
    for p in pts:
        assert np.allclose(p.N, np.diag(np.diag(p.N)))


def test_vertex_differences_are_char_int_differences():
    spec = make_orbit((1, 1, 1), (3, 1, 0))
    rep = vertex_lattice_check(spec)
    assert rep.passed and rep.max_residual < 1e-12
    m = np.array(spec.char_ints)
    perms = list(itertools.permutations(range(3)))
    # p = -m / 2 pi, so 2 pi (v - v') = -(m_sigma - m_sigma')
    oracle = np.array([[-(m[list(a)] - m[list(b)]) for b in perms] for a in perms])
    assert sorted(map(tuple, rep.differences.reshape(-1, 3).tolist())) == sorted(map(tuple, oracle.reshape(-1, 3).tolist()))
    assert rep.differences.dtype.kind == "i"


def test_vertex_lattice_n4():
    rep = vertex_lattice_check(make_orbit((1, 1, 1, 1), (5, 2, -1, 0)))
    assert rep.passed
    assert rep.differences.shape == (24, 24, 4)
    assert np.abs(rep.differences).max() == 6


# --- spectral projection, caps and area ------------------------------------------------


def test_spectral_projection_restores_spectrum(spec, rng):
    x = random_orbit_point(spec, rng)
    M = x.N + 1e-3 * random_skew_hermitian(spec.n, rng)
    P, V, relgap, absgap = spectral_projection(spec, M)
    OrbitPoint(spec, P)
    assert np.linalg.norm(P - x.N) < 1e-2
    P0, *_ = spectral_projection(spec, x.N)
    np.testing.assert_allclose(P0, x.N, atol=1e-12)
    assert relgap > 0.9


def _great_circle(spec, T=64, axis_seed=3):
    # rotate around a random axis: closed loop e^{2 pi i t H} N e^{-2 pi i t H} with H = diag(1, 0) in a random frame
    W = random_haar_unitary(spec.n, axis_seed)
    H = W @ np.diag([1.0] + [0.0] * (spec.n - 1)) @ dagger(W)
    x = random_orbit_point(spec, 8)
    t = np.linspace(0, 1, T + 1)
    U = expm_skew(2j * np.pi * t[:, None, None] * H)
    return U @ x.N @ dagger(U)


def test_cap_edges_and_points(rng):
    spec = make_orbit((1, 1, 1), (3, 1, 0))
    loop = _great_circle(spec, 256)
    cap = cap_for_loop(spec, loop)
    np.testing.assert_allclose(cap.points[0], np.broadcast_to(cap.base, cap.points[0].shape), atol=1e-14)
    np.testing.assert_allclose(cap.points[-1], loop, atol=1e-14)
    lam = np.linalg.eigvalsh(-1j * cap.points.reshape(-1, 3, 3))
    np.testing.assert_allclose(lam, np.broadcast_to(np.sort(spec.diagonal), lam.shape), atol=1e-10)
    cap.point(3, 7)


def test_cap_rejects_open_loop_and_bad_base():
    spec = make_orbit((1, 1), (3, 0))
    loop = _great_circle(spec, 64)
    with pytest.raises(ValidationError):
        cap_surface(spec, loop[:-10], loop[0], grid=(8, 54))
    with pytest.raises(ValidationError):
        cap_surface(spec, loop, 2 * spec.D, grid=(8, 64))


def test_cap_through_antipode_is_degenerate():
    # on S^2 the straight segment from D to its antipode passes through the barycenter
    spec = make_orbit((1, 1), (3, 0))
    E = np.array([[0, -1], [1, 0]], dtype=complex) * np.pi  # half-turn swaps the fixed points
    t = np.linspace(0, 1, 65)
    U = expm_skew(t[:, None, None] * 2 * E)
    loop = U @ spec.D @ dagger(U)
    with pytest.raises(CapDegeneracyError):
        cap_surface(spec, loop, spec.D, grid=(8, 64))


def test_constant_loop_has_zero_area():
    spec = make_orbit((1, 1, 1), (3, 1, 0))
    x = random_orbit_point(spec, 2)
    cap = cap_surface(spec, lambda T: np.broadcast_to(x.N, (T + 1, 3, 3)), x, grid=(8, 64))
    assert symplectic_area(cap) == pytest.approx(0.0, abs=1e-14)


def _polar_cap(spec, theta0, grid=(32, 64)):
    # the sphere parametrisation restricted to polar angle <= theta0
    def sampler(S, T):
        th = theta0 * np.linspace(0.0, 1.0, S + 1)[:, None]
        ph = 2 * np.pi * np.linspace(0.0, 1.0, T + 1)[None, :]
        c, s = np.cos(th / 2), np.sin(th / 2)
        R = np.empty(np.broadcast(th, ph).shape + (2, 2), dtype=complex)
        R[..., 0, 0], R[..., 0, 1] = c, -np.exp(-1j * ph) * s
        R[..., 1, 0], R[..., 1, 1] = np.exp(1j * ph) * s, c
        return R @ spec.D @ dagger(R), None

    return Surface(spec, sampler, grid)


@pytest.mark.parametrize("theta0", [0.4, 1.3, 2.5])
def test_polar_cap_area_is_the_solid_angle_fraction(theta0):
    # area fraction of a polar cap of the sphere is (1 - cos theta0) / 2
    m = 3
    spec = make_orbit((1, 1), (m, 0))
    area = symplectic_area(_polar_cap(spec, theta0), refinement_tol=1e-9)
    assert area == pytest.approx(-m * (1 - np.cos(theta0)) / 2, abs=1e-7)


@pytest.mark.parametrize("m", [1, 2, 3, 5])
def test_full_sphere_area(m):
    spec = make_orbit((1, 1), (m, 0))
    area = symplectic_area(sphere_surface(spec, grid=(32, 64)))
    # orientation of this parametrisation gives -m
    assert area == pytest.approx(-m, abs=1e-6)


@pytest.mark.parametrize("rule", ["symmetric", "vertex"])
def test_both_rules_reach_the_polar_cap_area(rule):
    spec = make_orbit((1, 1), (3, 0))
    area = symplectic_area(_polar_cap(spec, 1.3), refinement_tol=1e-8, rule=rule)
    assert area == pytest.approx(-3 * (1 - np.cos(1.3)) / 2, abs=1e-7)


def _wobbly_loop(spec):
    W, V = random_haar_unitary(3, 3), random_haar_unitary(3, 5)
    H, H2 = W @ np.diag([1.0, 0, 0]) @ dagger(W), V @ np.diag([0, 1.0, 0]) @ dagger(V)
    x = random_orbit_point(spec, 8)

    def loop(T):
        t = np.linspace(0, 1, T + 1)[:, None, None]
        U = expm_skew(2j * np.pi * t * H) @ expm_skew(0.6j * np.pi * np.sin(2 * np.pi * t) * H2)
        return U @ x.N @ dagger(U)

    return loop


def test_symmetric_rule_is_second_order_on_a_generic_cap():
    spec = make_orbit((1, 1, 1), (3, 1, 0))
    cap = cap_for_loop(spec, _wobbly_loop(spec))
    a = []
    for S in (16, 32, 64, 128):
        pts, frs = cap.sample(S, 4 * S)
        a.append(grid_area(spec, pts, frs, "symmetric"))
    d = np.abs(np.diff(a))
    assert 3.5 < d[-2] / d[-1] < 4.5


def test_area_convergence_table():
    spec = make_orbit((1, 1), (3, 0))
    conv = area_convergence(sphere_surface(spec, grid=(16, 32)), 1e-8)
    assert conv.converged
    rows = conv.rows()
    assert rows[0][0] == "16x32" and np.isnan(rows[0][2])
    d = [r[2] for r in rows[1:]]
    assert all(a > b for a, b in zip(d, d[1:]))


def test_area_unconverged_raises():
    from orbitaction.errors import QuadratureFailure

    spec = make_orbit((1, 1), (3, 0))
    with pytest.raises(QuadratureFailure):
        symplectic_area(sphere_surface(spec, grid=(4, 8)), refinement_tol=1e-14, max_refine=2)
