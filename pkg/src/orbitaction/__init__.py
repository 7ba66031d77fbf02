"""Action integrals around Hamiltonian loops on coadjoint orbits of U(n)."""

from .characters import (
    dual_character,
    highest_weight_of_orbit,
    schur_eval,
    stabilizer_character,
    su2_character,
    weyl_dimension,
)
from .errors import *  # noqa: F401,F403
from .isotopy import (
    GeneratorPath,
    central_loop,
    closure_check,
    concatenate,
    conjugate_deformation,
    lax_solve,
    sample_generator,
    su2_pi_loop,
    trajectory,
)
from .kappa import (
    compute_kappa,
    direct_action,
    kappa_direct,
    kappa_fixed_point,
    kappa_stabilizer,
    kappa_weyl,
    verify_base_point_independence,
    verify_deformation_derivative,
    verify_product,
)
from .liecore import eig_skew_hermitian, expm_skew, project_unitary, random_haar_unitary
from .numerics import DEFAULT, Numerics
from .orbit import (
    SIGN,
    OrbitPoint,
    OrbitSpec,
    TangentVector,
    ad_solve,
    base_point,
    cap_surface,
    hamiltonian,
    hamiltonian_normalized,
    kks_eval,
    make_orbit,
    random_orbit_point,
    symplectic_area,
    torus_fixed_points,
    vertex_lattice_check,
)

__version__ = "0.1.0"
