"""Cap areas over different base points differ by integers.

Two caps over the same closed orbit curve glue into a closed surface, whose
symplectic area is an integer because the orbit is quantizable. Caps built
from nearby bases are homotopic, so the integer here is 0; the whole sphere
shows a nonzero one (its area is -m). Kappa only sees the area mod 1.
"""

import numpy as np

from orbitaction.errors import CapDegeneracyError
from orbitaction.isotopy import random_closed_loop, trajectory
from orbitaction.kappa import cap_convergence, solve_loop
from orbitaction.numerics import DEFAULT
from orbitaction.orbit import cap_surface, make_orbit, random_orbit_point, sphere_surface, symplectic_area

numerics = DEFAULT.with_(quad_tol=1e-5)
spec = make_orbit((1, 1), (3, 0))
path = random_closed_loop(2, seed=100, theta=0.3)
x = random_orbit_point(spec, 200)
gamma = trajectory(solve_loop(spec, path)[0], x)

rng = np.random.default_rng(1)
areas = []
while len(areas) < 4:
    base = random_orbit_point(spec, rng).N
    try:
        if cap_surface(spec, gamma, base).min_relgap < 0.1:
            continue
    except CapDegeneracyError:
        continue
    areas.append(cap_convergence(spec, path, x, numerics, cap_base=base).value)

for a in areas:
    print(f"area {a: .8f}   difference from first {a - areas[0]: .8f}")
print(f"whole sphere: {symplectic_area(sphere_surface(spec)):.8f}")
