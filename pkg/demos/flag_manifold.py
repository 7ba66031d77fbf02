"""Full flags in C^3 under a loop ending at a central element z I.

With m = (3, 1, 0) the answer is z^a, a = sum of m_j = 4. The highest weight
and its dimension come out of the character engine, and the vertex lattice
check confirms the 2 pi-scaled vertex differences are integers.
"""

import numpy as np

from orbitaction.characters import highest_weight_of_orbit, weyl_dimension
from orbitaction.isotopy import central_loop
from orbitaction.kappa import compute_kappa
from orbitaction.liecore import random_haar_unitary
from orbitaction.orbit import make_orbit, random_orbit_point, vertex_lattice_check

spec = make_orbit((1, 1, 1), (3, 1, 0))
theta = 0.3
z = np.exp(2j * np.pi * theta)

w = highest_weight_of_orbit(spec)
print(f"highest weight {w}, dimension {weyl_dimension(w)}")
print(f"expected z^4 = {z**4:.12f}")

# diagonal frame: torus fixed points stay fixed, so the fixed-point route applies
for frame in (None, random_haar_unitary(3, 5)):
    rep = compute_kappa(spec, central_loop(3, theta, frame=frame), random_orbit_point(spec, 1))
    print("frame:", "diagonal" if frame is None else "Haar random")
    for name, value in rep.values().items():
        if value is not None:
            print(f"  {name:24s} {value:.12f}")

vert = vertex_lattice_check(spec)
print(f"{len(vert.vertices)} vertices, max lattice residual {vert.max_residual:.1e}")
