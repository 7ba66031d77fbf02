"""The two-sphere in u(2) rotated by a half turn.

The loop e^{t E}, E = pi diag(i, -i), ends at -I, which acts trivially on every
orbit. All routes should report kappa = (-1)^3 = -1 for char_ints (3, 0).
"""

from orbitaction.isotopy import su2_pi_loop
from orbitaction.kappa import compute_kappa
from orbitaction.orbit import make_orbit, random_orbit_point

spec = make_orbit((1, 1), (3, 0))
rep = compute_kappa(spec, su2_pi_loop(), random_orbit_point(spec, 0))

for name, value in rep.values().items():
    print(f"{name:24s} {value}")
print(f"cap area                 {rep.area:.10f}")
print(f"hamiltonian integral     {rep.hamiltonian_integral:.10f}")
for grid, est, delta, ext in rep.quadrature_diagnostics:
    print(f"  {grid:>10s}  {est: .10f}  {delta:.2e}  {ext: .10f}")
