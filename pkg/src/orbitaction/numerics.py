"""Single place for every tolerance and discretisation knob."""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class Numerics:
    # type invariants
    skew_tol: float = 1e-12  # Frobenius-relative
    unitary_tol: float = 1e-10
    spectrum_tol: float = 1e-8
    tangent_tol: float = 1e-8
    gap_tol: float = 1e-8
    singular_tol: float = 1e-8

    # isotopies
    lax_steps: int = 1024
    magnus_order: int = 4
    closure_tol: float = 1e-6
    scalar_tol: float = 1e-8
    block_tol: float = 1e-8
    fixed_point_tol: float = 1e-8

    # caps and area quadrature
    cap_grid: tuple[int, int] = (64, 256)
    cap_gap_tol: float = 1e-6
    cap_attempts: int = 5
    quad_tol: float = 1e-6
    max_refine: int = 6
    area_rule: str = "symmetric"
    max_grid_points: int = 4_200_000

    # characters
    confluence_tol: float = 1e-5

    # route agreement
    direct_tol: float = 1e-4
    exact_tol: float = 1e-8

    seed: int = 0

    def with_(self, **changes) -> "Numerics":
        return replace(self, **changes)


DEFAULT = Numerics()
