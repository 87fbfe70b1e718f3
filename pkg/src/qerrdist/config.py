"""Central numerical tolerances.

Every tolerance used by the package lives in :class:`Tolerances`. Functions
take an optional ``tol`` argument and fall back to :data:`TOL`.
"""

from dataclasses import dataclass, replace

__all__ = ["Tolerances", "TOL", "with_tolerances"]


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-12
    unitary: float = 1e-10
    trace: float = 1e-10
    positivity: float = 1e-10
    eig_residual: float = 1e-9
    variance_clamp: float = 1e-12
    imag_residue: float = 1e-10
    degeneracy_gap: float = 1e-9
    distribution_sum: float = 1e-8
    grid_mass: float = 1e-6
    interior_fraction: float = 0.9
    interior_mass: float = 0.999
    warn_excitation: float = 0.25
    max_excitation: float = 0.5
    inequality_slack: float = 1e-9
    kernel_row_sum: float = 1e-10
    gram_condition: float = 1e12
    lattice_rcond: float = 1e-10


TOL = Tolerances()


def with_tolerances(**changes):
    """Return a copy of the default tolerances with ``changes`` applied."""
    return replace(TOL, **changes)
