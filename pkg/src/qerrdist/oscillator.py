"""Truncated Fock-space representation of a one-dimensional particle.

The Fock basis is primary. Position-space pictures (wavefunctions, grids,
lattice states) are derived from it through Hermite functions. With
``s = sqrt(hbar / (m omega))`` the quadratures are

    x = s (a + a^dagger) / sqrt(2),    p = i hbar (a^dagger - a) / (s sqrt(2)).
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .config import TOL
from .distributions import OutcomeDistribution
from .errors import GridError, IllConditionedError, ShapeError, TruncationError, TruncationWarning
from .hilbert import expm_i

__all__ = [
    "OscillatorRep",
    "LatticeSpec",
    "annihilation_op",
    "number_op",
    "position_op",
    "momentum_op",
    "hamiltonian_op",
    "interior_projector",
    "fock_state",
    "coherent_state",
    "coherent_amplitude",
    "displacement_op",
    "hermite_functions",
    "wavefunction",
    "default_grid",
    "position_distribution",
    "lattice_state",
    "lattice_basis",
    "lattice_projector",
]


@dataclass(frozen=True)
class OscillatorRep:
    """Truncated oscillator representation.

    Parameters
    ----------
    dim : int
        Number of Fock levels kept, at least 2.
    hbar, mass, omega : float
        Physical constants fixing the length scale ``sqrt(hbar/(mass*omega))``.
    """

    dim: int
    hbar: float = 1.0
    mass: float = 1.0
    omega: float = 1.0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ShapeError(f"dim must be an integer >= 2, got {self.dim}")
        for name in ("hbar", "mass", "omega"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        object.__setattr__(self, "dim", int(self.dim))

    @property
    def length_scale(self):
        return math.sqrt(self.hbar / (self.mass * self.omega))

    @property
    def momentum_scale(self):
        return math.sqrt(self.hbar * self.mass * self.omega)

    @property
    def interior_dim(self):
        """Number of levels on which truncation artefacts are negligible."""
        return int(math.ceil(TOL.interior_fraction * self.dim))

    def with_dim(self, dim):
        return OscillatorRep(dim, self.hbar, self.mass, self.omega)


@dataclass(frozen=True)
class LatticeSpec:
    """Finite window of a von Neumann lattice of coherent states.

    ``scale`` is the lattice spacing in position (also the Gaussian width of
    each lattice state), and ``N`` the half-width in lattice units, so the
    window holds ``(2N+1)**2`` states.
    """

    scale: float
    N: int

    def __post_init__(self):
        if not self.scale > 0:
            raise ValueError("lattice scale must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("lattice half-width N must be an integer >= 1")
        object.__setattr__(self, "N", int(self.N))

    @property
    def size(self):
        return (2 * self.N + 1) ** 2

    def indices(self):
        r = range(-self.N, self.N + 1)
        return [(n, m) for n in r for m in r]


# -- operators --------------------------------------------------------------


def annihilation_op(rep):
    return np.diag(np.sqrt(np.arange(1, rep.dim)), 1).astype(complex)


def number_op(rep):
    return np.diag(np.arange(rep.dim, dtype=float)).astype(complex)


def position_op(rep):
    a = annihilation_op(rep)
    return rep.length_scale / math.sqrt(2.0) * (a + a.conj().T)


def momentum_op(rep):
    a = annihilation_op(rep)
    return 1j * rep.hbar / (rep.length_scale * math.sqrt(2.0)) * (a.conj().T - a)


def hamiltonian_op(rep):
    """``p^2/2m + m omega^2 x^2/2`` compressed to the truncation, i.e. ``hbar omega (n + 1/2)``."""
    return rep.hbar * rep.omega * np.diag(np.arange(rep.dim) + 0.5).astype(complex)


def interior_projector(rep):
    P = np.zeros((rep.dim, rep.dim), dtype=complex)
    k = rep.interior_dim
    P[:k, :k] = np.eye(k)
    return P


# -- states -----------------------------------------------------------------


def fock_state(rep, n):
    if not 0 <= n < rep.dim:
        raise TruncationError(f"level {n} outside truncation {rep.dim}")
    v = np.zeros(rep.dim, dtype=complex)
    v[n] = 1.0
    return v


def coherent_amplitude(rep, x0, p0):
    return (x0 / rep.length_scale + 1j * p0 * rep.length_scale / rep.hbar) / math.sqrt(2.0)


def _check_excitation(rep, nbar, what="state"):
    if nbar > TOL.max_excitation * rep.dim:
        raise TruncationError(
            f"{what} has mean excitation {nbar:.3g} > {TOL.max_excitation} * dim ({rep.dim})"
        )
    if nbar > TOL.warn_excitation * rep.dim:
        warnings.warn(
            f"{what} has mean excitation {nbar:.3g}, close to truncation {rep.dim}",
            TruncationWarning,
            stacklevel=3,
        )


def coherent_state(rep, x0, p0):
    """Coherent state with mean position ``x0`` and mean momentum ``p0``.

    The phase convention matches ``displacement_op(rep, x0, p0)`` applied to
    the ground state. The truncated vector is renormalised.
    """
    alpha = coherent_amplitude(rep, x0, p0)
    _check_excitation(rep, abs(alpha) ** 2, "coherent state")
    n = np.arange(rep.dim)
    if alpha == 0:
        return fock_state(rep, 0)
    logc = -0.5 * abs(alpha) ** 2 + n * np.log(complex(alpha)) - 0.5 * gammaln(n + 1)
    c = np.exp(logc)
    return c / np.linalg.norm(c)


def displacement_op(rep, x, p):
    """``exp(i (p x_op - x p_op) / hbar)`` on the truncated space."""
    _check_excitation(rep, abs(coherent_amplitude(rep, x, p)) ** 2, "displacement")
    if x == 0 and p == 0:
        return np.eye(rep.dim, dtype=complex)
    G = p * position_op(rep) - x * momentum_op(rep)
    return expm_i(G, 1.0 / rep.hbar)


# -- position-space views ---------------------------------------------------


def hermite_functions(n_levels, xi):
    """Normalised Hermite functions ``phi_n(xi)`` for ``n < n_levels``.

    Uses the three-term recurrence, which is stable for the orthonormal
    functions. Returns an array of shape ``(n_levels, len(xi))``.
    """
    xi = np.asarray(xi, dtype=float)
    out = np.zeros((n_levels,) + xi.shape)
    out[0] = np.pi ** -0.25 * np.exp(-0.5 * xi**2)
    if n_levels > 1:
        out[1] = math.sqrt(2.0) * xi * out[0]
    for n in range(1, n_levels - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * xi * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def wavefunction(state, rep, grid):
    """Position-space amplitude ``<x|psi>`` of a Fock-basis vector on ``grid``."""
    state = np.asarray(state, dtype=complex)
    s = rep.length_scale
    phi = hermite_functions(rep.dim, np.asarray(grid) / s) / math.sqrt(s)
    return state @ phi


def default_grid(rep, state=None, points=2048, widths=8.0):
    """Uniform position grid covering ``state`` (or the ground state).

    The grid spans ``widths`` standard deviations either side of the mean,
    never less than ``widths`` ground-state widths. Without a state it spans
    the classical range of the highest kept level plus a margin, so every
    Hermite function of the truncation is captured.
    """
    s0 = rep.length_scale / math.sqrt(2.0)
    centre, spread = 0.0, s0
    if state is not None:
        X = position_op(rep)
        rho = _as_dm(state)
        centre = float(np.real(np.trace(X @ rho)))
        var = float(np.real(np.trace(X @ X @ rho))) - centre**2
        spread = max(s0, math.sqrt(max(var, 0.0)))
    half = widths * spread
    if state is None:
        half = max(half, rep.length_scale * (math.sqrt(2.0 * rep.dim + 1.0) + 6.0))
    return np.linspace(centre - half, centre + half, points)


def _as_dm(state):
    state = np.asarray(state, dtype=complex)
    return np.outer(state, state.conj()) if state.ndim == 1 else state


def position_distribution(state, rep, grid=None, name="position"):
    """Discretised position density ``|<x|psi>|^2 dx`` as a distribution.

    ``state`` may be a vector or a density matrix. The grid must capture all
    but ``TOL.grid_mass`` of the probability; the result is renormalised.

    Raises
    ------
    GridError
        If the grid misses too much mass or is not increasing.
    """
    grid = default_grid(rep, state) if grid is None else np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise GridError("grid must be strictly increasing with at least two points")
    s = rep.length_scale
    phi = hermite_functions(rep.dim, grid / s) / math.sqrt(s)
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        dens = np.abs(state @ phi) ** 2
    else:
        dens = np.real(np.einsum("ik,ij,jk->k", phi, state, phi))
    # trapezoid cell widths
    dx = np.empty_like(grid)
    dx[1:-1] = 0.5 * (grid[2:] - grid[:-2])
    dx[0] = 0.5 * (grid[1] - grid[0])
    dx[-1] = 0.5 * (grid[-1] - grid[-2])
    w = np.clip(dens, 0.0, None) * dx
    mass = w.sum()
    if abs(mass - 1.0) > TOL.grid_mass:
        raise GridError(f"grid captures probability {mass:.9f}; extend or refine it")
    return OutcomeDistribution(grid, w / mass, name)


# -- von Neumann lattice ----------------------------------------------------


def _lattice_grid(rep, spec):
    s, lam = rep.length_scale, spec.scale
    k_fock = math.sqrt(2 * rep.dim + 1) / s
    k_lat = 2 * math.pi * spec.N / lam + 6.0 / lam
    X = max(s * math.sqrt(2 * rep.dim + 1) + 8 * s, spec.N * lam + 10 * lam)
    dx = 0.5 * math.pi / (k_fock + k_lat)
    n = int(math.ceil(2 * X / dx)) + 1
    return np.linspace(-X, X, n)


def _lattice_wave(spec, n, m, x):
    lam = spec.scale
    return (np.pi * lam**2) ** -0.25 * np.exp(
        -0.5 * ((x - n * lam) / lam) ** 2 + 2j * np.pi * m * x / lam
    )


def _lattice_columns(rep, spec, pairs):
    x = _lattice_grid(rep, spec)
    dx = x[1] - x[0]
    s = rep.length_scale
    phi = hermite_functions(rep.dim, x / s) / math.sqrt(s)
    waves = np.stack([_lattice_wave(spec, n, m, x) for n, m in pairs], axis=1)
    cols = (phi @ waves) * dx
    norms = np.linalg.norm(cols, axis=0)
    worst = np.max(np.abs(norms - 1.0))
    if worst > 1e-6:
        raise TruncationError(
            f"lattice states lose norm {worst:.2e} in the Fock truncation (dim {rep.dim})"
        )
    return cols


def lattice_state(rep, spec, n, m):
    """Fock-basis vector of the lattice state centred at ``n*scale`` with momentum ``2 pi m hbar/scale``.

    The position wavefunction is a normalised Gaussian of width ``scale``
    carrying the plane-wave factor ``exp(2 pi i m x / scale)``. Overlaps with
    the Hermite functions are taken by trapezoid quadrature on a grid that
    resolves both.
    """
    if abs(n) > spec.N or abs(m) > spec.N:
        raise ValueError(f"lattice index ({n}, {m}) outside window N={spec.N}")
    return _lattice_columns(rep, spec, [(n, m)])[:, 0]


def lattice_basis(rep, spec, tol=TOL):
    """Orthonormal basis of the lattice window span.

    Returns
    -------
    Q : ndarray
        Orthonormal columns spanning ``{|n, m>}`` for ``|n|, |m| <= N``.
    condition : float
        Condition number of the lattice Gram matrix.

    Raises
    ------
    IllConditionedError
        If the Gram condition number exceeds ``tol.gram_condition``.
    """
    L = _lattice_columns(rep, spec, spec.indices())
    U, sv, _ = np.linalg.svd(L, full_matrices=False)
    cond = float((sv[0] / sv[-1]) ** 2) if sv[-1] > 0 else math.inf
    if cond > tol.gram_condition:
        raise IllConditionedError("lattice Gram matrix is nearly singular", cond)
    return U, cond


def lattice_projector(rep, spec, tol=TOL):
    """Orthogonal projector onto the span of the lattice window."""
    Q, _ = lattice_basis(rep, spec, tol)
    P = Q @ Q.conj().T
    return 0.5 * (P + P.conj().T)
