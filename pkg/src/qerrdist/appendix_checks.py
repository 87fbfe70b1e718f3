"""Numerical checks of the phase-space machinery behind the restricted relations.

The routines here witness, at finite truncation, the analytic facts the
restricted uncertainty relations rest on: decay norms of wavefunctions,
adequacy of the von Neumann lattice projection, differentiability of
displaced states and of displaced expectation values, and the
divergence-theorem step that turns the commutator identity into a bound.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import trapezoid

from . import oscillator as osc
from .config import TOL
from .errors import FamilyConditionError, GridError, PreconditionError, TruncationError
from .hilbert import density, expm_i
from .measurement import MeasurementModel

__all__ = [
    "NormSpec",
    "GridLeakageWarning",
    "momentum_wavefunction",
    "schwartz_norm",
    "momentum_norm",
    "lattice_residual",
    "DerivativeCheckResult",
    "displacement_derivative_check",
    "derivative_convergence",
    "QuotientCheckResult",
    "quotient_check",
    "VectorField2D",
    "green_agreement",
    "DivergenceResult",
    "divergence_check",
]


class GridLeakageWarning(UserWarning):
    """The supremum of a decay norm sits on the edge of the sampling grid."""


@dataclass(frozen=True)
class NormSpec:
    """Derivative order ``m`` and polynomial weight exponent ``beta``."""

    m: int = 0
    beta: float = 0.0

    def __post_init__(self):
        if int(self.m) != self.m or self.m < 0:
            raise ValueError("derivative order must be a nonnegative integer")


# -- decay norms -------------------------------------------------------------


def _interior_check(state, rep):
    rho = density(np.asarray(state))
    mass = float(np.real(np.diag(rho))[: rep.interior_dim].sum())
    if mass < TOL.interior_mass:
        raise TruncationError(f"state has interior mass {mass:.6f}; increase dim")


def _derivative_vector(state, rep, m, conjugate=False):
    """Fock coefficients of ``d^m psi / dx^m`` (or ``d^m / dp^m`` in momentum space).

    The representation is padded by ``m`` levels so the ladder action is exact.
    """
    big = rep.with_dim(rep.dim + m)
    v = np.zeros(big.dim, dtype=complex)
    v[: rep.dim] = state
    a = osc.annihilation_op(big)
    if conjugate:
        # in momentum space d/dp = i (a + a^dagger) s / (hbar sqrt 2)
        D = 1j * (a + a.conj().T) * big.length_scale / (big.hbar * math.sqrt(2.0))
    else:
        D = (a - a.conj().T) / (big.length_scale * math.sqrt(2.0))
    for _ in range(int(m)):
        v = D @ v
    return v, big


def momentum_wavefunction(state, rep, grid):
    """Momentum-space amplitude ``<p|psi>`` on ``grid``."""
    state = np.asarray(state, dtype=complex)
    q = rep.hbar / rep.length_scale
    phase = (-1j) ** np.arange(state.size)
    phi = osc.hermite_functions(state.size, np.asarray(grid) / q) / math.sqrt(q)
    return (state * phase) @ phi


def _weighted_sup(values, grid, beta):
    w = (1.0 + grid**2) ** beta * np.abs(values)
    k = int(np.argmax(w))
    if k in (0, grid.size - 1) and w[k] > 0:
        warnings.warn("decay-norm supremum lies on the grid boundary", GridLeakageWarning, stacklevel=3)
    return float(w[k])


def _norm(state, rep, spec, grid, momentum):
    state = np.asarray(state, dtype=complex)
    if state.ndim != 1 or state.size != rep.dim:
        raise ValueError("state must be a Fock vector of the representation")
    _interior_check(state, rep)
    scale = rep.hbar / rep.length_scale if momentum else rep.length_scale
    if grid is None:
        half = 8.0 * scale * math.sqrt(2 * rep.dim + 1) / math.sqrt(2.0)
        grid = np.linspace(-half, half, 8193)
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 3 or np.any(np.diff(grid) <= 0):
        raise GridError("grid must be strictly increasing with at least three points")
    v, big = _derivative_vector(state, rep, spec.m, conjugate=momentum)
    f = momentum_wavefunction(v, big, grid) if momentum else osc.wavefunction(v, big, grid)
    return _weighted_sup(f, grid, spec.beta)


def schwartz_norm(state, rep, spec, grid=None):
    """``sup_x (1 + x^2)^beta |d^m psi / dx^m|``.

    Parameters
    ----------
    state : ndarray
        Fock vector of ``rep``.
    rep : OscillatorRep
    spec : NormSpec
    grid : ndarray, optional
        Position samples. The default covers the classically allowed region
        of the highest retained level with a wide margin.

    Warns
    -----
    GridLeakageWarning
        When the maximum sits on the grid edge.
    """
    return _norm(state, rep, spec, grid, momentum=False)


def momentum_norm(state, rep, spec, grid=None):
    """Momentum-space counterpart of :func:`schwartz_norm`."""
    return _norm(state, rep, spec, grid, momentum=True)


def lattice_residual(state, rep, spec, return_condition=False):
    """Norm of the component of ``state`` outside the lattice window span.

    Raises
    ------
    IllConditionedError
        Propagated from the lattice basis when the Gram matrix is singular.
    """
    psi = np.asarray(state, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    Q, cond = osc.lattice_basis(rep, spec)
    r = float(np.linalg.norm(psi - Q @ (Q.conj().T @ psi)))
    r = min(max(r, 0.0), 1.0)
    return (r, cond) if return_condition else r


# -- displaced expectation values -------------------------------------------


def _displacement(model, x, p):
    G = p * model.x - x * model.p
    return expm_i(G, 1.0 / model.hbar)


def _system_operator(model, A):
    A = np.asarray(A)
    ds = model.system_dim
    if A.shape == (ds, ds):
        return A
    if isinstance(model, MeasurementModel) and A.shape == (model.total_dim, model.total_dim):
        return model.reduce(A)
    raise ValueError(f"operator shape {A.shape} matches neither the system nor the product space")


@dataclass
class DerivativeCheckResult:
    fd_x: float
    analytic_x: float
    fd_p: float
    analytic_p: float
    abs_err: float
    rel_err: float
    h: float


def displacement_derivative_check(model, rho, A, x=0.0, p=0.0, h=1e-3):
    """Compare central differences of ``f(x, p) = Tr((rho_xp (x) alpha) A)`` with the commutator forms.

    ``A`` may act on the system or on the full product space; in the latter
    case it is first reduced against the ready state, which commutes with the
    canonical commutators of the system.
    """
    Ared = _system_operator(model, A)
    rho = density(rho)
    hb = model.hbar

    def f(xx, pp):
        D = _displacement(model, xx, pp)
        return float(np.real(np.trace(D @ rho @ D.conj().T @ Ared)))

    D = _displacement(model, x, p)
    r = D @ rho @ D.conj().T
    an_x = float(np.real(1j / hb * np.trace(r @ (model.p @ Ared - Ared @ model.p))))
    an_p = float(np.real(-1j / hb * np.trace(r @ (model.x @ Ared - Ared @ model.x))))
    fd_x = (f(x + h, p) - f(x - h, p)) / (2 * h)
    fd_p = (f(x, p + h) - f(x, p - h)) / (2 * h)
    err = max(abs(fd_x - an_x), abs(fd_p - an_p))
    scale = max(abs(an_x), abs(an_p))
    rel = err / scale if scale > 0 else err
    return DerivativeCheckResult(fd_x, an_x, fd_p, an_p, err, rel, h)


def derivative_convergence(model, rho, A, x=0.0, p=0.0, h=1e-2, floor=1e-11):
    """Error ratio under one step halving; ``nan`` when both errors sit below ``floor``."""
    a = displacement_derivative_check(model, rho, A, x, p, h)
    b = displacement_derivative_check(model, rho, A, x, p, h / 2)
    if a.abs_err < floor and b.abs_err < floor:
        return math.nan, a, b
    return a.abs_err / b.abs_err, a, b


# -- displaced states --------------------------------------------------------


@dataclass
class QuotientCheckResult:
    eps: np.ndarray
    lhs: np.ndarray
    slopes: np.ndarray
    n_tilde: float
    weight: float
    empirical_B: float
    limit_residual: float
    decreasing: bool
    flagged: bool


def quotient_check(state, rep, x=0.0, p=0.0, eps_list=(1e-1, 5e-2, 2.5e-2, 1e-2, 1e-3, 1e-4)):
    """Difference quotient of displaced states against ``-(i/hbar)(p_op - p/2)``.

    Returns the residual norms, their ratio to ``eps`` and the empirical
    constant ``max(lhs/eps) / ((4 + p^2) Ntilde_{0,3/2})`` with ``Ntilde`` the
    momentum-space decay norm.
    """
    eps = np.asarray(eps_list, dtype=float)
    if eps.ndim != 1 or np.any(np.diff(eps) >= 0) or np.any(eps <= 0):
        raise ValueError("eps_list must be positive and strictly decreasing")
    psi = np.asarray(state, dtype=complex)
    _interior_check(psi, rep)
    P = osc.momentum_op(rep)
    hb = rep.hbar
    base = osc.displacement_op(rep, x, p) @ psi
    gen = -1j / hb * (P - 0.5 * p * np.eye(rep.dim)) @ base
    lhs = np.empty_like(eps)
    for k, e in enumerate(eps):
        moved = osc.displacement_op(rep, x + e, p) @ psi
        lhs[k] = np.linalg.norm((moved - base) / e - gen)
    slopes = lhs / eps
    n_tilde = momentum_norm(psi, rep, NormSpec(0, 1.5))
    weight = (4.0 + p**2) * n_tilde
    decreasing = bool(np.all(np.diff(lhs) < 0))
    return QuotientCheckResult(
        eps, lhs, slopes, n_tilde, weight,
        float(slopes.max() / weight), float(lhs[-1]), decreasing, not decreasing,
    )


# -- divergence-theorem step ------------------------------------------------


@dataclass(frozen=True, eq=False)
class VectorField2D:
    """Field ``(v1, v2)`` sampled on an ``(x, p)`` grid, ``x`` along axis 0."""

    x: np.ndarray
    p: np.ndarray
    v1: np.ndarray
    v2: np.ndarray

    def __post_init__(self):
        x, p = np.asarray(self.x, float), np.asarray(self.p, float)
        v1, v2 = np.asarray(self.v1, float), np.asarray(self.v2, float)
        if v1.shape != (x.size, p.size) or v2.shape != v1.shape:
            raise ValueError("field components must have shape (len(x), len(p))")
        if not (np.all(np.isfinite(v1)) and np.all(np.isfinite(v2))):
            raise ValueError("field entries must be finite")
        for name, val in (("x", x), ("p", p), ("v1", v1), ("v2", v2)):
            object.__setattr__(self, name, val)

    def flux(self):
        """Outward flux through the rectangle boundary by the trapezoid rule."""
        right = trapezoid(self.v1[-1], self.p)
        left = trapezoid(self.v1[0], self.p)
        top = trapezoid(self.v2[:, -1], self.x)
        bottom = trapezoid(self.v2[:, 0], self.x)
        return float(right - left + top - bottom)


def green_agreement(field, divergence):
    """Volume integral of ``divergence``, boundary flux of ``field``, relative gap."""
    vol = float(trapezoid(trapezoid(divergence, field.p, axis=1), field.x))
    flux = field.flux()
    scale = max(abs(vol), abs(flux))
    rel = abs(vol - flux) / scale if scale > 0 else 0.0
    return vol, flux, rel


@dataclass
class DivergenceResult:
    volume_integral: float
    boundary_flux: float
    green_rel_err: float
    interior_identity_residual: float
    vfield: VectorField2D = field(repr=False)
    divergence: np.ndarray = field(repr=False)
    epsilon_R: float = math.nan
    eta_R: float = math.nan
    chain: dict = field(default_factory=dict)
    chain_holds: bool = False


def _error_columns(model, which):
    """Weighted columns ``(O_f - R_i) E_k`` for the error or disturbance operator."""
    R = model.reference(which)
    dims = (model.system_dim, model.apparatus_dim)
    out = []
    for (wk, E), (_, Y) in zip(model._embeddings, model.final_columns(which)):
        RE = np.kron(R, np.eye(dims[1])) @ E
        out.append((wk, Y - RE))
    return out


def divergence_check(model, family, chain_slack=1e-9):
    """Field of mean error and mean disturbance over a closed family and its identities.

    Builds ``v = (<eps>, <eta>)`` on the family grid, its divergence from the
    commutator form of the derivative, and checks

    * ``Tr(rho [eps, eta]) = -i hbar (1 + div v)`` at each node,
    * the trapezoid volume integral of ``div v`` against the boundary flux,
    * the chain of bounds leading from the product of worst-case errors
      down to ``hbar (1/2 - eps_R/l_X - eta_R/l_P)``.

    Raises
    ------
    FamilyConditionError
        If the family lacks closure.
    PreconditionError
        If the model is not canonical or the grid is coarser than 33 x 33.
    """
    if not isinstance(model, MeasurementModel):
        raise TypeError("divergence_check needs a MeasurementModel")
    if not model.canonical:
        raise PreconditionError("model observables are not canonical")
    if not family.closure:
        raise FamilyConditionError("the divergence step needs a closed family")
    reg = family.region
    if reg.grid_nx < 33 or reg.grid_np < 33:
        raise PreconditionError("divergence check needs at least a 33 x 33 grid")
    hb = model.hbar
    X, P = model.x, model.p
    F_eps = model.reduced("pointer")[0] - X
    F_eta = model.reduced("p")[0] - P
    ce, cn = _error_columns(model, "pointer"), _error_columns(model, "p")
    prod = sum(wk * (A.conj().T @ B) for (wk, A), (_, B) in zip(ce, cn))
    comm = prod - prod.conj().T
    # derivative forms of the divergence, exact for displaced states
    dx_eps = 1j / hb * (P @ F_eps - F_eps @ P)
    dp_eta = -1j / hb * (X @ F_eta - F_eta @ X)

    from .suprema import enumerate_family
    from . import metrics as mt

    xs, ps = reg.nodes()
    v1 = np.empty((xs.size, ps.size))
    v2 = np.empty_like(v1)
    div = np.empty_like(v1)
    resid = 0.0
    eps_R = eta_R = 0.0
    ip = {float(v): j for j, v in enumerate(ps)}
    ix = {float(v): i for i, v in enumerate(xs)}
    for mem in enumerate_family(family):
        eps_R = max(eps_R, mt.o_error(model, mem.rho, check=False))
        eta_R = max(eta_R, mt.o_disturbance(model, mem.rho, check=False))
        if mem.kind != "displaced":
            continue
        i, j = ix[mem.x], ip[mem.p]
        r = mem.rho
        v1[i, j] = np.real(np.trace(r @ F_eps))
        v2[i, j] = np.real(np.trace(r @ F_eta))
        d = np.real(np.trace(r @ dx_eps)) + np.real(np.trace(r @ dp_eta))
        div[i, j] = d
        lhs = np.trace(r @ comm)
        resid = max(resid, abs(lhs - (-1j * hb * (1.0 + d))))
    fld = VectorField2D(xs, ps, v1, v2)
    vol, flux, rel = green_agreement(fld, div)
    area = reg.l_X * reg.l_P
    chain = {
        "product": eps_R * eta_R,
        "pointwise": 0.5 * hb * float(np.max(np.abs(1.0 + div))),
        "volume": 0.5 * hb * (1.0 - abs(vol) / area),
        "flux": 0.5 * hb * (1.0 - abs(flux) / area),
        "final": hb * (0.5 - eps_R / reg.l_X - eta_R / reg.l_P),
    }
    steps = list(chain.values())
    # volume and flux lines agree only up to quadrature error
    slack = [chain_slack * hb] * 4
    slack[2] += 0.5 * hb * abs(vol - flux) / area
    holds = all(a >= b - t for a, b, t in zip(steps, steps[1:], slack))
    return DivergenceResult(vol, flux, rel, float(resid), fld, div, eps_R, eta_R, chain, holds)
