"""Operator (O), deviation (D) and correlation (C) error and disturbance.

All functions take a model and a system state ``rho`` (vector or density
matrix). ``which="pointer"`` selects the error of the measured observable,
``which="p"`` the disturbance of the conjugate one. Each quantity depends on
the model only through the reductions ``F1 = Tr_a[O_f (I (x) alpha)]`` and
``F2 = Tr_a[O_f^2 (I (x) alpha)]``:

* O: ``sqrt(Tr rho (F2 - F1 R - R F1 + R^2))`` with ``R`` the reference
  observable,
* D: ``sqrt(Tr rho (F2 - 2 rbar F1 + rbar^2)) - Delta R``,
* C: a supremum over extensions ``rho_AB`` of ``rho`` of
  ``||O_f - R_A|| - ||R_B - R_A||``, searched numerically.
"""

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .config import TOL
from .distributions import OutcomeDistribution, merge_support
from .errors import NumericalError, TruncationWarning, ValidationError
from .hilbert import density, hermitian_eig, partial_trace
from .measurement import JointMeasurementModel

__all__ = [
    "OutcomeDistribution",
    "ExtensionSearchConfig",
    "ExtensionSearchResult",
    "MetricsReport",
    "o_error",
    "o_disturbance",
    "o_error_p",
    "o_value",
    "d_error",
    "d_disturbance",
    "d_value",
    "c_error",
    "c_disturbance",
    "c_search",
    "c_value_at",
    "reference_observable",
    "pointer_distribution",
    "observable_distribution",
    "wasserstein2",
    "moments",
    "metrics_report",
    "bound_chain",
    "truncation_status",
]


def _dm(rho):
    rho = np.asarray(rho, dtype=complex)
    return np.outer(rho, rho.conj()) if rho.ndim == 1 else rho


def _tr(A, rho):
    return float(np.real(np.einsum("ij,ji->", A, rho)))


def _sqrt_clamped(v, what):
    if v < 0:
        if v < -1e-10:
            raise NumericalError(f"negative second moment {v:.3e} in {what}")
        return 0.0
    return math.sqrt(v)


def _position_stage(model):
    return model.position if isinstance(model, JointMeasurementModel) else model


def truncation_status(model, rho, tol=TOL):
    """Interior masses of the initial and evolved product state.

    Emits :class:`TruncationWarning` if either falls below
    ``tol.interior_mass`` and returns ``(before, after, flagged)``.
    """
    before, after = _position_stage(model).interior_mass(_dm(rho))
    flagged = min(before, after) < tol.interior_mass
    if flagged:
        warnings.warn(
            f"interior mass {min(before, after):.6f} below {tol.interior_mass}; truncation may bias results",
            TruncationWarning,
            stacklevel=3,
        )
    return before, after, flagged


# -- O and D quantities -----------------------------------------------------


def o_value(model, rho, which="pointer", check=True):
    """RMS of ``O_f - R_i`` in ``rho (x) alpha``."""
    model = _position_stage(model)
    rho = _dm(rho)
    if check:
        truncation_status(model, rho)
    return _sqrt_clamped(_tr(model.o_moment(which), rho), "O quantity")


def o_error(model, rho, check=True):
    """``sqrt(Tr(eps^2 (rho (x) alpha)))`` with ``eps = pointer_f - x_i``."""
    return o_value(model, rho, "pointer", check)


def o_disturbance(model, rho, check=True):
    """``sqrt(Tr(eta^2 (rho (x) alpha)))`` with ``eta = p_f - p_i``."""
    return o_value(model, rho, "p", check)


def o_error_p(joint, rho, check=True):
    """Momentum error of a joint measurement."""
    return o_value(joint.momentum_view, rho, "pointer", check)


def _mean_sd(A, rho):
    m = _tr(A, rho)
    v = _tr(A @ A, rho) - m * m
    return m, _sqrt_clamped(v, "variance")


def d_value(model, rho, which="pointer", check=True):
    """``sqrt(<(O_f - rbar)^2>) - Delta R``; may be negative."""
    model = _position_stage(model)
    rho = _dm(rho)
    if check:
        truncation_status(model, rho)
    F1, F2 = model.reduced(which)
    R = model.reference(which)
    rbar, dR = _mean_sd(R, rho)
    dev = _tr(F2, rho) - 2 * rbar * _tr(F1, rho) + rbar * rbar
    return _sqrt_clamped(dev, "D quantity") - dR


def d_error(model, rho, check=True):
    return d_value(model, rho, "pointer", check)


def d_disturbance(model, rho, check=True):
    return d_value(model, rho, "p", check)


# -- C quantities -----------------------------------------------------------


@dataclass(frozen=True)
class ExtensionSearchConfig:
    """Settings of the numerical search over extensions ``rho_AB``.

    Parameters
    ----------
    ancilla_dim : int, optional
        Dimension of the reference system A. Defaults to the system dimension.
    restarts : int
        Random restarts for pure extensions and again for mixtures.
    max_iters : int
        Iteration cap per L-BFGS stage.
    seed : int
        Root seed; restart seeds are spawned from it.
    step_schedule : tuple of float
        Finite-difference steps of successive polishing stages.
    mixture_size : int
        Number of purifications mixed in the second search phase (1 disables).
    """

    ancilla_dim: int = None
    restarts: int = 4
    max_iters: int = 200
    seed: int = 0
    step_schedule: tuple = (1e-6, 1e-8)
    mixture_size: int = 3

    def __post_init__(self):
        if self.restarts < 1 or self.max_iters < 1 or self.mixture_size < 1:
            raise ValueError("restarts, max_iters and mixture_size must be positive")
        if not self.step_schedule or any(h <= 0 for h in self.step_schedule):
            raise ValueError("step_schedule must hold positive steps")
        object.__setattr__(self, "step_schedule", tuple(float(h) for h in self.step_schedule))


@dataclass
class ExtensionSearchResult:
    value: float
    optimizer_value: float
    candidate_value: float
    best_candidate: str
    restart_values: list
    flagged: bool
    note: str = ""
    candidates: dict = field(default_factory=dict)


def reference_observable(R, dim):
    """Reference-particle copy of ``R`` on a ``dim``-level space (compressed if smaller)."""
    d = R.shape[0]
    if dim > d:
        raise ValueError(f"ancilla_dim {dim} exceeds system dimension {d}")
    return np.array(R[:dim, :dim])


class _CProblem:
    """Vectorised objective for one (model, state, observable)."""

    def __init__(self, model, rho, which, ancilla_dim):
        model = _position_stage(model)
        rho = _dm(rho)
        d = rho.shape[0]
        self.dA = d if ancilla_dim is None else int(ancilla_dim)
        lam, phi = hermitian_eig(rho, check=False)
        keep = lam > 1e-14
        lam, phi = lam[keep][::-1], phi[:, keep][:, ::-1]
        self.r = lam.size
        if self.dA < self.r:
            raise ValueError(f"ancilla_dim {self.dA} below rank {self.r} of the state")
        F1, F2 = model.reduced(which)
        R = model.reference(which)
        self.RA = reference_observable(R, self.dA)
        self.RA2 = self.RA @ self.RA
        sq = np.sqrt(lam)
        outer = np.outer(sq, sq)
        # K~_jk = sqrt(l_j l_k) <phi_j|K|phi_k>
        self.KF = outer * (phi.conj().T @ F1 @ phi)
        self.KR = outer * (phi.conj().T @ R @ phi)
        self.lam = lam
        self.trF2 = _tr(F2, rho)
        self.trR2 = _tr(R @ R, rho)
        self.rho, self.F1, self.R = rho, F1, R

    def isometry(self, theta):
        n = self.dA * self.r
        G = (theta[:n] + 1j * theta[n:2 * n]).reshape(self.dA, self.r)
        w, V = np.linalg.eigh(G.conj().T @ G)
        w = np.clip(w, 1e-300, None)
        return G @ (V * w**-0.5) @ V.conj().T

    def stats(self, W):
        YA = W.conj().T @ self.RA @ W
        YA2 = W.conj().T @ self.RA2 @ W
        a = float(np.real(np.sum(YA * self.KF)))
        b = float(np.real(np.sum(YA * self.KR)))
        c = float(np.real(np.diag(YA2) @ self.lam))
        return a, b, c

    @staticmethod
    def _g(trF2, trR2, a, b, c):
        t1 = max(trF2 - 2 * a + c, 0.0)
        t2 = max(trR2 - 2 * b + c, 0.0)
        return math.sqrt(t1) - math.sqrt(t2)

    def value(self, theta, m):
        n = 2 * self.dA * self.r
        if m == 1:
            a, b, c = self.stats(self.isometry(theta))
            return self._g(self.trF2, self.trR2, a, b, c)
        beta = theta[m * n:]
        q = np.exp(beta - beta.max())
        q /= q.sum()
        acc = np.zeros(3)
        for k in range(m):
            acc += q[k] * np.array(self.stats(self.isometry(theta[k * n:(k + 1) * n])))
        return self._g(self.trF2, self.trR2, *acc)

    def value_at(self, rho_AB):
        dA, d = self.dA, self.rho.shape[0]
        rho_AB = _dm(rho_AB)
        if rho_AB.shape != (dA * d, dA * d):
            raise ValidationError(f"extension must act on a {dA}x{d} space")
        marg = partial_trace(rho_AB, (dA, d), 1)
        if np.max(np.abs(marg - self.rho)) > 1e-9:
            raise ValidationError("candidate extension does not reduce to the state")
        a = _tr(np.kron(self.RA, self.F1), rho_AB)
        c = _tr(np.kron(self.RA2, np.eye(d)), rho_AB)
        # reference term as Tr(Z rho Z) avoids the sqrt-of-roundoff floor
        Z = np.kron(self.RA, np.eye(d)) - np.kron(np.eye(dA), self.R)
        t2 = max(float(np.real(np.trace(Z @ rho_AB @ Z))), 0.0)
        t1 = max(self.trF2 - 2 * a + c, 0.0)
        return math.sqrt(t1) - math.sqrt(t2)

    def standard_candidates(self):
        d = self.rho.shape[0]
        out = {}
        if self.dA == d:
            out["product_copy"] = np.kron(self.rho, self.rho)
        w, V = hermitian_eig(self.RA, check=False)
        for k in range(self.dA):
            e = V[:, k]
            out[f"product_reference_eigvec_{k}"] = np.kron(np.outer(e, e.conj()), self.rho)
        return out


def c_value_at(model, rho, rho_AB, which="pointer"):
    """C-objective at one explicit extension ``rho_AB`` (reference factor first)."""
    dA = int(round(np.asarray(rho_AB).shape[0] / _dm(rho).shape[0]))
    return _CProblem(model, rho, which, dA).value_at(rho_AB)


def c_search(model, rho, which="pointer", cfg=None, candidates=None):
    """Search the extensions of ``rho`` for the C quantity.

    The optimiser explores purifications ``(W (x) I)|Psi_rho>`` with ``W`` an
    isometry into the reference system, then convex mixtures of
    ``cfg.mixture_size`` of them. Explicit candidate extensions (including
    product extensions built in) are evaluated exactly; the larger value is
    reported. The result is a certified lower bound on the supremum.

    Returns
    -------
    ExtensionSearchResult
    """
    cfg = cfg or ExtensionSearchConfig()
    prob = _CProblem(model, rho, which, cfg.ancilla_dim)
    cands = prob.standard_candidates()
    cands.update(candidates or {})
    cand_vals = {name: prob.value_at(rab) for name, rab in cands.items()}
    best_name = max(cand_vals, key=cand_vals.get)
    n = 2 * prob.dA * prob.r
    seeds = np.random.SeedSequence(cfg.seed).spawn(2 * cfg.restarts)
    restart_vals = []
    best = -math.inf
    best_theta = None
    phases = [(1, seeds[: cfg.restarts])]
    if cfg.mixture_size > 1:
        phases.append((cfg.mixture_size, seeds[cfg.restarts:]))
    for m, phase_seeds in phases:
        for s in phase_seeds:
            rng = np.random.default_rng(s)
            theta = rng.normal(size=m * n + (m if m > 1 else 0))
            if m > 1 and best_theta is not None and len(restart_vals) == cfg.restarts:
                theta[:n] = best_theta  # seed first component with best pure extension
            f = lambda t, m=m: -prob.value(t, m)
            val = -f(theta)
            for h in cfg.step_schedule:
                res = minimize(f, theta, method="L-BFGS-B",
                               options={"maxiter": cfg.max_iters, "eps": h})
                if -res.fun >= val:
                    theta, val = res.x, -res.fun
            restart_vals.append(float(val))
            if val > best:
                best = float(val)
                if m == 1:
                    best_theta = theta.copy()
    cand_best = cand_vals[best_name]
    value = max(best, cand_best)
    flagged = best < cand_best - 1e-6
    note = "optimizer below best candidate" if flagged else ""
    return ExtensionSearchResult(
        value=float(value), optimizer_value=float(best), candidate_value=float(cand_best),
        best_candidate=best_name, restart_values=restart_vals, flagged=flagged, note=note,
        candidates=cand_vals,
    )


def c_error(model, rho, cfg=None, candidates=None):
    """C error (lower bound on the supremum over extensions)."""
    return c_search(model, rho, "pointer", cfg, candidates).value


def c_disturbance(model, rho, cfg=None, candidates=None):
    """C disturbance of the conjugate observable (lower bound)."""
    return c_search(model, rho, "p", cfg, candidates).value


# -- distributions ----------------------------------------------------------


def pointer_distribution(model, rho, which="pointer", name="pointer"):
    """Outcome distribution of the final observable ``which`` in ``rho (x) alpha``."""
    rho = _dm(rho)
    vals, effects = _position_stage(model).povm(which)
    w = np.array([_tr(E, rho) for E in effects])
    if np.any(w < -1e-10):
        raise NumericalError("negative outcome probability")
    return OutcomeDistribution.from_unnormalized(vals, w, name)


def observable_distribution(A, rho, name="observable", gap=TOL.degeneracy_gap):
    """Born distribution of a Hermitian observable ``A`` in ``rho``."""
    rho = _dm(rho)
    evals, V = hermitian_eig(A, check=False)
    probs = np.real(np.einsum("ik,ij,jk->k", V.conj(), rho, V))
    vals, w = merge_support(evals, np.clip(probs, 0, None), gap)
    return OutcomeDistribution.from_unnormalized(vals, w, name)


def wasserstein2(d1, d2):
    """Wasserstein-2 distance between two distributions on the line.

    Uses the quantile coupling: both quantile functions are step functions, so
    the integral of their squared difference is a finite sum over the merged
    breakpoints of the two cumulative distributions.
    """
    c1 = np.cumsum(d1.weights)
    c2 = np.cumsum(d2.weights)
    c1 /= c1[-1]
    c2 /= c2[-1]
    t = np.union1d(c1, c2)
    t = t[(t > 0)]
    t[-1] = 1.0
    lo = np.concatenate(([0.0], t[:-1]))
    mid = 0.5 * (lo + t)
    widths = t - lo
    q1 = d1.support[np.minimum(np.searchsorted(c1, mid), c1.size - 1)]
    q2 = d2.support[np.minimum(np.searchsorted(c2, mid), c2.size - 1)]
    return float(math.sqrt(max(np.dot(widths, (q1 - q2) ** 2), 0.0)))


def moments(d):
    """Mean and variance of an outcome distribution."""
    return d.mean(), d.variance()


# -- reports ----------------------------------------------------------------


@dataclass
class MetricsReport:
    """All error and disturbance figures for one (model, state) pair."""

    o_error: float
    o_disturbance: float
    d_error: float
    d_disturbance: float
    c_error: float
    c_disturbance: float
    uncertainty_x: float
    uncertainty_p: float
    mean_x: float
    mean_p: float
    model_id: str = ""
    state_id: str = ""
    diagnostics: dict = field(default_factory=dict)

    def as_dict(self):
        return {k: getattr(self, k) for k in (
            "o_error", "o_disturbance", "d_error", "d_disturbance", "c_error", "c_disturbance",
            "uncertainty_x", "uncertainty_p", "mean_x", "mean_p")}


def metrics_report(model, rho, cfg=None, state_id="", candidates=None, include_c=True):
    """Evaluate every quantity for ``model`` in state ``rho``.

    ``candidates`` maps ``"pointer"``/``"p"`` to dicts of explicit extensions
    evaluated alongside the optimiser.
    """
    model = _position_stage(model)
    rho = density(_dm(rho))
    before, after, flagged = truncation_status(model, rho)
    mx, dx = _mean_sd(model.x, rho)
    mp, dp = _mean_sd(model.p, rho)
    diag = {"interior_mass": (before, after), "truncation_flag": flagged}
    if getattr(model, "dilation_note", None):
        diag["dilation"] = model.dilation_note
    ce = cd = math.nan
    if include_c:
        cands = candidates or {}
        re = c_search(model, rho, "pointer", cfg, cands.get("pointer"))
        rd = c_search(model, rho, "p", cfg, cands.get("p"))
        ce, cd = re.value, rd.value
        diag["c_error_search"] = re
        diag["c_disturbance_search"] = rd
    return MetricsReport(
        o_error=o_error(model, rho, False), o_disturbance=o_disturbance(model, rho, False),
        d_error=d_error(model, rho, False), d_disturbance=d_disturbance(model, rho, False),
        c_error=ce, c_disturbance=cd, uncertainty_x=dx, uncertainty_p=dp, mean_x=mx, mean_p=mp,
        model_id=model.name, state_id=state_id, diagnostics=diag,
    )


def bound_chain(report, include_upper_c=True):
    """Slacks (``rhs - lhs``) of the error and disturbance bound chains.

    Returns a dict ``name -> slack``; a chain holds when every slack is
    nonnegative up to tolerance. C-side entries are skipped when the C values
    are missing.
    """
    out = {}
    for tag, o, d, c, delta in (
        ("error", report.o_error, report.d_error, report.c_error, report.uncertainty_x),
        ("disturbance", report.o_disturbance, report.d_disturbance, report.c_disturbance, report.uncertainty_p),
    ):
        out[f"{tag}:d<=o"] = o - d
        out[f"{tag}:o<=d+2delta"] = d + 2 * delta - o
        if not math.isnan(c):
            out[f"{tag}:c<=o"] = o - c
            if include_upper_c:
                out[f"{tag}:o<=c+2delta"] = c + 2 * delta - o
            out[f"{tag}:|c-d|<=2delta"] = 2 * delta - abs(c - d)
    return out
