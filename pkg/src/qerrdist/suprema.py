"""State families over phase-space boxes, suprema and relation verifiers.

A family displaces a fiducial state over a grid covering the box
``[-l_X/2, l_X/2] x [-l_P/2, l_P/2]``. With ``closure`` enabled each grid
point also contributes the normalised states ``x rho_xp x`` and
``p rho_xp p``, which is the membership condition the restricted relations
require.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .config import TOL
from .errors import FamilyConditionError, PreconditionError, TruncationError
from .hilbert import density
from .measurement import JointMeasurementModel
from . import metrics as mt
from . import oscillator as osc

__all__ = [
    "ExtendedReal",
    "INF",
    "RegionSpec",
    "StateFamily",
    "FamilyMember",
    "SupResult",
    "InequalityReport",
    "enumerate_family",
    "sup_metric",
    "sup_with_refinement",
    "k_constants",
    "verify_restricted",
    "verify_ozawa",
    "verify_sup_ozawa",
]


class ExtendedReal(float):
    """Nonnegative real or ``+inf`` with ``q * inf = inf`` for every ``q >= 0``."""

    def __new__(cls, value):
        v = float(value)
        if math.isnan(v) or v < 0:
            raise ValueError(f"ExtendedReal must be nonnegative, got {value!r}")
        return super().__new__(cls, v)

    @property
    def is_infinite(self):
        return math.isinf(self)

    def __mul__(self, other):
        o = float(other)
        if math.isinf(self) or math.isinf(o):
            if o < 0:
                raise ValueError("ExtendedReal products need nonnegative factors")
            return ExtendedReal(math.inf)
        return ExtendedReal(float(self) * o) if o >= 0 else float(self) * o

    __rmul__ = __mul__

    def __add__(self, other):
        o = float(other)
        return ExtendedReal(float(self) + o) if o >= 0 else float(self) + o

    __radd__ = __add__

    def __repr__(self):
        return f"ExtendedReal({float(self)!r})"


INF = ExtendedReal(math.inf)


@dataclass(frozen=True)
class RegionSpec:
    """Phase-space box ``l_X x l_P`` sampled on a ``grid_nx x grid_np`` grid.

    A grid size of 1 places a single node at the centre of that axis.
    """

    l_X: float
    l_P: float
    grid_nx: int = 5
    grid_np: int = 5

    def __post_init__(self):
        if not (self.l_X > 0 and self.l_P > 0):
            raise ValueError("box sides must be positive")
        for n in (self.grid_nx, self.grid_np):
            if int(n) != n or not (n == 1 or n >= 3):
                raise ValueError("grids need 1 or at least 3 points per axis")

    def nodes(self):
        def axis(length, n):
            return np.array([0.0]) if n == 1 else np.linspace(-length / 2, length / 2, int(n))

        return axis(self.l_X, self.grid_nx), axis(self.l_P, self.grid_np)

    def refined(self):
        """Grid with every interval halved (nodes nested in the original)."""
        f = lambda n: n if n == 1 else 2 * n - 1
        return RegionSpec(self.l_X, self.l_P, f(self.grid_nx), f(self.grid_np))


@dataclass(frozen=True)
class FamilyMember:
    id: str
    x: float
    p: float
    kind: str
    rho: np.ndarray


@dataclass(frozen=True, eq=False)
class StateFamily:
    """Displaced copies of a fiducial state over a region, optionally closed.

    Parameters
    ----------
    fiducial : ndarray
        System state (vector or density matrix) in the Fock basis of ``rep``.
    region : RegionSpec
    rep : OscillatorRep
    closure : bool
        Include ``x rho_xp x / Tr(rho_xp x^2)`` and ``p rho_xp p / Tr(rho_xp p^2)``.
    """

    fiducial: np.ndarray
    region: RegionSpec
    rep: osc.OscillatorRep
    closure: bool = False
    name: str = "family"

    def __post_init__(self):
        rho = density(np.asarray(self.fiducial))
        if rho.shape != (self.rep.dim, self.rep.dim):
            raise ValueError("fiducial does not match the representation")
        rho.setflags(write=False)
        object.__setattr__(self, "fiducial", rho)

    def refined(self):
        return StateFamily(self.fiducial, self.region.refined(), self.rep, self.closure, self.name)

    def members(self):
        return enumerate_family(self)


def _interior_mass(rep, rho):
    return float(np.real(np.diag(rho))[: rep.interior_dim].sum())


def enumerate_family(family, tol=TOL):
    """Yield the members of ``family`` in a fixed order.

    Order: x nodes outer, p nodes inner; at each node the displaced state,
    then (with closure) the x- and p-weighted states.

    Raises
    ------
    TruncationError
        If a member leaves less than ``tol.interior_mass`` on the interior
        levels of the representation.
    """
    rep = family.rep
    X, P = osc.position_op(rep), osc.momentum_op(rep)
    xs, ps = family.region.nodes()
    for x in xs:
        for p in ps:
            D = osc.displacement_op(rep, float(x), float(p))
            rho = D @ family.fiducial @ D.conj().T
            rho = 0.5 * (rho + rho.conj().T)
            states = [("displaced", rho)]
            if family.closure:
                for kind, O in (("x-closure", X), ("p-closure", P)):
                    s = O @ rho @ O
                    states.append((kind, s / np.trace(s).real))
            for kind, s in states:
                m = _interior_mass(rep, s)
                if m < tol.interior_mass:
                    raise TruncationError(
                        f"member ({x:.6g}, {p:.6g}, {kind}) has interior mass {m:.6f}; increase dim"
                    )
                yield FamilyMember(f"x={x:.12g},p={p:.12g},{kind}", float(x), float(p), kind, s)


@dataclass
class SupResult:
    value: ExtendedReal
    argmax: str
    n_members: int
    grid: tuple
    values: dict = field(default_factory=dict, repr=False)
    refined_value: float = None


def sup_metric(metric, family, keep_values=False):
    """Maximum of ``metric(rho)`` over the members of ``family``.

    A non-finite metric value makes the supremum ``+inf`` and names the
    offending member.
    """
    best, arg, n = -math.inf, "", 0
    vals = {}
    for mem in enumerate_family(family):
        v = float(metric(mem.rho))
        n += 1
        if keep_values:
            vals[mem.id] = v
        if not math.isfinite(v):
            return SupResult(INF, mem.id, n, (family.region.grid_nx, family.region.grid_np), vals)
        if v > best:
            best, arg = v, mem.id
    return SupResult(ExtendedReal(max(best, 0.0)), arg, n,
                     (family.region.grid_nx, family.region.grid_np), vals)


def sup_with_refinement(metric, family):
    """``sup_metric`` on the family grid and on the halved grid."""
    res = sup_metric(metric, family)
    res.refined_value = float(sup_metric(metric, family.refined()).value)
    return res


def k_constants(family):
    """``(K_x, K_p) = (sup Delta p, sup Delta x)`` over the family."""
    from .hilbert import uncertainty

    rep = family.rep
    X, P = osc.position_op(rep), osc.momentum_op(rep)
    kx = kp = 0.0
    for mem in enumerate_family(family):
        kx = max(kx, uncertainty(P, mem.rho))
        kp = max(kp, uncertainty(X, mem.rho))
    return kx, kp


@dataclass
class InequalityReport:
    """Outcome of one inequality check; ``slack = lhs - rhs``."""

    name: str
    lhs: float
    rhs: float
    slack: float
    passed: bool
    terms: dict = field(default_factory=dict)
    carrier: str = ""
    details: dict = field(default_factory=dict)


def _report(name, terms, rhs, hbar, details=None):
    lhs = 0.0
    for v in terms.values():
        lhs = lhs + v
    lhs = float(lhs)
    slack = lhs - rhs
    carrier = max(terms, key=lambda k: float(terms[k])) if terms else ""
    passed = bool(slack >= -TOL.inequality_slack * hbar)
    return InequalityReport(name, lhs, rhs, slack, passed,
                            {k: float(v) for k, v in terms.items()}, carrier, details or {})


def _require_canonical(model):
    if not getattr(model, "canonical", False):
        raise PreconditionError("relation applies to canonical position/momentum pairs only")


def _family_sups(kind, model, family):
    if kind == "ed":
        fa = lambda r: mt.o_error(model, r, check=False)
        fb = lambda r: mt.o_disturbance(model, r, check=False)
        names = ("epsilon_R(x)", "eta_R(p)")
    elif kind == "ee":
        if not isinstance(model, JointMeasurementModel):
            raise PreconditionError("error-error relations need a joint measurement model")
        fa = lambda r: mt.o_error(model.position, r, check=False)
        fb = lambda r: mt.o_error_p(model, r, check=False)
        names = ("epsilon_R(x)", "epsilon_R(p)")
    else:
        raise ValueError("kind must be 'ed' or 'ee'")
    return sup_metric(fa, family), sup_metric(fb, family), names


def verify_restricted(kind, model, family):
    """Restricted-region relation ``a b + (hbar/l_X) a + (hbar/l_P) b >= hbar/2``.

    ``a, b`` are the suprema over the (closed) family of the O error and the
    O disturbance (``kind="ed"``) or the two O errors of a joint measurement
    (``kind="ee"``).

    Raises
    ------
    FamilyConditionError
        If the family is not closed under the x- and p-weighting maps.
    """
    _require_canonical(model)
    if not family.closure:
        raise FamilyConditionError("family must include the x- and p-weighted closure states")
    sa, sb, (na, nb) = _family_sups(kind, model, family)
    a, b = sa.value, sb.value
    hbar = model.hbar
    R = family.region
    terms = {
        f"{na}*{nb}": a * b,
        f"(hbar/l_X)*{na}": ExtendedReal(hbar / R.l_X) * a,
        f"(hbar/l_P)*{nb}": ExtendedReal(hbar / R.l_P) * b,
    }
    return _report(f"restricted_{kind}", terms, hbar / 2, hbar,
                   {na: float(a), nb: float(b), "argmax": (sa.argmax, sb.argmax),
                    "members": sa.n_members})


def verify_ozawa(kind, model, rho):
    """State-dependent relation ``a b + Delta p a + Delta x b >= hbar/2``.

    ``kind="ed"`` uses O error and O disturbance, ``kind="ee"`` the two O
    errors of a joint measurement.
    """
    _require_canonical(model)
    from .hilbert import uncertainty

    if kind == "ed":
        a = mt.o_error(model, rho)
        b = mt.o_disturbance(model, rho)
        na, nb = "epsilon(x)", "eta(p)"
    elif kind == "ee":
        if not isinstance(model, JointMeasurementModel):
            raise PreconditionError("error-error relations need a joint measurement model")
        a = mt.o_error(model.position, rho)
        b = mt.o_error_p(model, rho)
        na, nb = "epsilon(x)", "epsilon(p)"
    else:
        raise ValueError("kind must be 'ed' or 'ee'")
    rho = mt._dm(rho)
    dx, dp = uncertainty(model.x, rho), uncertainty(model.p, rho)
    terms = {f"{na}*{nb}": a * b, f"Delta_p*{na}": dp * a, f"Delta_x*{nb}": dx * b}
    return _report(f"ozawa_{kind}", terms, model.hbar / 2, model.hbar,
                   {na: a, nb: b, "Delta_x": dx, "Delta_p": dp})


def verify_sup_ozawa(model, family, kind="ed"):
    """Supremum form ``a b + K_x a + K_p b >= hbar/2`` with family suprema.

    The report records whether this relation is weaker than the
    restricted-region one, i.e. whether ``hbar/l_X <= K_x`` and
    ``hbar/l_P <= K_p``, together with the two left-hand sides.
    """
    _require_canonical(model)
    sa, sb, (na, nb) = _family_sups(kind, model, family)
    a, b = sa.value, sb.value
    kx, kp = k_constants(family)
    hbar = model.hbar
    R = family.region
    terms = {f"{na}*{nb}": a * b, f"K_x*{na}": ExtendedReal(kx) * a, f"K_p*{nb}": ExtendedReal(kp) * b}
    rep = _report(f"sup_ozawa_{kind}", terms, hbar / 2, hbar)
    restricted_lhs_value = float(a * b + ExtendedReal(hbar / R.l_X) * a + ExtendedReal(hbar / R.l_P) * b)
    rep.details = {
        na: float(a), nb: float(b), "K_x": kx, "K_p": kp,
        "weaker_than_restricted": bool(hbar / R.l_X <= kx and hbar / R.l_P <= kp),
        "stronger_than_restricted": bool(hbar / R.l_X >= kx and hbar / R.l_P >= kp),
        "restricted_lhs": restricted_lhs_value,
    }
    return rep
