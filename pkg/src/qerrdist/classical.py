"""Classical measurement error and disturbance for transition kernels.

A kernel maps every phase-space grid node ``(x, p)`` to a probability vector
over finitely many outcomes. The pointwise RMS error ``sigma(x, p)`` and its
supremum over nodes are compared with the variational form, a supremum over
phase-space measures of ``sqrt(<(mu - xbar)^2>) - Delta x``.
"""

from dataclasses import dataclass

import numpy as np

from .config import TOL
from .errors import ShapeError, ValidationError

__all__ = [
    "PhaseSpaceGrid",
    "TransitionKernel",
    "PhaseMeasure",
    "VariationalResult",
    "pointwise_error",
    "pointwise_disturbance",
    "sup_error",
    "sup_disturbance",
    "variational_error",
    "variational_disturbance",
    "variational_values",
    "one_sided_slack",
    "point_mass_measures",
    "random_measures",
    "random_kernel",
    "perfect_kernel",
    "constant_kernel",
    "noise_kernel",
    "kick_kernel",
]


@dataclass(frozen=True, eq=False)
class PhaseSpaceGrid:
    """Tensor grid of position and momentum nodes (x outer, p inner)."""

    x: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        for name in ("x", "p"):
            a = np.asarray(getattr(self, name), dtype=float).reshape(-1)
            if a.size < 2 or np.any(np.diff(a) <= 0):
                raise ValidationError(f"{name} nodes must be strictly increasing, at least two")
            a.setflags(write=False)
            object.__setattr__(self, name, a)

    @property
    def shape(self):
        return (self.x.size, self.p.size)

    @property
    def size(self):
        return self.x.size * self.p.size

    def coords(self):
        """Flattened ``(x, p)`` coordinates of every node."""
        X, P = np.meshgrid(self.x, self.p, indexing="ij")
        return X.reshape(-1), P.reshape(-1)

    def index(self, x, p, atol=1e-12):
        ix = np.flatnonzero(np.abs(self.x - x) <= atol)
        ip = np.flatnonzero(np.abs(self.p - p) <= atol)
        if ix.size != 1 or ip.size != 1:
            raise ValueError(f"({x}, {p}) is not a grid node")
        return int(ix[0]) * self.p.size + int(ip[0])


@dataclass(frozen=True, eq=False)
class TransitionKernel:
    """Row-stochastic map from grid nodes to outcome values.

    Parameters
    ----------
    grid : PhaseSpaceGrid
    outcomes : array_like
        Sorted outcome values.
    probabilities : array_like, shape (grid.size, len(outcomes))
        Row ``i`` is the outcome distribution at flattened node ``i``.
    """

    grid: PhaseSpaceGrid
    outcomes: np.ndarray
    probabilities: np.ndarray

    def __post_init__(self):
        o = np.asarray(self.outcomes, dtype=float).reshape(-1)
        P = np.asarray(self.probabilities, dtype=float)
        if np.any(np.diff(o) <= 0):
            raise ValidationError("outcomes must be strictly increasing")
        if P.shape != (self.grid.size, o.size):
            raise ShapeError(f"probabilities shape {P.shape} != {(self.grid.size, o.size)}")
        if np.any(P < 0):
            raise ValidationError("negative transition probability")
        dev = np.max(np.abs(P.sum(axis=1) - 1.0))
        if dev > TOL.kernel_row_sum:
            raise ValidationError(f"kernel rows deviate from unit sum by {dev:.3e}")
        o.setflags(write=False)
        P.setflags(write=False)
        object.__setattr__(self, "outcomes", o)
        object.__setattr__(self, "probabilities", P)

    def moments(self):
        """First and second outcome moments at every node."""
        return self.probabilities @ self.outcomes, self.probabilities @ self.outcomes**2


@dataclass(frozen=True, eq=False)
class PhaseMeasure:
    """Probability weights over the flattened grid nodes."""

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if np.any(w < 0) or abs(w.sum() - 1.0) > TOL.kernel_row_sum:
            raise ValidationError("measure weights must be nonnegative and sum to one")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)


def _reference(kernel, coord):
    xs, ps = kernel.grid.coords()
    return xs if coord == "x" else ps


def _pointwise(kernel, coord):
    ref = _reference(kernel, coord)
    dev = (kernel.outcomes[None, :] - ref[:, None]) ** 2
    return np.sqrt(np.sum(kernel.probabilities * dev, axis=1))


def pointwise_error(kernel, x, p):
    """RMS difference between outcome and true position at node ``(x, p)``."""
    return float(_pointwise(kernel, "x")[kernel.grid.index(x, p)])


def pointwise_disturbance(kernel, x, p):
    """RMS change of momentum at node ``(x, p)`` for a momentum kernel."""
    return float(_pointwise(kernel, "p")[kernel.grid.index(x, p)])


def sup_error(kernel):
    return float(_pointwise(kernel, "x").max())


def sup_disturbance(kernel):
    return float(_pointwise(kernel, "p").max())


def variational_values(kernel, measures, coord="x"):
    """Inner values ``sqrt(<(mu - cbar)^2>) - Delta c`` for each measure.

    ``measures`` is a sequence of :class:`PhaseMeasure` or a 2-d array with one
    measure per row.
    """
    W = np.array([m.weights for m in measures]) if not isinstance(measures, np.ndarray) else measures
    ref = _reference(kernel, coord)
    m1, m2 = kernel.moments()
    cbar = W @ ref
    # centred moments, written to avoid cancellation at point masses
    dev = W @ m2 - 2 * cbar * (W @ m1) + cbar**2
    spread = np.clip(W @ ref**2 - cbar**2, 0.0, None)
    # at a point mass the inner value must equal the pointwise formula exactly
    pm = W.max(axis=1) >= 1.0 - 1e-15
    if np.any(pm):
        point = _pointwise(kernel, coord)
        dev = np.where(pm, point[W.argmax(axis=1)] ** 2, dev)
        spread = np.where(pm, 0.0, spread)
    return np.sqrt(np.clip(dev, 0.0, None)) - np.sqrt(spread)


@dataclass
class VariationalResult:
    value: float
    argmax: int
    at_point_mass: bool
    values: np.ndarray


def _variational(kernel, measures, coord):
    W = np.array([m.weights for m in measures]) if not isinstance(measures, np.ndarray) else measures
    if not np.all(np.any(W >= 1.0 - 1e-15, axis=0)):
        raise ValueError("measure set must contain the point mass at every grid node")
    vals = variational_values(kernel, W, coord)
    k = int(np.argmax(vals))
    return VariationalResult(float(vals[k]), k, bool(W[k].max() >= 1.0 - 1e-15), vals)


def variational_error(kernel, measures):
    """Supremum over ``measures`` of the deviation increase of the outcome."""
    return _variational(kernel, measures, "x")


def variational_disturbance(kernel, measures):
    return _variational(kernel, measures, "p")


def one_sided_slack(kernel, measures, coord="x"):
    """Per-measure slack of ``sqrt(<(mu - cbar)^2>) <= Delta c + sup sigma``.

    Nonnegative entries mean the bound holds for that measure.
    """
    W = np.array([m.weights for m in measures]) if not isinstance(measures, np.ndarray) else measures
    vals = variational_values(kernel, W, coord)
    sup = _pointwise(kernel, coord).max()
    return sup - vals


def point_mass_measures(grid):
    return np.eye(grid.size)


def random_measures(grid, n, seed=None, concentration=0.5):
    """``n`` Dirichlet-distributed measures over the grid nodes."""
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.full(grid.size, concentration), size=n)


# -- kernel builders --------------------------------------------------------


def random_kernel(grid, outcomes, seed=None, concentration=1.0):
    rng = np.random.default_rng(seed)
    P = rng.dirichlet(np.full(len(outcomes), concentration), size=grid.size)
    return TransitionKernel(grid, outcomes, P)


def _nearest_kernel(grid, outcomes, target):
    outcomes = np.asarray(outcomes, dtype=float)
    idx = np.argmin(np.abs(outcomes[None, :] - target[:, None]), axis=1)
    if np.max(np.abs(outcomes[idx] - target)) > 1e-12:
        raise ValueError("outcome set does not contain every target value")
    P = np.zeros((grid.size, outcomes.size))
    P[np.arange(grid.size), idx] = 1.0
    return TransitionKernel(grid, outcomes, P)


def perfect_kernel(grid):
    """Outcome equals the true position."""
    xs, _ = grid.coords()
    return _nearest_kernel(grid, grid.x, xs)


def constant_kernel(grid, mu0):
    return TransitionKernel(grid, [mu0], np.ones((grid.size, 1)))


def noise_kernel(grid, delta):
    """Uniform outcome over ``{x - delta, x, x + delta}``; requires ``delta`` to be a node spacing multiple."""
    xs, _ = grid.coords()
    outcomes = np.unique(np.round(np.concatenate([grid.x - delta, grid.x, grid.x + delta]), 12))
    P = np.zeros((grid.size, outcomes.size))
    for shift in (-delta, 0.0, delta):
        idx = np.argmin(np.abs(outcomes[None, :] - (xs + shift)[:, None]), axis=1)
        P[np.arange(grid.size), idx] += 1.0 / 3.0
    return TransitionKernel(grid, outcomes, P)


def kick_kernel(grid, k):
    """Momentum kernel ``p -> p + k`` deterministically."""
    _, ps = grid.coords()
    outcomes = np.unique(np.round(ps + k, 12))
    return _nearest_kernel(grid, outcomes, ps + k)
