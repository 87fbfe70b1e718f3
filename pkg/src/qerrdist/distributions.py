"""Discrete outcome distributions on the real line."""

from dataclasses import dataclass

import numpy as np

from .config import TOL
from .errors import ValidationError

__all__ = ["OutcomeDistribution", "merge_support"]


def merge_support(values, weights, gap=TOL.degeneracy_gap):
    """Sort ``values`` and merge points closer than ``gap``.

    Merged points take the weight-averaged location of their cluster. Clusters
    are formed by chaining consecutive sorted values.
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    weights = np.asarray(weights, dtype=float).reshape(-1)
    order = np.argsort(values, kind="stable")
    v, w = values[order], weights[order]
    if v.size == 0:
        return v, w
    new_cluster = np.empty(v.size, dtype=bool)
    new_cluster[0] = True
    new_cluster[1:] = np.diff(v) > gap
    ids = np.cumsum(new_cluster) - 1
    n = ids[-1] + 1
    counts = np.bincount(ids, minlength=n)
    wsum = np.bincount(ids, weights=w, minlength=n)
    plain = np.bincount(ids, weights=v, minlength=n) / counts
    weighted = np.bincount(ids, weights=v * w, minlength=n) / np.where(wsum > 0, wsum, 1.0)
    loc = np.where(wsum > 0, weighted, plain)
    return loc, wsum


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    """Finitely supported probability distribution on the real line.

    Parameters
    ----------
    support : array_like
        Outcome values. Sorted on construction.
    weights : array_like
        Probabilities, nonnegative and summing to one within
        ``TOL.distribution_sum``.
    name : str, optional
        Label used when the distribution is serialised.
    """

    support: np.ndarray
    weights: np.ndarray
    name: str = ""

    def __post_init__(self):
        s = np.asarray(self.support, dtype=float).reshape(-1)
        w = np.asarray(self.weights, dtype=float).reshape(-1)
        if s.shape != w.shape:
            raise ValidationError("support and weights differ in length")
        if not np.all(np.isfinite(s)) or not np.all(np.isfinite(w)):
            raise ValidationError("non-finite entries in distribution")
        if np.any(w < -TOL.positivity):
            raise ValidationError(f"negative weight {w.min():.3e}")
        total = w.sum()
        if abs(total - 1.0) > TOL.distribution_sum:
            raise ValidationError(f"weights sum to {total!r}")
        order = np.argsort(s, kind="stable")
        s, w = s[order], np.clip(w[order], 0.0, None)
        s.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "support", s)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_unnormalized(cls, support, weights, name="", merge_gap=None):
        """Build from raw weights, renormalising and optionally merging."""
        s = np.asarray(support, dtype=float)
        w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        if merge_gap is not None:
            s, w = merge_support(s, w, merge_gap)
        return cls(s, w / w.sum(), name)

    @classmethod
    def point_mass(cls, a, name=""):
        return cls(np.array([float(a)]), np.array([1.0]), name)

    def __len__(self):
        return self.support.size

    def mean(self):
        return float(np.dot(self.weights, self.support))

    def variance(self):
        m = self.mean()
        return float(np.dot(self.weights, (self.support - m) ** 2))

    def cdf(self):
        return np.cumsum(self.weights)

    def renamed(self, name):
        return OutcomeDistribution(self.support, self.weights, name)
