import numpy as np
import pytest

from qerrdist.distributions import OutcomeDistribution, merge_support
from qerrdist.errors import ValidationError


def test_point_mass_moments():
    d = OutcomeDistribution.point_mass(2.5)
    assert d.mean() == 2.5
    assert d.variance() == 0.0


def test_merge_support_clusters_close_values():
    v, w = merge_support([1.0, 1.0 + 1e-12, 3.0, 0.0], [0.25, 0.25, 0.25, 0.25])
    assert np.allclose(v, [0.0, 1.0, 3.0])
    assert np.allclose(w, [0.25, 0.5, 0.25])


def test_from_unnormalized_normalises():
    d = OutcomeDistribution.from_unnormalized([2.0, 1.0], [3.0, 1.0])
    assert np.allclose(d.support, [1.0, 2.0])
    assert np.allclose(d.weights, [0.25, 0.75])
    assert np.allclose(d.cdf(), [0.25, 1.0])


@pytest.mark.parametrize(
    "support, weights",
    [([0.0, 1.0], [0.5, 0.6]), ([0.0, 1.0], [1.2, -0.2]), ([0.0, np.nan], [0.5, 0.5]), ([0.0], [0.5, 0.5])],
)
def test_invalid_distributions_rejected(support, weights):
    with pytest.raises(ValidationError):
        OutcomeDistribution(support, weights)
