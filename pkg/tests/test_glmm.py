import numpy as np
import pytest

from borrowfac import (
    DimensionError,
    NonPositiveOffset,
    poisson_pseudo_observations,
)


def test_frozen_values_moment_matched():
    pd = poisson_pseudo_observations(np.array([100.0]), np.array([50.0]))
    assert pd.rate[0] == 2.0
    assert pd.response[0] == pytest.approx(np.log(2.0), abs=1e-15)
    assert pd.variance[0] == pytest.approx(0.01, abs=1e-15)
    assert pd.mode == "moment_matched"


def test_frozen_values_paper_literal():
    pd = poisson_pseudo_observations(
        np.array([100.0]), np.array([50.0]), mode="paper_literal"
    )
    assert pd.variance[0] == pytest.approx(0.5, abs=1e-15)
    assert pd.mode == "paper_literal"


def test_zero_count_correction():
    pd = poisson_pseudo_observations(np.array([0.0]), np.array([10.0]))
    assert pd.rate[0] == pytest.approx(0.05)
    assert pd.response[0] == pytest.approx(np.log(0.05))


def test_zero_correction_only_applies_to_zeros():
    pd = poisson_pseudo_observations(np.array([0.0, 3.0]), np.array([10.0, 10.0]))
    assert pd.rate[1] == pytest.approx(0.3)


def test_rejects_shape_mismatch():
    with pytest.raises(DimensionError):
        poisson_pseudo_observations(np.array([1.0, 2.0]), np.array([1.0]))


def test_rejects_empty():
    with pytest.raises(DimensionError):
        poisson_pseudo_observations(np.array([]), np.array([]))


def test_rejects_negative_counts():
    with pytest.raises(ValueError):
        poisson_pseudo_observations(np.array([-1.0]), np.array([1.0]))


def test_rejects_nonpositive_offsets():
    with pytest.raises(NonPositiveOffset):
        poisson_pseudo_observations(np.array([1.0]), np.array([0.0]))
    with pytest.raises(NonPositiveOffset):
        poisson_pseudo_observations(np.array([1.0]), np.array([np.nan]))


def test_rejects_unknown_mode():
    with pytest.raises(ValueError):
        poisson_pseudo_observations(np.array([1.0]), np.array([1.0]), mode="other")


def test_simulation_consistency_moment_matched():
    # Y ~ Poisson(eta * E), large eta*E: over many draws the pseudo
    # response mean approaches log eta and its variance (eta E)^{-1}.
    # The log transform carries a -1/(2 eta E) bias, so the 3-SE band
    # around log eta needs eta*E well above the >= 50 validity floor.
    rng = np.random.default_rng(3)
    eta, e = 2.5, 1000.0
    draws = rng.poisson(eta * e, size=10_000).astype(np.float64)
    pd = poisson_pseudo_observations(draws, np.full_like(draws, e))
    mean = pd.response.mean()
    se = pd.response.std(ddof=1) / np.sqrt(draws.size)
    assert abs(mean - np.log(eta)) < 3 * se
    assert abs(pd.response.var(ddof=1) - 1 / (eta * e)) < 0.2 / (eta * e)
