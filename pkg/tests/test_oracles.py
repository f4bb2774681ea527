import numpy as np
import pytest
import scipy.sparse as sp

from borrowfac import (
    FlatPriorRequired,
    IIDBlocks,
    ModelSpec,
    SingularAfterDeletion,
    compute_scale,
    detect_clusters,
    oracles,
    synth,
    validate_spec,
)
from borrowfac.oracles import OneWayProblem


def test_oneway_weights_rowsums():
    p = OneWayProblem(sizes=(3, 1, 4), phi2=(1.0, 0.5, 2.0), sigma2=1.5)
    w = oracles.oneway_weights(p).observation_matrix(p)
    np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-13)


def test_oneway_weights_shared_within_group():
    p = OneWayProblem(sizes=(2, 3), phi2=(1.0, 1.0), sigma2=1.0)
    w = oracles.oneway_weights(p).observation_matrix(p)
    np.testing.assert_allclose(w[0], w[1], atol=1e-15)
    np.testing.assert_allclose(w[2], w[3], atol=1e-15)


def test_oneway_matches_engine_small(rng):
    for _ in range(5):
        p = synth.random_oneway(rng, max_clusters=8)
        expected = oracles.oneway_weights(p).observation_matrix(p)
        w = oracles.dense_weights(synth.oneway_model(p))
        np.testing.assert_allclose(w, expected, rtol=1e-10, atol=1e-13)


def test_dense_weights_two_obs_by_hand():
    # one group, two obs, phi=sigma=1: V = (X'X + diag(0, 1))^{-1} with
    # X = [1 1; 1 1]; W = X V X' has every entry (3 - 2)/... compute directly
    x1 = np.ones((2, 1))
    x2 = sp.csr_matrix(np.ones((2, 1)))
    m = validate_spec(
        ModelSpec(
            n_obs=2,
            fixed_design=x1,
            random_design=x2,
            noise_variances=np.ones(2),
            random_structure=IIDBlocks((1,), (1.0,)),
        )
    )
    w = oracles.dense_weights(m)
    x = np.ones((2, 2))
    v = np.linalg.inv(x.T @ x + np.diag([0.0, 1.0]))
    np.testing.assert_allclose(w, x @ v @ x.T, atol=1e-14)
    np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-14)


def test_hat_identity_random(rng):
    for _ in range(5):
        m = synth.random_model(rng, max_n=100)
        hat = oracles.hat_decomposition(m)
        w = oracles.dense_weights(m)
        np.testing.assert_allclose(hat.weight_matrix(), w, atol=1e-10)


def test_hat_h_is_idempotent_projector(rng):
    m = synth.random_model(rng, max_n=80)
    hat = oracles.hat_decomposition(m)
    h = hat.h1
    np.testing.assert_allclose(h @ h, h, atol=1e-9)


def test_hat_requires_flat_prior():
    x1 = np.ones((4, 1))
    x2 = sp.csr_matrix(np.kron(np.eye(2), np.ones((2, 1))))
    m = validate_spec(
        ModelSpec(
            n_obs=4,
            fixed_design=x1,
            random_design=x2,
            noise_variances=np.ones(4),
            random_structure=IIDBlocks((2,), (1.0,)),
            fixed_prior_precision=np.array([[0.5]]),
        )
    )
    with pytest.raises(FlatPriorRequired):
        oracles.hat_decomposition(m)


def test_case_deleted_fit_matches_refit(rng):
    m = synth.random_model(rng, max_n=60)
    c = detect_clusters(m)
    scale = compute_scale(m)
    y = rng.standard_normal(m.n_obs)
    for j in range(c.n_clusters):
        members = c.members[j]
        if len(members) == m.n_obs:
            continue
        try:
            _, fitted = oracles.case_deleted_fit(m, scale, y, j, c)
            _, refit = oracles.refit_without_rows(m, y, members)
        except SingularAfterDeletion:
            continue
        keep = np.setdiff1d(np.arange(m.n_obs), members)
        np.testing.assert_allclose(fitted[keep], refit[keep], atol=1e-9)


def test_deleted_coefficients_match_refit(rng):
    m = synth.random_model(rng, max_n=60)
    c = detect_clusters(m)
    y = rng.standard_normal(m.n_obs)
    # cluster deletion: rows must share a design row and noise variance
    rows = c.members[0]
    beta_sm = oracles.deleted_coefficients(m, compute_scale(m), y, rows)
    beta_refit, _ = oracles.refit_without_rows(m, y, rows)
    np.testing.assert_allclose(beta_sm, beta_refit, atol=1e-9)


def test_deleted_coefficients_reject_mixed_rows(rng):
    from borrowfac import DimensionError

    m = synth.random_model(rng, max_n=60)
    c = detect_clusters(m)
    y = rng.standard_normal(m.n_obs)
    i, j = int(c.reps[0]), int(c.reps[1])
    with pytest.raises(DimensionError):
        oracles.deleted_coefficients(m, compute_scale(m), y, [i, j])


def test_refit_rejects_deleting_everything(rng):
    p = OneWayProblem(sizes=(1, 1), phi2=(1.0, 1.0), sigma2=1.0)
    m = synth.oneway_model(p)
    y = np.array([1.0, 2.0])
    with pytest.raises(SingularAfterDeletion):
        oracles.refit_without_rows(m, y, [0, 1])


def test_flat_prior_reproduces_fixed_effects(rng):
    # WX1 = X1 under a flat fixed prior: the derived identity behind
    # the balanced antisymmetry and conditional sum criteria
    m = synth.random_model(rng, max_n=100)
    w = oracles.dense_weights(m)
    np.testing.assert_allclose(w @ m.x1, m.x1, atol=1e-9)
