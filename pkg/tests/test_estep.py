import numpy as np
import pytest

from fads import DomainError, PNParams, estep_r, estep_z, sample_pn
from fads.estep import stilde_diag

from .conftest import moment_ratio_oracle, random_params


def test_identity_sigma_gives_unit_v_and_projection_m(rng):
    p = 6
    mu = rng.standard_normal(p)
    mu /= np.linalg.norm(mu)
    params = PNParams(mu, np.zeros((p, 0)), np.ones(p))
    data = sample_pn(params, 40, seed=0)
    cache = estep_r(data, params)
    assert np.allclose(cache.v, 1.0, atol=1e-12)
    assert np.allclose(cache.m, data.rows @ mu, atol=1e-12)


def test_m_v_match_dense_inverse(rng):
    params = random_params(rng, 4, 1)
    data = sample_pn(params, 10, seed=1)
    cache = estep_r(data, params)
    sig_inv = np.linalg.inv(params.sigma())
    for i, x in enumerate(data.rows):
        quad = x @ sig_inv @ x
        assert cache.v[i] == pytest.approx(1.0 / quad, rel=1e-12)
        assert cache.m[i] == pytest.approx((x @ sig_inv @ params.mu) / quad, rel=1e-12)


def test_er_matches_quadrature_oracle(rng):
    params = random_params(rng, 4, 1)
    data = sample_pn(params, 10, seed=1)
    cache = estep_r(data, params)
    for i in range(data.n):
        er, er2 = moment_ratio_oracle(cache.m[i], cache.v[i], data.p)
        assert cache.er[i] == pytest.approx(er, rel=1e-8)
        assert cache.er2[i] == pytest.approx(er2, rel=1e-8)


def test_loglik_permutation_invariant(rng):
    from fads import SphericalDataset

    params = random_params(rng, 5, 2)
    data = sample_pn(params, 30, seed=2)
    ll = estep_r(data, params).loglik
    perm = rng.permutation(30)
    ll2 = estep_r(SphericalDataset(data.rows[perm], provenance="simulated"),
                  params).loglik
    assert ll2 == pytest.approx(ll, abs=1e-10)


def dense_z_moments(X, params, er, er2):
    """Direct dense evaluation of the latent-factor conditional moments."""
    p, q = params.p, params.q
    sig_inv = np.linalg.inv(params.sigma())
    lam, mu = params.lam, params.mu
    cap_inv = np.linalg.inv(np.eye(q) + lam.T @ (lam / params.psi[:, None]))
    n = X.shape[0]
    ez = np.zeros((n, q))
    ezz = np.zeros((q, q))
    erz_x = np.zeros((p, q))
    for i in range(n):
        x = X[i]
        ez[i] = lam.T @ sig_inv @ (er[i] * x - mu)
        e_outer = (er2[i] * np.outer(x, x) - er[i] * (np.outer(mu, x) + np.outer(x, mu))
                   + np.outer(mu, mu))
        ezz += cap_inv + lam.T @ sig_inv @ e_outer @ sig_inv @ lam
        erz_row = (er2[i] * x - er[i] * mu) @ sig_inv @ lam
        erz_x += np.outer(x, erz_row)
    return ez, ezz, erz_x


def test_z_moments_match_dense_oracle(rng):
    params = random_params(rng, 5, 2)
    data = sample_pn(params, 15, seed=3)
    cache = estep_r(data, params)
    zm = estep_z(data, params, cache)
    ez, ezz, erz_x = dense_z_moments(data.rows, params, cache.er, cache.er2)
    assert np.allclose(zm.ez, ez, rtol=1e-12, atol=1e-12)
    assert np.allclose(zm.ezz_sum, ezz, rtol=1e-12, atol=1e-10)
    assert np.allclose(zm.erz_sum_xside, erz_x, rtol=1e-12, atol=1e-10)
    # positive semidefinite by construction
    assert np.linalg.eigvalsh(zm.ezz_sum).min() > 0


def test_zero_loadings_prior_moments(rng):
    p, q, n = 5, 2, 12
    mu = rng.standard_normal(p)
    mu /= np.linalg.norm(mu)
    params = PNParams(mu, np.zeros((p, q)), rng.uniform(0.4, 1.0, p))
    data = sample_pn(params, n, seed=4)
    cache = estep_r(data, params)
    zm = estep_z(data, params, cache)
    assert np.allclose(zm.ez, 0.0, atol=1e-14)
    assert np.allclose(zm.ezz_sum, n * np.eye(q), atol=1e-12)


def test_tower_property_column_sums(rng):
    params = random_params(rng, 6, 2)
    data = sample_pn(params, 25, seed=5)
    cache = estep_r(data, params)
    zm = estep_z(data, params, cache)
    sig_inv = np.linalg.inv(params.sigma())
    expected = params.lam.T @ sig_inv @ (data.rows.T @ cache.er - data.n * params.mu)
    assert np.allclose(zm.ez.sum(axis=0), expected, rtol=1e-10, atol=1e-10)


def test_q0_rejected(rng):
    params = random_params(rng, 4, 0)
    data = sample_pn(params, 8, seed=6)
    cache = estep_r(data, params)
    with pytest.raises(DomainError):
        estep_z(data, params, cache)


def test_stilde_diag_matches_dense(rng):
    params = random_params(rng, 5, 1)
    data = sample_pn(params, 20, seed=7)
    cache = estep_r(data, params)
    X = data.rows
    dense = np.zeros((5, 5))
    for i in range(20):
        dense += cache.er2[i] * np.outer(X[i], X[i])
        dense -= cache.er[i] * (np.outer(X[i], params.mu) + np.outer(params.mu, X[i]))
        dense += np.outer(params.mu, params.mu)
    dense /= 20
    assert np.allclose(stilde_diag(X, params.mu, cache.er, cache.er2),
                       np.diag(dense), rtol=1e-12)
