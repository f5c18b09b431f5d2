import numpy as np
import pytest
from dataclasses import replace

from fads import (
    FitConfig,
    PNParams,
    cm_mu,
    estep_r,
    fads_d_fit,
    fads_p_fit,
    multistart,
    normal_form,
    squarem_accelerate,
)
from fads.fitters import _fit, profile_objective, random_init
from fads.simulate import simulate_dataset

from .conftest import random_params


# ----------------------------- cm_mu ---------------------------------------


def test_cm_mu_unit_b_is_identity(rng):
    b = rng.standard_normal(7)
    b /= np.linalg.norm(b)
    out = cm_mu(b, rng.uniform(0.2, 2.0, 7))
    assert np.allclose(out, b, atol=1e-12)


def test_cm_mu_isotropic_normalizes():
    b = np.zeros(5)
    b[0] = 2.0
    out = cm_mu(b, np.ones(5))
    assert np.allclose(out, np.eye(5)[0], atol=1e-12)


@pytest.mark.parametrize("norm_b", [0.35, 2.7])
def test_cm_mu_beats_random_probes(rng, norm_b):
    # global-optimality probe on the quadratic objective Tr B^-1 (b-x)(b-x)'
    p = 20
    lam = rng.standard_normal((p, 2))
    psi = rng.uniform(0.3, 1.5, p)
    B = lam @ lam.T + np.diag(psi)
    b = rng.standard_normal(p)
    b *= norm_b / np.linalg.norm(b)
    x = cm_mu(b, psi, lam)
    assert abs(np.linalg.norm(x) - 1.0) < 1e-12
    Binv = np.linalg.inv(B)

    def objective(u):
        d = b - u
        return d @ Binv @ d

    best = objective(x)
    probes = rng.standard_normal((10_000, p))
    probes /= np.linalg.norm(probes, axis=1)[:, None]
    vals = np.einsum("ij,jk,ik->i", b - probes, Binv, b - probes)
    assert best <= vals.min() + 1e-10


def test_cm_mu_diagonal_bracket_negative_side(rng):
    psi = rng.uniform(0.2, 2.0, 6)
    b = rng.standard_normal(6)
    b *= 0.4 / np.linalg.norm(b)
    x = cm_mu(b, psi)
    B = np.diag(psi)
    lam_check = (np.linalg.inv(B) @ (b - x)) / x  # stationarity: (I+lB)x=b
    assert np.allclose(lam_check, lam_check[0], atol=1e-6)
    assert lam_check[0] < 0


# ----------------------------- full fits ------------------------------------


@pytest.fixture(scope="module")
def small_fit():
    data, truth = simulate_dataset(300, 10, 1, seed=12)
    cfg = FitConfig(q=1, seed=0)
    init = random_init(10, 1, np.random.default_rng(3))
    rp = fads_p_fit(data, cfg, init)
    rd = fads_d_fit(data, cfg, init)
    return data, cfg, rp, rd


def test_traces_monotone(small_fit):
    _, _, rp, rd = small_fit
    assert np.diff(rp.loglik_trace).min() >= -1e-10
    assert np.diff(rd.loglik_trace).min() >= -1e-10
    assert rp.converged and rd.converged


def test_algorithms_agree(small_fit):
    _, _, rp, rd = small_fit
    assert abs(rp.loglik - rd.loglik) < 1e-6
    sp = rp.params.sigma()
    sd = rd.params.sigma()
    assert np.linalg.norm(sd - sp) / np.linalg.norm(sp) < 1e-3


def test_gamma_normal_form(small_fit):
    _, _, rp, rd = small_fit
    for rep in (rp, rd):
        g = rep.gamma_matrix
        off = g - np.diag(np.diag(g))
        assert np.max(np.abs(off)) < 1e-6
        d = np.diag(g)
        assert np.all(np.diff(d) <= 1e-9)
        # column sign canonicalization: dominant entries positive
        for j in range(rep.params.q):
            col = rep.params.lam[:, j]
            assert col[np.argmax(np.abs(col))] > 0


def test_refit_from_optimum_stops_fast(small_fit):
    data, cfg, rp, _ = small_fit
    again = fads_p_fit(data, cfg, rp.params)
    assert again.iterations <= 2
    assert abs(again.loglik - rp.loglik) <= cfg.tol_loglik


def test_q0_profile_closed_form():
    data, _ = simulate_dataset(200, 6, 0, seed=5)
    cfg = FitConfig(q=0, seed=0)
    rep = fads_p_fit(data, cfg, random_init(6, 0, np.random.default_rng(0)))
    assert rep.converged
    cache = estep_r(data, rep.params)
    from fads.estep import stilde_diag

    diag_s = stilde_diag(data.rows, rep.params.mu, cache.er, cache.er2)
    assert np.allclose(rep.params.psi, diag_s, rtol=1e-8)


def test_fads_d_requires_q_ge_1():
    data, _ = simulate_dataset(50, 5, 0, seed=1)
    from fads import DomainError

    with pytest.raises(DomainError):
        fads_d_fit(data, FitConfig(q=0), random_init(5, 0, np.random.default_rng(0)))


def test_duet_no_refresh_variant_still_ascends():
    data, _ = simulate_dataset(150, 8, 1, seed=9)
    cfg = FitConfig(q=1, seed=0, refresh_between_cm=False, max_iter=300)
    rep = fads_d_fit(data, cfg, random_init(8, 1, np.random.default_rng(2)))
    assert np.diff(rep.loglik_trace).min() >= -1e-8


# ----------------------------- gradient check -------------------------------


def test_profile_gradient_matches_finite_differences(rng):
    data, _ = simulate_dataset(100, 12, 2, seed=21)
    params = random_params(rng, 12, 2)
    cache = estep_r(data, params)
    for trial in range(5):
        psi = rng.uniform(0.3, 1.5, 12)
        val, grad, _ = profile_objective(data, params.mu, cache.er, cache.er2, psi, 2)
        fd = np.zeros(12)
        h = 1e-6
        for j in range(12):
            e = np.zeros(12)
            e[j] = h
            vp, _, _ = profile_objective(data, params.mu, cache.er, cache.er2, psi + e, 2)
            vm, _, _ = profile_objective(data, params.mu, cache.er, cache.er2, psi - e, 2)
            fd[j] = (vp - vm) / (2 * h)
        assert np.allclose(grad, fd, rtol=1e-5, atol=1e-4 * np.abs(fd).max())


# ----------------------------- SQUAREM --------------------------------------


def _sweep_map(data, cfg):
    from fads.fitters import _sweep_p

    def step(params):
        return _sweep_p(data, params, cfg, None)[0]

    return step


def test_squarem_fixed_point_returns_unchanged():
    data, _ = simulate_dataset(200, 6, 1, seed=31)
    cfg = FitConfig(q=1, seed=0)
    rep = fads_p_fit(data, cfg, random_init(6, 1, np.random.default_rng(1)))
    step = _sweep_map(data, cfg)

    def ll(params):
        return estep_r(data, params).loglik

    out = squarem_accelerate(step, rep.params, ll)
    assert np.allclose(out.mu, rep.params.mu, atol=1e-6)
    assert np.allclose(out.psi, rep.params.psi, atol=1e-6)


def test_squarem_alpha_minus_one_is_double_sweep():
    # alpha = -1: theta - 2 a r + a^2 v = theta + 2r + v = F(F(theta)) identically
    rng = np.random.default_rng(0)
    t0 = rng.standard_normal(7)
    t1 = rng.standard_normal(7)
    t2 = rng.standard_normal(7)
    r = t1 - t0
    v = t2 - 2 * t1 + t0
    assert np.allclose(t0 - 2 * (-1.0) * r + v, t2, atol=1e-14)


def test_squarem_speeds_convergence():
    data, _ = simulate_dataset(300, 30, 3, seed=77)
    init = random_init(30, 3, np.random.default_rng(4))
    fast = fads_p_fit(data, FitConfig(q=3, seed=0, squarem=True), init)
    slow = fads_p_fit(data, FitConfig(q=3, seed=0, squarem=False, max_iter=4000), init)
    assert fast.iterations <= slow.iterations
    assert fast.loglik >= slow.loglik - 1e-4


# ----------------------------- multistart -----------------------------------


def test_multistart_deterministic():
    data, _ = simulate_dataset(120, 8, 1, seed=41)
    cfg = FitConfig(q=1, seed=9, starts=(6, 4, 2))
    a = multistart(data, cfg, "fads-p")
    b = multistart(data, cfg, "fads-p")
    assert a.loglik == b.loglik
    assert np.array_equal(a.params.mu, b.params.mu)
    assert np.array_equal(a.params.psi, b.params.psi)


def test_multistart_m_equals_l_runs_all():
    data, _ = simulate_dataset(100, 6, 1, seed=42)
    cfg = FitConfig(q=1, seed=2, starts=(3, 4, 3))
    rep = multistart(data, cfg, "fads-p")
    # every stream ran long, so the winner is at least as good as each
    # individually converged run
    seeds = np.random.SeedSequence(2).spawn(3)
    for s in seeds:
        single = _fit(data, cfg, random_init(6, 1, np.random.default_rng(s)), "fads-p")
        assert rep.loglik >= single.loglik - 1e-6


def test_multistart_beats_fixed_start():
    data, _ = simulate_dataset(200, 10, 2, seed=43)
    cfg = FitConfig(q=2, seed=5, starts=(8, 6, 3))
    best = multistart(data, cfg, "fads-p")
    fixed = fads_p_fit(data, cfg, random_init(10, 2, np.random.default_rng(1234)))
    assert best.loglik >= fixed.loglik - 1e-6


def test_normal_form_preserves_sigma(rng):
    params = random_params(rng, 9, 3)
    nf, gamma = normal_form(params)
    assert np.allclose(nf.sigma(), params.sigma(), rtol=1e-12)
    off = gamma - np.diag(np.diag(gamma))
    assert np.max(np.abs(off)) < 1e-10
