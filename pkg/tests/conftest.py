import numpy as np
import pytest
from scipy.special import logsumexp


def log_moment_oracle(m, v, k, n_grid=2_000_000):
    """Brute-force log of int_0^inf R^k exp(-(R-m)^2/(2v)) dR.

    Log-domain trapezoid on a range wide enough to cover the mode and the
    Gaussian tails; independent of the production recurrence/quadrature.
    """
    rho = 0.5 * (m + np.sqrt(m * m + 4.0 * v * max(k, 1)))
    width = 1.0 / np.sqrt(max(k, 1) / max(rho, 1e-300) ** 2 + 1.0 / v)
    hi = rho + max(14.0 * width, 14.0 * np.sqrt(v)) + 1.0
    r = np.linspace(0.0, hi, n_grid + 1)
    with np.errstate(divide="ignore"):
        lg = k * np.log(r) - (r - m) ** 2 / (2.0 * v)
    if k == 0:
        lg[0] = -m * m / (2.0 * v)
    h = hi / n_grid
    weights = np.full(n_grid + 1, h)
    weights[0] = weights[-1] = 0.5 * h
    return float(logsumexp(lg, b=weights))


def moment_ratio_oracle(m, v, p):
    """(E[R|X], E[R^2|X]) by the brute-force oracle at order p."""
    lkm1 = log_moment_oracle(m, v, p - 1)
    lk = log_moment_oracle(m, v, p)
    lkp1 = log_moment_oracle(m, v, p + 1)
    return np.exp(lk - lkm1), np.exp(lkp1 - lkm1)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_params(rng, p, q, scale=1.0):
    from fads import PNParams

    mu = rng.standard_normal(p)
    mu /= np.linalg.norm(mu)
    lam = scale * rng.standard_normal((p, q)) if q else np.zeros((p, 0))
    psi = rng.uniform(0.3, 1.2, p)
    return PNParams(mu, lam, psi)
