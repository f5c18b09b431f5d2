"""Conditional-expectation computations shared by both AECM fitters.

``estep_r`` produces the per-observation projection scalars (m_i, v_i),
the conditional length moments E[R_i | X_i], E[R_i^2 | X_i], and the
observed-data log-likelihood (which needs the same quantities, so it is
accumulated in the same pass).  ``estep_z`` adds the latent-factor
moments used by the duet algorithm, assembled in O(npq) without any
p x p temporaries.
"""

from dataclasses import dataclass

import numpy as np

from .backend import moment_batch
from .exceptions import DomainError
from .pn import mv_coefficients, sigma_factors


@dataclass
class EStepCache:
    """Per-observation E-step quantities at one parameter point."""

    m: np.ndarray
    v: np.ndarray
    er: np.ndarray
    er2: np.ndarray
    loglik: float


@dataclass
class ZMoments:
    """Latent-factor conditional moments (duet algorithm).

    ez[i] = E[Z_i | X_i]; ezz_sum = sum_i E[Z_i Z_i' | X_i];
    erz_sum_xside = sum_i X_i E[R_i Z_i' | X_i].
    """

    ez: np.ndarray
    ezz_sum: np.ndarray
    erz_sum_xside: np.ndarray


def _loglik_terms(m, v, logi, p, logdet, mu_quad, n):
    const = -0.5 * p * np.log(2.0 * np.pi) - 0.5 * logdet - 0.5 * mu_quad
    return n * const + float(np.sum(0.5 * m * m / v + logi))


def estep_r_with_factors(data, mu, fac):
    """estep_r against a prefactored Sigma; lets sweeps refresh mu cheaply."""
    X = data.rows
    n, p = X.shape
    m, v, mu_quad = mv_coefficients(X, mu, fac)
    er, er2, logi = moment_batch(m, v, p)
    ll = _loglik_terms(m, v, logi, p, fac.logdet, mu_quad, n)
    return EStepCache(m=m, v=v, er=er, er2=er2, loglik=ll)


def estep_r(data, params):
    """E-step over the latent lengths R_i at the given parameters."""
    if data.p != params.p:
        raise DomainError("dataset and parameter dimensions disagree")
    fac = sigma_factors(params.lam, params.psi)
    return estep_r_with_factors(data, params.mu, fac)


def estep_z_with_factors(data, mu, lam, fac, er, er2):
    X = data.rows
    n = X.shape[0]
    q = lam.shape[1]
    G = fac.solve(lam)  # Sigma^{-1} Lambda, p x q
    XG = X @ G
    muG = mu @ G
    ez = er[:, None] * XG - muG[None, :]
    erz_rows = er2[:, None] * XG - np.outer(er, muG)  # row i = E[R_i Z_i' | X_i]
    erz_sum_xside = X.T @ erz_rows
    # sum_i E[Z_i Z_i'] = n (I + L'Psi^{-1}L)^{-1} + G' [sum_i E(.)] G
    mid = XG.T @ (er2[:, None] * XG)
    xe_g = XG.T @ er
    mid -= np.outer(muG, xe_g) + np.outer(xe_g, muG)
    mid += n * np.outer(muG, muG)
    eye = np.eye(q)
    cap_inv = np.linalg.solve(fac.cap_chol.T, np.linalg.solve(fac.cap_chol, eye))
    ezz = n * cap_inv + mid
    ezz = 0.5 * (ezz + ezz.T)
    return ZMoments(ez=ez, ezz_sum=ezz, erz_sum_xside=erz_sum_xside)


def estep_z(data, params, rc):
    """Latent-factor moments given the length moments in ``rc``."""
    if params.q == 0:
        raise DomainError("Z moments are undefined for q = 0")
    if rc.er.shape[0] != data.n:
        raise DomainError("cache length does not match dataset")
    fac = sigma_factors(params.lam, params.psi)
    return estep_z_with_factors(data, params.mu, params.lam, fac, rc.er, rc.er2)


def stilde_diag(X, mu, er, er2):
    """diag of S~ = n^{-1} sum_i E[(R_i X_i - mu)(R_i X_i - mu)' | X_i]."""
    n = X.shape[0]
    return (er2 @ (X * X)) / n - 2.0 * mu * (X.T @ er) / n + mu * mu
