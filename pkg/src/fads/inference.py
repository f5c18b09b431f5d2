"""Factor scores, observed-information standard errors, and the
correlation-scale reparameterization with its accuracy metrics.

Scores are the conditional expectation of the Bartlett estimator,
``(L' Psi^{-1} L)^{-1} L' Psi^{-1} (E[R_i|X_i] X_i - mu)``.  Standard
errors come from the outer-product observed information built from the
conditional expectation of the complete-data score (the observed-data
score, by Fisher's identity); the information has exact null directions
(the scale orbit of (mu, Sigma) and, for q >= 2, the rotation orbit of
Lambda), so it is inverted by eigendecomposition with a pseudo-inverse
cutoff.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .pn import PNParams, sigma_factors


@dataclass
class FactorScores:
    scores: np.ndarray  # n x q, latent-scale


@dataclass
class CorrelationScaleParams:
    sigma: np.ndarray  # marginal SDs of Sigma
    lambda_r: np.ndarray
    psi_r: np.ndarray


@dataclass
class StdErrors:
    se_mu: np.ndarray
    se_lambda: np.ndarray
    se_psi: np.ndarray
    info_condition: float


@dataclass
class FrobeniusMetrics:
    """Relative Frobenius distances between an estimate and a reference."""

    d_r: float  # correlation matrix R
    d_gamma: float  # signal matrix Lambda' Psi^{-1} Lambda (normal forms)
    d_upsilon: float  # common-variance part Lambda_R Lambda_R'
    d_psi: float  # correlation-scale uniquenesses
    d_mu: float
    d_sigma: float


def factor_scores(data, params, cache):
    """Bartlett-style factor scores at the fitted parameters."""
    if params.q == 0:
        raise DomainError("factor scores require q >= 1")
    lam, psi = params.lam, params.psi
    gam = lam.T @ (lam / psi[:, None])
    w, _ = np.linalg.eigh(gam)
    if w.min() <= 1e-12 * max(w.max(), 1.0):
        raise DomainError(
            f"signal matrix is singular (factor {int(np.argmin(w))} is dead); "
            "scores are not identified"
        )
    resid = cache.er[:, None] * data.rows - params.mu[None, :]
    rhs = resid @ (lam / psi[:, None])
    return FactorScores(scores=np.linalg.solve(gam, rhs.T).T)


def score_rows(data, params, cache):
    """Per-observation conditional expected complete-data scores.

    Row i stacks the mu block (p), the Lambda block (p*q, row-major) and
    the Psi block (p); by Fisher's identity each row equals the gradient
    of the observed log-density of X_i with respect to the parameters.
    """
    X = data.rows
    n, p = X.shape
    q = params.q
    fac = sigma_factors(params.lam, params.psi)
    mu = params.mu
    A = fac.solve(X.T).T  # rows: Sigma^{-1} x_i
    u = fac.solve(mu)
    G = fac.solve(params.lam) if q else np.zeros((p, 0))
    er, er2 = cache.er, cache.er2

    out = np.empty((n, p * (q + 2)))
    out[:, :p] = er[:, None] * A - u[None, :]
    if q:
        XG = X @ G
        muG = mu @ G
        # Sigma^{-1} E_i Sigma^{-1} Lambda - Sigma^{-1} Lambda, with
        # E_i = er2 x x' - er (x mu' + mu x') + mu mu'
        blk = (
            er2[:, None, None] * A[:, :, None] * XG[:, None, :]
            - er[:, None, None] * (A[:, :, None] * muG[None, None, :]
                                   + u[None, :, None] * XG[:, None, :])
            + (u[:, None] * muG[None, :])[None, :, :]
            - G[None, :, :]
        )
        out[:, p : p + p * q] = blk.reshape(n, p * q)
    sig_inv_diag = fac.inv_diag()
    quad = er2[:, None] * A * A - 2.0 * er[:, None] * A * u[None, :] + (u * u)[None, :]
    out[:, p + p * q :] = -0.5 * (sig_inv_diag[None, :] - quad)
    return out


def standard_errors(data, params, cache):
    """Outer-product information standard errors; needs n >= (q+2) p."""
    n, p, q = data.n, data.p, params.q
    if n < (q + 2) * p:
        raise DomainError(
            f"standard errors need n >= (q+2)p = {(q + 2) * p}, got n = {n}"
        )
    sc = score_rows(data, params, cache)
    info = sc.T @ sc  # = n * I_X(theta)
    w, V = np.linalg.eigh(info)
    tr = float(np.sum(w))
    if w.min() < -1e-8 * max(tr, 1.0):
        raise DomainError("information matrix is not positive semidefinite")
    cutoff = 1e-10 * w.max()
    inv_w = np.where(w > cutoff, 1.0 / np.maximum(w, cutoff), 0.0)
    var = np.einsum("ij,j,ij->i", V, inv_w, V)
    se = np.sqrt(np.maximum(var, 0.0))
    cond = float(w.max() / max(w[w > cutoff].min(), np.finfo(float).tiny))
    return StdErrors(
        se_mu=se[:p],
        se_lambda=se[p : p + p * q].reshape(p, q),
        se_psi=se[p + p * q :],
        info_condition=cond,
    )


def to_correlation_scale(params):
    """Divide by the marginal SDs so the implied matrix has unit diagonal."""
    sigma = np.sqrt(np.sum(params.lam * params.lam, axis=1) + params.psi)
    return CorrelationScaleParams(
        sigma=sigma,
        lambda_r=params.lam / sigma[:, None],
        psi_r=params.psi / (sigma * sigma),
    )


def _gamma_normal_diag(params):
    g = params.lam.T @ (params.lam / params.psi[:, None])
    w = np.linalg.eigvalsh(0.5 * (g + g.T))
    return np.diag(np.sort(w)[::-1])


def relative_frobenius_metrics(estimate, truth):
    """The six relative Frobenius distances on the correlation scale.

    The common-variance and correlation distances depend on Lambda only
    through Lambda Lambda' and are computed matrix-free through the
    low-rank structure; Gamma is compared after both parameterizations
    are reduced to the diagonal normal form.
    """
    if estimate.p != truth.p or estimate.q != truth.q:
        raise DomainError("estimate and truth shapes disagree")
    ce, ct = to_correlation_scale(estimate), to_correlation_scale(truth)

    def lowrank_frob2(a, b, da=None, db=None):
        # || (A A' + diag(da)) - (B B' + diag(db)) ||_F^2 without p x p work
        aa = a.T @ a
        bb = b.T @ b
        ab = a.T @ b
        total = np.sum(aa * aa) + np.sum(bb * bb) - 2.0 * np.sum(ab * ab)
        d = (da if da is not None else 0.0) - (db if db is not None else 0.0)
        if np.ndim(d):
            total += float(d @ d)
            total += 2.0 * float(d @ (np.sum(a * a, 1) - np.sum(b * b, 1)))
        return total

    ups_num = lowrank_frob2(ce.lambda_r, ct.lambda_r)
    ups_den = float(np.sum((ct.lambda_r.T @ ct.lambda_r) ** 2))
    r_num = lowrank_frob2(ce.lambda_r, ct.lambda_r, ce.psi_r, ct.psi_r)
    # ||R||_F^2 = ||Upsilon||_F^2 + 2 psi' diag(Upsilon) + ||psi||^2 (unit diags)
    r_den = ups_den + 2.0 * float(ct.psi_r @ np.sum(ct.lambda_r**2, 1)) + float(
        ct.psi_r @ ct.psi_r
    )
    ge, gt = _gamma_normal_diag(estimate), _gamma_normal_diag(truth)
    return FrobeniusMetrics(
        d_r=float(np.sqrt(max(r_num, 0.0) / r_den)),
        d_gamma=float(np.linalg.norm(ge - gt) / np.linalg.norm(gt)) if truth.q else 0.0,
        d_upsilon=float(np.sqrt(max(ups_num, 0.0) / ups_den)) if truth.q else 0.0,
        d_psi=float(np.linalg.norm(ce.psi_r - ct.psi_r) / np.linalg.norm(ct.psi_r)),
        d_mu=float(np.linalg.norm(estimate.mu - truth.mu)),
        d_sigma=float(np.linalg.norm(ce.sigma - ct.sigma) / np.linalg.norm(ct.sigma)),
    )
