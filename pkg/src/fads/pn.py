"""Projected-normal density, moment integrals, and sampling.

The density of X = Y/||Y|| with Y ~ N_p(mu, Sigma) is, up to the angular
measure,

    f(x) = (2 pi)^{-p/2} |Sigma|^{-1/2}
           exp{ -mu' Sigma^{-1} mu / 2 + m^2 / (2v) } I_{p-1}(m, v)

with m = x'Sigma^{-1}mu / x'Sigma^{-1}x, v = 1 / x'Sigma^{-1}x and
I_k(m, v) the truncated-normal moment integral handled by the kernel
backend.  The factor structure Sigma = Lambda Lambda' + Psi is exploited
throughout: inverses go through the Woodbury identity and the log
determinant through the matrix determinant lemma, so nothing here costs
more than O(n p q) for a batch of n points.
"""

from dataclasses import dataclass, field

import numpy as np

from .backend import moment_batch
from .data import PROVENANCE_SIMULATED, SphericalDataset
from .exceptions import DomainError

MU_NORM_TOL = 1e-12
X_NORM_TOL = 1e-8


@dataclass
class MomentTriple:
    """Conditional length moments and the log-scale normalizer."""

    er: float
    er2: float
    log_i_pm1: float


@dataclass
class PNParams:
    """Parameter triple (mu, Lambda, Psi) of the PN factor model.

    mu is a unit p-vector, lam is p x q (may have zero columns), psi the
    positive diagonal of Psi.  q = 0 means no factors and Sigma = Psi.
    """

    mu: np.ndarray
    lam: np.ndarray
    psi: np.ndarray

    def __post_init__(self):
        self.mu = np.ascontiguousarray(np.asarray(self.mu, dtype=np.float64).ravel())
        self.psi = np.ascontiguousarray(np.asarray(self.psi, dtype=np.float64).ravel())
        lam = np.asarray(self.lam, dtype=np.float64)
        if lam.ndim == 1:
            lam = lam[:, None]
        if lam.size == 0:
            lam = lam.reshape(self.p, 0)
        self.lam = np.ascontiguousarray(lam)
        self.validate()

    def validate(self):
        p = self.mu.shape[0]
        if self.lam.shape[0] != p or self.psi.shape[0] != p:
            raise DomainError("mu, lam, psi dimensions disagree")
        if not np.all(np.isfinite(self.mu)) or not np.all(np.isfinite(self.lam)):
            raise DomainError("parameters must be finite")
        if abs(np.linalg.norm(self.mu) - 1.0) > MU_NORM_TOL:
            raise DomainError(
                f"mu must be a unit vector (|norm - 1| = {abs(np.linalg.norm(self.mu) - 1.0):.3g})"
            )
        if not np.all(self.psi > 0.0) or not np.all(np.isfinite(self.psi)):
            raise DomainError("psi entries must be positive and finite")

    @property
    def p(self):
        return self.mu.shape[0]

    @property
    def q(self):
        return self.lam.shape[1]

    def sigma(self):
        """Dense Sigma = Lambda Lambda' + Psi (small-p convenience)."""
        return self.lam @ self.lam.T + np.diag(self.psi)

    def copy(self):
        return PNParams(self.mu.copy(), self.lam.copy(), self.psi.copy())


@dataclass
class SigmaFactors:
    """Woodbury pieces of Sigma^{-1} reused across a batch of points."""

    psi: np.ndarray
    lam: np.ndarray
    b: np.ndarray = field(repr=False)  # Psi^{-1} Lambda
    cap_chol: np.ndarray = field(repr=False)  # Cholesky of I + Lambda' Psi^{-1} Lambda
    logdet: float = 0.0

    def solve(self, rhs):
        y = rhs / (self.psi[:, None] if rhs.ndim == 2 else self.psi)
        if self.lam.shape[1] == 0:
            return y
        w = _chol_solve(self.cap_chol, self.lam.T @ y)
        return y - self.b @ w

    def inv_diag(self):
        d = 1.0 / self.psi
        if self.lam.shape[1]:
            half = np.linalg.solve(self.cap_chol, self.b.T)
            d = d - np.einsum("ji,ji->i", half, half)
        return d


def _chol_solve(L, rhs):
    y = np.linalg.solve(L, rhs)
    return np.linalg.solve(L.T, y)


def sigma_factors(lam, psi):
    psi = np.asarray(psi, dtype=np.float64)
    lam = np.asarray(lam, dtype=np.float64)
    if np.any(psi <= 0):
        raise DomainError("psi must be positive")
    q = lam.shape[1] if lam.ndim == 2 else 0
    if q == 0:
        lam = lam.reshape(psi.shape[0], 0)
        b = lam
        cap_chol = np.zeros((0, 0))
        logdet = float(np.sum(np.log(psi)))
    else:
        b = lam / psi[:, None]
        cap = np.eye(q) + lam.T @ b
        cap_chol = np.linalg.cholesky(cap)
        logdet = float(2.0 * np.sum(np.log(np.diag(cap_chol))) + np.sum(np.log(psi)))
    return SigmaFactors(psi=psi, lam=lam, b=b, cap_chol=cap_chol, logdet=logdet)


def mv_coefficients(X, mu, fac):
    """Per-row m_i, v_i of the PN density for rows of X.

    m_i = x_i' Sigma^{-1} mu / x_i' Sigma^{-1} x_i, v_i = 1 / x_i' Sigma^{-1} x_i.
    """
    simu = fac.solve(mu)
    xsx = X * X / fac.psi[None, :]
    quad = xsx.sum(axis=1)
    if fac.lam.shape[1]:
        U = np.linalg.solve(fac.cap_chol, (X @ fac.b).T).T
        quad = quad - np.einsum("ij,ij->i", U, U)
    v = 1.0 / quad
    m = (X @ simu) * v
    return m, v, float(mu @ simu)


def moment_triple(m, v, p):
    """The triple (I_p/I_{p-1}, I_{p+1}/I_{p-1}, log I_{p-1}) at (m, v).

    Raises DomainError for nonpositive v or nonfinite m; never returns NaN.
    """
    if not np.isfinite(m):
        raise DomainError("m must be finite")
    if not v > 0:
        raise DomainError(f"v must be positive, got {v}")
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    er, er2, logi = moment_batch(np.array([m]), np.array([v]), int(p))
    return MomentTriple(er=float(er[0]), er2=float(er2[0]), log_i_pm1=float(logi[0]))


def pn_logpdf_rows(X, params, fac=None):
    """Log density of each row of X under the PN law; vectorized."""
    if fac is None:
        fac = sigma_factors(params.lam, params.psi)
    p = params.p
    m, v, mu_quad = mv_coefficients(X, params.mu, fac)
    er, er2, logi = moment_batch(m, v, p)
    const = -0.5 * p * np.log(2.0 * np.pi) - 0.5 * fac.logdet - 0.5 * mu_quad
    return const + 0.5 * m * m / v + logi


def pn_logpdf(x, params):
    """Log of the PN density at a single unit vector x."""
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != params.p:
        raise DomainError("x dimension does not match parameters")
    if abs(np.linalg.norm(x) - 1.0) > X_NORM_TOL:
        raise DomainError(f"x must be a unit vector, got norm {np.linalg.norm(x):.12g}")
    return float(pn_logpdf_rows(x[None, :], params)[0])


def sample_pn(params, n, seed):
    """n draws from the PN law: normalized mu + Lambda z + Psi^{1/2} eps.

    Uses a counter-based (Philox) generator keyed on the seed, so output is
    reproducible bit-for-bit given (params, n, seed).
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    p, q = params.p, params.q
    draws = rng.standard_normal((n, q + p))
    y = params.mu + draws[:, q:] * np.sqrt(params.psi)
    if q:
        y += draws[:, :q] @ params.lam.T
    norms = np.linalg.norm(y, axis=1)
    if np.any(norms == 0.0):
        raise DomainError("degenerate zero-length draw")
    return SphericalDataset(y / norms[:, None], provenance=PROVENANCE_SIMULATED)
