"""Matrix-free symmetric partial eigensolver and low-rank-plus-diagonal solves.

``lanczos_topq`` implements the implicitly restarted Lanczos iteration for
the q largest eigenpairs of a symmetric operator given only matrix-vector
products.  ``w_action`` wraps the latent-scale scatter operator
``Psi^{-1/2} S~ Psi^{-1/2}`` without ever forming a p x p matrix, and
``woodbury_solve`` applies ``(Lambda Lambda' + Psi)^{-1}`` through the
q x q capacitance system.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh_tridiagonal

from .exceptions import ConvergenceError, DomainError

_BREAKDOWN = 1e-14


@dataclass
class SymmetricAction:
    """A symmetric linear operator given by its matrix-vector product."""

    dim: int
    apply: callable


@dataclass
class PartialEigen:
    """Top Ritz pairs: values decreasing, vectors orthonormal columns."""

    values: np.ndarray
    vectors: np.ndarray
    residual: float
    restarts: int


def _canonical_sign(vectors):
    # first component exceeding a relative threshold is made positive
    for j in range(vectors.shape[1]):
        col = vectors[:, j]
        nz = np.where(np.abs(col) > 1e-12 * max(np.abs(col).max(), 1e-300))[0]
        if nz.size and col[nz[0]] < 0:
            vectors[:, j] = -col
    return vectors


def lanczos_topq(action, q, delta=None, seed=0, max_restarts=300):
    """Top-q eigenpairs of a symmetric action by implicitly restarted Lanczos.

    Parameters
    ----------
    action : SymmetricAction
    q : int, number of wanted eigenpairs, 1 <= q < dim.
    delta : float or None
        Residual tolerance; pair j is converged when its Ritz residual
        ``beta_m |g_{j,m}|`` is at most ``delta * max(1, |e_j|)``.  Defaults
        to ``1e-10 * max(1, |e_1|)`` estimated from the current factorization.
    seed : int, seed for the random start vector.
    max_restarts : int, implicit-restart budget.

    Returns
    -------
    PartialEigen
    """
    p = action.dim
    if not 1 <= q < p:
        raise DomainError(f"need 1 <= q < dim, got q={q}, dim={p}")
    m = min(max(2 * q + 1, 20), p)
    rng = np.random.default_rng(seed)

    F = np.zeros((p, m + 1))
    alpha = np.zeros(m)
    beta = np.zeros(m)
    f0 = rng.standard_normal(p)
    F[:, 0] = f0 / np.linalg.norm(f0)
    k0 = 0
    restarts = 0
    best_resid = np.inf

    while True:
        for k in range(k0, m):
            u = np.asarray(action.apply(F[:, k]), dtype=np.float64)
            alpha[k] = F[:, k] @ u
            r = u - alpha[k] * F[:, k]
            if k > 0:
                r -= beta[k - 1] * F[:, k - 1]
            # full reorthogonalization, two passes
            basis = F[:, : k + 1]
            r -= basis @ (basis.T @ r)
            r -= basis @ (basis.T @ r)
            b = np.linalg.norm(r)
            scale = max(1.0, np.abs(alpha[: k + 1]).max())
            if b <= _BREAKDOWN * scale:
                # invariant subspace found: continue in a fresh direction
                beta[k] = 0.0
                r = rng.standard_normal(p)
                r -= basis @ (basis.T @ r)
                r -= basis @ (basis.T @ r)
                F[:, k + 1] = r / np.linalg.norm(r)
            else:
                beta[k] = b
                F[:, k + 1] = r / b

        evals, G = eigh_tridiagonal(alpha, beta[: m - 1])
        order = np.argsort(evals)[::-1]
        evals = evals[order]
        G = G[:, order]
        beta_m = beta[m - 1]
        resid = beta_m * np.abs(G[m - 1, :])
        tol = delta if delta is not None else 1e-10 * max(1.0, np.abs(evals[0]))
        top_resid = float(np.max(resid[:q]))
        best_resid = min(best_resid, top_resid)
        if np.all(resid[:q] <= tol * np.maximum(1.0, np.abs(evals[:q]))):
            V = _canonical_sign(F[:, :m] @ G[:, :q])
            return PartialEigen(
                values=evals[:q].copy(), vectors=V, residual=top_resid, restarts=restarts
            )
        if restarts >= max_restarts:
            raise ConvergenceError(
                f"Lanczos did not converge after {max_restarts} restarts",
                residual=best_resid,
            )

        # implicit QR restart with the unwanted Ritz values as shifts
        T = np.diag(alpha) + np.diag(beta[: m - 1], 1) + np.diag(beta[: m - 1], -1)
        Qacc = np.eye(m)
        for s in evals[q:]:
            Q, _ = np.linalg.qr(T - s * np.eye(m))
            T = Q.T @ T @ Q
            Qacc = Qacc @ Q
        Fnew = F[:, :m] @ Qacc
        r_new = Fnew[:, q] * T[q, q - 1] + F[:, m] * (beta_m * Qacc[m - 1, q - 1])
        F[:, :q] = Fnew[:, :q]
        alpha[:q] = np.diag(T)[:q]
        beta[: q - 1] = np.diag(T, -1)[: q - 1]
        r_new -= F[:, :q] @ (F[:, :q].T @ r_new)
        b = np.linalg.norm(r_new)
        if b <= _BREAKDOWN * max(1.0, np.abs(alpha[:q]).max()):
            beta[q - 1] = 0.0
            r_new = rng.standard_normal(p)
            r_new -= F[:, :q] @ (F[:, :q].T @ r_new)
            b = np.linalg.norm(r_new)
        else:
            beta[q - 1] = b
        F[:, q] = r_new / b
        k0 = q
        restarts += 1


def w_action(data, cache, mu, psi):
    """Action of ``Psi^{-1/2} S~ Psi^{-1/2}`` built from the E-step cache.

    ``S~ = n^{-1} sum_i E[(R_i X_i - mu)(R_i X_i - mu)' | X_i]`` expands to
    ``n^{-1} sum_i [er2_i X_i X_i' - er_i (X_i mu' + mu X_i') + mu mu']``;
    each product costs two passes over the data, O(np).
    """
    X = data.rows
    n, p = X.shape
    er = np.asarray(cache.er, dtype=np.float64)
    er2 = np.asarray(cache.er2, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    psi = np.asarray(psi, dtype=np.float64)
    if er.shape[0] != n or er2.shape[0] != n:
        raise DomainError("cache length does not match dataset")
    if mu.shape[0] != p or psi.shape[0] != p:
        raise DomainError("parameter dimension does not match dataset")
    if np.any(psi <= 0):
        raise DomainError("psi must be positive")
    isqrt = 1.0 / np.sqrt(psi)
    xe = X.T @ er / n

    def apply(f):
        g = isqrt * f
        t = X @ g
        out = X.T @ (er2 * t) / n
        out -= xe * (mu @ g)
        out -= mu * ((er @ t) / n - (mu @ g))
        return isqrt * out

    return SymmetricAction(dim=p, apply=apply)


def woodbury_solve(lam, psi, rhs):
    """Solve ``(Lambda Lambda' + Psi) x = rhs`` via the q x q capacitance.

    ``rhs`` may be a vector or a (p, k) block; cost O(p q^2 + q^3).
    """
    psi = np.asarray(psi, dtype=np.float64)
    if np.any(psi <= 0):
        raise DomainError("psi must be positive")
    rhs = np.asarray(rhs, dtype=np.float64)
    y = rhs / (psi[:, None] if rhs.ndim == 2 else psi)
    if lam is None or lam.size == 0:
        return y
    B = lam / psi[:, None]
    C = np.eye(lam.shape[1]) + lam.T @ B
    w = cho_solve(cho_factor(C), B.T @ rhs)
    return y - B @ w


def plus_lowrank_solve(d, lam, c, rhs):
    """Solve ``(diag(d) + c * Lambda Lambda') x = rhs`` for scalar c.

    Used for the shifted systems ``(I + u Sigma)`` with u of either sign;
    the capacitance is solved with a general LU since c may be negative.
    """
    d = np.asarray(d, dtype=np.float64)
    if np.any(d <= 0):
        raise DomainError("diagonal must be positive")
    y = rhs / d
    if lam is None or lam.size == 0 or c == 0.0:
        return y
    B = lam / d[:, None]
    C = np.eye(lam.shape[1]) + c * (lam.T @ B)
    w = np.linalg.solve(C, B.T @ rhs)
    return y - c * (B @ w)
