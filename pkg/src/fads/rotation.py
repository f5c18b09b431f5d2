"""Post-fit loading rotations: varimax, quartimax, oblimin (quartimin).

Gradient-projection iteration over the rotation manifold (orthogonal
matrices for the orthomax family, unit-column normal matrices for the
oblique case), deterministic from the identity start.  After rotation
the columns are ordered by explained variance and sign-canonicalized.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError

_ORTHOMAX_WEIGHT = {"varimax": 1.0, "quartimax": 0.0}


@dataclass
class RotatedLoadings:
    lambda_rot: np.ndarray
    rotation: np.ndarray
    criterion_value: float
    method: str
    converged: bool = True


def _orthomax_value_grad(L, w):
    # minimized objective: -(1/4) sum(L2 * (L2 - (w/p) J L2))
    p = L.shape[0]
    L2 = L * L
    X = L2 if w == 0.0 else L2 - (w / p) * np.sum(L2, axis=0, keepdims=True)
    return -0.25 * float(np.sum(L2 * X)), -L * X


def _quartimin_value_grad(L):
    L2 = L * L
    q = L.shape[1]
    X = L2 @ (np.ones((q, q)) - np.eye(q))
    return 0.25 * float(np.sum(L2 * X)), L * X


def _gpa(A, value_grad, oblique, max_iter, tol):
    """Gradient projection (Jennrich) from the identity start."""
    q = A.shape[1]
    T = np.eye(q)

    def loadings(T):
        return A @ np.linalg.inv(T).T if oblique else A @ T

    L = loadings(T)
    f, Gq = value_grad(L)
    if oblique:
        Ti = np.linalg.inv(T)
        G = -(L.T @ Gq @ Ti).T
    else:
        G = A.T @ Gq
    al = 1.0
    converged = False
    for _ in range(max_iter):
        if oblique:
            Gp = G - T * np.sum(T * G, axis=0, keepdims=True)
        else:
            M = T.T @ G
            Gp = G - T @ (0.5 * (M + M.T))
        s = np.linalg.norm(Gp)
        if s < tol:
            converged = True
            break
        al *= 2.0
        for _ in range(30):
            X = T - al * Gp
            if oblique:
                Tt = X / np.sqrt(np.sum(X * X, axis=0, keepdims=True))
            else:
                U, _, Vt = np.linalg.svd(X, full_matrices=False)
                Tt = U @ Vt
            Lt = loadings(Tt)
            ft, Gqt = value_grad(Lt)
            if ft < f - 0.5 * s * s * al:
                break
            al /= 2.0
        T, L, f = Tt, Lt, ft
        if oblique:
            Ti = np.linalg.inv(T)
            G = -(L.T @ Gqt @ Ti).T
        else:
            G = A.T @ Gqt
    return T, L, f, converged


def rotate(lam, method="varimax", max_iter=500, tol=1e-8):
    """Rotate a loading matrix for interpretability.

    method is one of varimax, quartimax, oblimin; the returned rotation
    satisfies ``lambda_rot @ rotation.T == lam`` for every method.
    """
    lam = np.asarray(lam, dtype=np.float64)
    if lam.ndim != 2:
        raise DomainError("loadings must be a matrix")
    q = lam.shape[1]
    if method not in ("varimax", "quartimax", "oblimin"):
        raise DomainError(f"unknown rotation method {method!r}")
    if q <= 1:
        value = 0.0
        if q == 1:
            value = (
                -_quartimin_value_grad(lam)[0]
                if method == "oblimin"
                else -_orthomax_value_grad(lam, _ORTHOMAX_WEIGHT.get(method, 0.0))[0]
            )
        return RotatedLoadings(
            lambda_rot=lam.copy(), rotation=np.eye(q), criterion_value=value,
            method=method,
        )
    if method == "oblimin":
        T, L, f, ok = _gpa(lam, _quartimin_value_grad, True, max_iter, tol)
    else:
        w = _ORTHOMAX_WEIGHT[method]
        T, L, f, ok = _gpa(lam, lambda M: _orthomax_value_grad(M, w), False, max_iter, tol)

    # canonical order (descending column sum of squares) and signs
    order = np.argsort(-np.sum(L * L, axis=0), kind="stable")
    L = L[:, order]
    T = T[:, order]
    for j in range(q):
        i = int(np.argmax(np.abs(L[:, j])))
        if L[i, j] < 0:
            L[:, j] = -L[:, j]
            T[:, j] = -T[:, j]
    return RotatedLoadings(
        lambda_rot=L, rotation=T, criterion_value=-f, method=method, converged=ok
    )
