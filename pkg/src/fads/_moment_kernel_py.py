"""Pure-numpy kernel for the truncated-normal moment integrals.

Computes, for batches of (m, v) at a common integer order p >= 1,

    er  = I_p(m, v)   / I_{p-1}(m, v)
    er2 = I_{p+1}(m,v) / I_{p-1}(m, v)
    log I_{p-1}(m, v)

where I_k(m, v) = int_0^inf R^k exp(-(R-m)^2 / (2v)) dR.

For m > 0 the ratio recurrence  I_{k+2}/I_{k+1} = m + (k+1) v I_k/I_{k+1}
is run forward from the closed-form seeds

    I_0 = sqrt(2 pi v) Phi(m / sqrt(v)),
    I_1 = m I_0 + v exp(-m^2 / (2v)),

carrying the normalizer in log scale.  For m <= 0 the recurrence is
unstable, so each I_k is integrated with a fixed 43-point Gauss-Kronrod
rule after writing the integrand relative to its mode
rho = (m + sqrt(m^2 + 4 v k)) / 2 so it is bounded by one; the bracket
ends where the normalized integrand falls below 1e-15.

A compiled twin of this module lives in ``_moment_kernel_cy``; both
expose the same ``moment_batch`` contract and are interchangeable.
"""

import numpy as np
from scipy.special import log_ndtr

from .kronrod import gk43_nodes_weights

_TAIL_LOG = np.log(1e-15)


def _log_integrand(r, rho, m, inv2v, k):
    # log of (R/rho)^k exp(-(R-rho)(R+rho-2m)/(2v)); zero at the mode rho
    with np.errstate(divide="ignore"):
        return k * np.log(r / rho) - (r - rho) * (r + rho - 2.0 * m) * inv2v


def _bracket(rho, m, inv2v, k, n_bisect=40):
    """Endpoints where the normalized integrand drops below 1e-15."""
    # lower end: integrand increases from -inf at 0+ up to 0 at rho
    lo_a = np.zeros_like(rho)
    lo_b = rho.copy()
    # upper end: expand geometrically past the mode, then bisect
    step = np.sqrt(1.0 / inv2v)  # ~ gaussian scale sqrt(2v)
    hi_b = rho + step
    for _ in range(200):
        g = _log_integrand(hi_b, rho, m, inv2v, k)
        todo = g >= _TAIL_LOG
        if not todo.any():
            break
        step = np.where(todo, 2.0 * step, step)
        hi_b = np.where(todo, rho + step, hi_b)
    hi_a = rho.copy()
    for _ in range(n_bisect):
        mid = 0.5 * (lo_a + lo_b)
        below = _log_integrand(mid, rho, m, inv2v, k) < _TAIL_LOG
        lo_a = np.where(below, mid, lo_a)
        lo_b = np.where(below, lo_b, mid)
        mid = 0.5 * (hi_a + hi_b)
        below = _log_integrand(mid, rho, m, inv2v, k) < _TAIL_LOG
        hi_b = np.where(below, mid, hi_b)
        hi_a = np.where(below, hi_a, mid)
    return lo_a, hi_b


def _log_ik_quadrature(m, v, k):
    """log I_k by Gauss-Kronrod on the mode-normalized integrand; m <= 0, k >= 1."""
    inv2v = 1.0 / (2.0 * v)
    rho = 0.5 * (m + np.sqrt(m * m + 4.0 * v * k))
    lo, hi = _bracket(rho, m, inv2v, k)
    nodes, weights = gk43_nodes_weights(lo, hi)
    g = _log_integrand(nodes, rho[..., None], m[..., None], inv2v[..., None], k)
    val = np.sum(weights * np.exp(g), axis=-1)
    return k * np.log(rho) - (rho - m) ** 2 * inv2v + np.log(val)


def _log_i0(m, v):
    return 0.5 * np.log(2.0 * np.pi * v) + log_ndtr(m / np.sqrt(v))


def _recurrence(m, v, p):
    """Ratio recurrence for m > 0: returns (er, er2, log I_{p-1})."""
    log_i0 = _log_i0(m, v)
    log_i1 = np.logaddexp(np.log(m) + log_i0, np.log(v) - m * m / (2.0 * v))
    r = np.exp(log_i1 - log_i0)  # I_1 / I_0
    log_ipm1 = log_i0.copy()
    if p == 1:
        er = r.copy()
        er2 = (m + v / r) * r
        return er, er2, log_ipm1
    # r becomes I_{k+1}/I_k at the end of step k
    for k in range(1, p):
        log_ipm1 += np.log(r)
        r = m + k * v / r
    er = r
    r_next = m + p * v / r
    er2 = r_next * r
    return er, er2, log_ipm1


def _quadrature(m, v, p):
    log_km1 = _log_i0(m, v) if p == 1 else _log_ik_quadrature(m, v, p - 1)
    log_k = _log_ik_quadrature(m, v, p)
    log_kp1 = _log_ik_quadrature(m, v, p + 1)
    er = np.exp(log_k - log_km1)
    er2 = np.exp(log_kp1 - log_km1)
    return er, er2, log_km1


def moment_batch(m, v, p, force_path=0):
    """Batched moment triple at common order p.

    Parameters
    ----------
    m, v : array_like, broadcast to a common 1-d shape; all v > 0.
    p : int, order (the sphere dimension), >= 1.
    force_path : {0, 1, 2}
        0 selects recurrence for m > 0 and quadrature otherwise; 1 forces
        the recurrence, 2 forces quadrature (testing hooks).

    Returns
    -------
    (er, er2, log_i_pm1) : float64 arrays of the broadcast shape.
    """
    m = np.atleast_1d(np.asarray(m, dtype=np.float64))
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    m, v = np.broadcast_arrays(m, v)
    m = np.ascontiguousarray(m)
    v = np.ascontiguousarray(v)
    if p < 1:
        raise ValueError(f"order p must be >= 1, got {p}")
    if not np.all(v > 0.0):
        raise ValueError("variance v must be positive")
    if not np.all(np.isfinite(m)):
        raise ValueError("m must be finite")

    er = np.empty_like(m)
    er2 = np.empty_like(m)
    logi = np.empty_like(m)
    if force_path == 1:
        use_rec = np.ones(m.shape, dtype=bool)
    elif force_path == 2:
        use_rec = np.zeros(m.shape, dtype=bool)
    else:
        use_rec = m > 0.0

    if use_rec.any():
        idx = np.where(use_rec)[0]
        a, b, c = _recurrence(m[idx], v[idx], p)
        bad = ~(np.isfinite(a) & np.isfinite(b) & (a > 0.0) & (b > 0.0))
        if bad.any():
            # recurrence went nonpositive/nonfinite: recompute by quadrature
            sub = idx[bad]
            a[bad], b[bad], c[bad] = _quadrature(m[sub], v[sub], p)
        er[idx], er2[idx], logi[idx] = a, b, c
    if not use_rec.all():
        idx = np.where(~use_rec)[0]
        er[idx], er2[idx], logi[idx] = _quadrature(m[idx], v[idx], p)

    if not (np.all(np.isfinite(er)) and np.all(np.isfinite(er2)) and np.all(np.isfinite(logi))):
        raise FloatingPointError("non-finite moment computation; inputs out of supported range")
    return er, er2, logi
