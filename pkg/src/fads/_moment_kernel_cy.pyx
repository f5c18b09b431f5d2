# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernel for the truncated-normal moment integrals.

Scalar-loop twin of ``_moment_kernel_py`` with identical semantics; see
that module for the math.  Selected at import time by ``fads.backend``.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport erfc, exp, fabs, isfinite, log, log1p, sqrt, M_PI

from .kronrod import _NODES, _WEIGHTS

cnp.import_array()

cdef double[43] GK_X
cdef double[43] GK_W
cdef int _i
for _i in range(43):
    GK_X[_i] = _NODES[_i]
    GK_W[_i] = _WEIGHTS[_i]

DEF TAIL_LOG = -34.538776394910684  # log(1e-15)


cdef inline double _log_ndtr_pos(double z) nogil:
    # log Phi(z) for z >= 0: Phi >= 1/2, no underflow concerns
    return log(0.5 * erfc(-z * 0.7071067811865476))


cdef inline double _log_ndtr(double z) nogil:
    # log Phi(z) for any z; asymptotic tail once erfc would underflow
    cdef double z2
    if z > -35.0:
        return log(0.5 * erfc(-z * 0.7071067811865476))
    z2 = z * z
    return -0.5 * z2 - log(-z) - 0.9189385332046727 \
        + log1p(-1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2)
                + 105.0 / (z2 * z2 * z2 * z2))


cdef inline double _log_integrand(double r, double rho, double m,
                                  double inv2v, double k) nogil:
    if r <= 0.0:
        return -1e308
    return k * log(r / rho) - (r - rho) * (r + rho - 2.0 * m) * inv2v


cdef double _log_ik_quad(double m, double v, double k) nogil:
    cdef double inv2v = 1.0 / (2.0 * v)
    cdef double rho = 0.5 * (m + sqrt(m * m + 4.0 * v * k))
    cdef double lo_a = 0.0, lo_b = rho, hi_a = rho, hi_b, step, mid, s
    cdef int it, j
    step = sqrt(2.0 * v)
    hi_b = rho + step
    for it in range(200):
        if _log_integrand(hi_b, rho, m, inv2v, k) < TAIL_LOG:
            break
        step *= 2.0
        hi_b = rho + step
    for it in range(40):
        mid = 0.5 * (lo_a + lo_b)
        if _log_integrand(mid, rho, m, inv2v, k) < TAIL_LOG:
            lo_a = mid
        else:
            lo_b = mid
        mid = 0.5 * (hi_a + hi_b)
        if _log_integrand(mid, rho, m, inv2v, k) < TAIL_LOG:
            hi_b = mid
        else:
            hi_a = mid
    cdef double half = 0.5 * (hi_b - lo_a)
    cdef double cen = 0.5 * (hi_b + lo_a)
    s = 0.0
    for j in range(43):
        s += GK_W[j] * exp(_log_integrand(cen + half * GK_X[j], rho, m, inv2v, k))
    return k * log(rho) - (rho - m) * (rho - m) * inv2v + log(half * s)


cdef int _one(double m, double v, long p, int force_path,
              double* er, double* er2, double* logi) nogil:
    cdef double log_i0, log_i1, r, acc, a, b, lkm1, lk, lkp1
    cdef long k
    cdef bint use_rec
    if force_path == 1:
        use_rec = True
    elif force_path == 2:
        use_rec = False
    else:
        use_rec = m > 0.0
    if use_rec:
        log_i0 = 0.5 * log(2.0 * M_PI * v) + _log_ndtr(m / sqrt(v))
        a = log(m) + log_i0 if m > 0.0 else -1e308
        b = log(v) - m * m / (2.0 * v)
        if a >= b:
            log_i1 = a + log1p(exp(b - a))
        else:
            log_i1 = b + log1p(exp(a - b))
        r = exp(log_i1 - log_i0)
        acc = log_i0
        if p == 1:
            er[0] = r
            er2[0] = (m + v / r) * r
            logi[0] = acc
        else:
            for k in range(1, p):
                acc += log(r)
                r = m + k * v / r
            er[0] = r
            er2[0] = (m + p * v / r) * r
            logi[0] = acc
        if er[0] > 0.0 and er2[0] > 0.0 and isfinite(er[0]) and isfinite(er2[0]) \
                and isfinite(logi[0]):
            return 0
        # fall through to quadrature on numerical failure
    if p == 1:
        lkm1 = 0.5 * log(2.0 * M_PI * v) + _log_ndtr(m / sqrt(v))
    else:
        lkm1 = _log_ik_quad(m, v, p - 1)
    lk = _log_ik_quad(m, v, p)
    lkp1 = _log_ik_quad(m, v, p + 1)
    er[0] = exp(lk - lkm1)
    er2[0] = exp(lkp1 - lkm1)
    logi[0] = lkm1
    return 0


def moment_batch(m, v, p, force_path=0):
    """Batched moment triple at common order p; see ``_moment_kernel_py``."""
    m = np.atleast_1d(np.asarray(m, dtype=np.float64))
    v = np.atleast_1d(np.asarray(v, dtype=np.float64))
    m, v = np.broadcast_arrays(m, v)
    m = np.ascontiguousarray(m)
    v = np.ascontiguousarray(v)
    cdef long pp = int(p)
    if pp < 1:
        raise ValueError(f"order p must be >= 1, got {p}")
    if not np.all(v > 0.0):
        raise ValueError("variance v must be positive")
    if not np.all(np.isfinite(m)):
        raise ValueError("m must be finite")
    cdef cnp.ndarray[cnp.float64_t, ndim=1] mm = m.ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] vv = v.ravel()
    cdef long n = mm.shape[0]
    cdef cnp.ndarray[cnp.float64_t, ndim=1] er = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] er2 = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] logi = np.empty(n)
    cdef long i
    cdef int fp = int(force_path)
    cdef bint ok = True
    with nogil:
        for i in range(n):
            _one(mm[i], vv[i], pp, fp, &er[i], &er2[i], &logi[i])
            if not (isfinite(er[i]) and isfinite(er2[i]) and isfinite(logi[i])):
                ok = False
                break
    if not ok:
        raise FloatingPointError("non-finite moment computation; inputs out of supported range")
    shape = m.shape
    return er.reshape(shape), er2.reshape(shape), logi.reshape(shape)
