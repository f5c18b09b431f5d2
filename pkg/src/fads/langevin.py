"""Langevin (von Mises-Fisher) fitting and sampling: the GOF null model.

The concentration MLE solves A_p(kappa) = Rbar where A_p is the Bessel
ratio I_{p/2}/I_{p/2-1} and Rbar the mean resultant length.  Everything
runs through a log-domain modified Bessel evaluation that stays finite
for orders in the thousands and arguments up to the kappa cap: an
ascending series summed in log space for moderate arguments, the uniform
large-order asymptotic expansion for large orders, and the Hankel
large-argument expansion otherwise.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .data import PROVENANCE_SIMULATED, SphericalDataset
from .exceptions import DomainError

KAPPA_MAX = 1e8


@dataclass
class LangevinParams:
    nu: np.ndarray
    kappa: float
    loglik: float = np.nan
    degenerate: bool = False


def _log_bessel_series(nu, x):
    # ascending series in log space; fine for x up to a few thousand
    log_quarter_x2 = 2.0 * np.log(x) - np.log(4.0)
    t = 0.0  # log of current term relative to the leading factor
    acc = 0.0
    for k in range(1, 100000):
        t += log_quarter_x2 - np.log(k) - np.log(nu + k)
        acc = np.logaddexp(acc, t)
        if t < acc - 40.0:
            break
    return nu * np.log(x / 2.0) - gammaln(nu + 1.0) + acc


def _log_bessel_uniform(nu, x):
    # Uniform large-order expansion with terms through u_4.
    z = x / nu
    s = np.sqrt(1.0 + z * z)
    t = 1.0 / s
    eta = s + np.log(z / (1.0 + s))
    t2 = t * t
    u1 = t * (3.0 - 5.0 * t2) / 24.0
    u2 = t2 * (81.0 - 462.0 * t2 + 385.0 * t2 * t2) / 1152.0
    u3 = t * t2 * (30375.0 - 369603.0 * t2 + 765765.0 * t2 * t2
                   - 425425.0 * t2 * t2 * t2) / 414720.0
    u4 = t2 * t2 * (4465125.0 - 94121676.0 * t2 + 349922430.0 * t2 * t2
                    - 446185740.0 * t2 ** 3 + 185910725.0 * t2 ** 4) / 39813120.0
    corr = 1.0 + u1 / nu + u2 / nu**2 + u3 / nu**3 + u4 / nu**4
    return nu * eta - 0.5 * np.log(2.0 * np.pi * nu) - 0.25 * np.log(1.0 + z * z) \
        + np.log(corr)


def _log_bessel_hankel(nu, x):
    # large-argument expansion; requires x >> nu^2
    mu4 = 4.0 * nu * nu
    term = 1.0
    acc = 1.0
    for k in range(1, 12):
        term *= -(mu4 - (2.0 * k - 1.0) ** 2) / (8.0 * x * k)
        acc += term
        if abs(term) < 1e-17 * abs(acc):
            break
    return x - 0.5 * np.log(2.0 * np.pi * x) + np.log(acc)


def log_bessel_i(nu, x):
    """log I_nu(x) for nu >= 0, x >= 0, stable for large nu and x."""
    if nu < 0 or x < 0:
        raise DomainError("log_bessel_i requires nu >= 0 and x >= 0")
    if x == 0.0:
        return 0.0 if nu == 0.0 else -np.inf
    if nu >= 50.0:
        return _log_bessel_uniform(nu, x)
    if x <= 3500.0:
        return _log_bessel_series(nu, x)
    return _log_bessel_hankel(nu, x)


def bessel_ratio(p, kappa):
    """A_p(kappa) = I_{p/2}(kappa) / I_{p/2-1}(kappa)."""
    if kappa == 0.0:
        return 0.0
    nu = 0.5 * p - 1.0
    if kappa > 1e4 * max(1.0, nu):
        # A_p = 1 - (p-1)/(2k) - (p-1)(p-3)/(8k^2) + O(k^-3)
        return 1.0 - (p - 1.0) / (2.0 * kappa) \
            - (p - 1.0) * (p - 3.0) / (8.0 * kappa * kappa)
    return float(np.exp(log_bessel_i(nu + 1.0, kappa) - log_bessel_i(nu, kappa)))


def log_vmf_const(p, kappa):
    """log c_p(kappa) of the density c_p(kappa) exp(kappa nu'x)."""
    if kappa == 0.0:
        return float(gammaln(0.5 * p) - np.log(2.0) - 0.5 * p * np.log(np.pi))
    nu = 0.5 * p - 1.0
    return float(
        nu * np.log(kappa) - 0.5 * p * np.log(2.0 * np.pi) - log_bessel_i(nu, kappa)
    )


def langevin_loglik(data, nu_dir, kappa):
    dots = data.rows @ nu_dir
    return data.n * log_vmf_const(data.p, kappa) + kappa * float(np.sum(dots))


def langevin_fit(data):
    """MLE of the Langevin law: resultant direction and the kappa root of
    A_p(kappa) = Rbar, Newton-refined from the standard approximation."""
    if data.n < 2:
        raise DomainError("need at least two observations")
    resultant = data.rows.sum(axis=0)
    rnorm = float(np.linalg.norm(resultant))
    n, p = data.n, data.p
    if rnorm == 0.0:
        nu_dir = np.zeros(p)
        nu_dir[0] = 1.0
        return LangevinParams(nu=nu_dir, kappa=0.0,
                              loglik=langevin_loglik(data, nu_dir, 0.0))
    nu_dir = resultant / rnorm
    rbar = rnorm / n
    if rbar >= 1.0 - 1e-12:
        return LangevinParams(nu=nu_dir, kappa=KAPPA_MAX,
                              loglik=langevin_loglik(data, nu_dir, KAPPA_MAX),
                              degenerate=True)
    kappa = max(rbar * (p - rbar * rbar) / (1.0 - rbar * rbar), 1e-8)
    for _ in range(100):
        a = bessel_ratio(p, kappa)
        da = 1.0 - a * a - (p - 1.0) / kappa * a
        if da == 0.0:
            break
        step = (a - rbar) / da
        new = kappa - step
        while new <= 0.0:
            step *= 0.5
            new = kappa - step
        kappa = min(new, KAPPA_MAX)
        if abs(step) <= 1e-12 * max(kappa, 1.0):
            break
    return LangevinParams(nu=nu_dir, kappa=float(kappa),
                          loglik=langevin_loglik(data, nu_dir, float(kappa)))


def sample_langevin(params, n, seed):
    """n Langevin draws by the tangent-normal rejection sampler.

    The cosine component follows Wood's envelope scheme; the tangent part
    is uniform on the orthogonal sphere, mapped so the first axis aligns
    with the mean direction.  Deterministic per (params, n, seed).
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    nu_dir = np.asarray(params.nu, dtype=np.float64)
    p = nu_dir.shape[0]
    if p < 2:
        raise DomainError("sampler needs p >= 2")
    kappa = float(params.kappa)
    rng = np.random.Generator(np.random.Philox(seed))
    if kappa == 0.0:
        y = rng.standard_normal((n, p))
        return SphericalDataset(y / np.linalg.norm(y, axis=1)[:, None],
                                provenance=PROVENANCE_SIMULATED)
    d = p - 1
    b = d / (np.sqrt(4.0 * kappa * kappa + d * d) + 2.0 * kappa)
    x0 = (1.0 - b) / (1.0 + b)
    c = kappa * x0 + d * np.log(1.0 - x0 * x0)
    w = np.empty(n)
    need = np.arange(n)
    while need.size:
        z = rng.beta(0.5 * d, 0.5 * d, size=need.size)
        t = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z)
        u = rng.uniform(size=need.size)
        ok = kappa * t + d * np.log(1.0 - x0 * t) - c >= np.log(u)
        w[need[ok]] = t[ok]
        need = need[~ok]
    tang = rng.standard_normal((n, d))
    tang /= np.linalg.norm(tang, axis=1)[:, None]
    rows = np.empty((n, p))
    rows[:, 0] = w
    rows[:, 1:] = np.sqrt(np.maximum(1.0 - w * w, 0.0))[:, None] * tang
    # Householder map e1 -> nu
    e1 = np.zeros(p)
    e1[0] = 1.0
    v = e1 - nu_dir
    vn = np.linalg.norm(v)
    if vn > 1e-12:
        v /= vn
        rows -= 2.0 * np.outer(rows @ v, v)
    rows /= np.linalg.norm(rows, axis=1)[:, None]
    return SphericalDataset(rows, provenance=PROVENANCE_SIMULATED)
