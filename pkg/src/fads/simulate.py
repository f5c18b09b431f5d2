"""Simulation recipes for benchmarking and tests.

Truth draws follow the evaluation design: uniquenesses i.i.d. U(0.2, 0.8),
loading entries i.i.d. N(0, 1), mean direction a normalized standard
normal vector.
"""

import numpy as np

from .pn import PNParams, sample_pn


def simulate_truth(p, q, seed):
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    mu = rng.standard_normal(p)
    mu /= np.linalg.norm(mu)
    psi = rng.uniform(0.2, 0.8, p)
    lam = rng.standard_normal((p, q)) if q else np.zeros((p, 0))
    return PNParams(mu, lam, psi)


def simulate_dataset(n, p, q, seed):
    """Draw a truth and a PN sample from it; returns (dataset, truth)."""
    truth = simulate_truth(p, q, seed)
    data = sample_pn(truth, n, seed=int(seed) + 1)
    return data, truth
