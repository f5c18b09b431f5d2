import numpy as np
from scipy.integrate import quad

from fads.kronrod import _NODES, _WEIGHTS, gk43_nodes_weights


def test_rule_size_and_weights_positive():
    assert _NODES.shape == (43,)
    assert _WEIGHTS.shape == (43,)
    assert np.all(_WEIGHTS > 0)
    assert np.all(np.diff(_NODES) > 0)


def test_embeds_gauss21_nodes():
    g21 = np.polynomial.legendre.leggauss(21)[0]
    # every Gauss node appears among the Kronrod nodes
    for x in g21:
        assert np.min(np.abs(_NODES - x)) < 1e-13


def test_degree_exactness():
    # Kronrod extension of G21 integrates monomials exactly through degree 65
    for k in range(0, 66):
        exact = 2.0 / (k + 1) if k % 2 == 0 else 0.0
        got = float(np.sum(_WEIGHTS * _NODES**k))
        assert abs(got - exact) < 5e-14, k


def test_matches_adaptive_quadrature_on_bump():
    f = lambda t: np.exp(-3.0 * t * t) * np.cos(t)
    x, w = gk43_nodes_weights(-2.0, 5.0)
    ref = quad(f, -2, 5, epsabs=1e-14, epsrel=1e-14)[0]
    assert abs(float(np.sum(w * f(x))) - ref) < 1e-13


def test_batched_mapping():
    lo = np.array([0.0, -1.0])
    hi = np.array([2.0, 1.0])
    x, w = gk43_nodes_weights(lo, hi)
    assert x.shape == (2, 43)
    # integral of x^2 on [0,2] and [-1,1]
    got = np.sum(w * x * x, axis=1)
    assert np.allclose(got, [8.0 / 3.0, 2.0 / 3.0], atol=1e-14)
