import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fads import DomainError, moment_triple
from fads import _moment_kernel_cy as cy
from fads import _moment_kernel_py as py

from .conftest import log_moment_oracle, moment_ratio_oracle

KERNELS = [py.moment_batch, cy.moment_batch]


def test_half_normal_moments():
    t = moment_triple(0.0, 1.0, 1)
    assert t.er == pytest.approx(np.sqrt(2.0 / np.pi), rel=1e-12)
    assert t.er2 == pytest.approx(1.0, rel=1e-12)
    assert t.log_i_pm1 == pytest.approx(0.5 * np.log(2 * np.pi) + np.log(0.5), rel=1e-12)


def test_sharp_positive_mode():
    t = moment_triple(10.0, 1e-4, 3)
    er, er2 = moment_ratio_oracle(10.0, 1e-4, 3)
    assert t.er == pytest.approx(10.0, abs=1e-3)
    assert t.er2 == pytest.approx(100.0, abs=2e-2)
    assert t.er == pytest.approx(er, rel=1e-9)
    assert t.er2 == pytest.approx(er2, rel=1e-9)


def test_negative_mode_large_order_oracle():
    t = moment_triple(-2.0, 1.0, 50)
    er, er2 = moment_ratio_oracle(-2.0, 1.0, 50)
    assert t.er == pytest.approx(er, rel=1e-6)
    assert t.er2 == pytest.approx(er2, rel=1e-6)


@pytest.mark.parametrize("kernel", KERNELS, ids=["python", "cython"])
def test_oracle_grid(kernel):
    for m in (-5.0, -0.1, 0.1, 10.0):
        for v in (0.01, 1.0, 100.0):
            for p in (2, 100):
                er, er2, logi = kernel(np.array([m]), np.array([v]), p)
                oer, oer2 = moment_ratio_oracle(m, v, p)
                assert er[0] == pytest.approx(oer, rel=1e-6), (m, v, p)
                assert er2[0] == pytest.approx(oer2, rel=1e-6), (m, v, p)
                assert logi[0] == pytest.approx(log_moment_oracle(m, v, p - 1), abs=1e-6)


def test_ratio_recurrence_consistency_to_k200():
    # I_{k+2}/I_{k+1} = m + (k+1) v I_k / I_{k+1} against brute force
    m, v = 1.3, 0.7
    logs = {k: log_moment_oracle(m, v, k) for k in range(0, 203)}
    for k in (0, 5, 50, 199, 200):
        lhs = np.exp(logs[k + 2] - logs[k + 1])
        rhs = m + (k + 1) * v * np.exp(logs[k] - logs[k + 1])
        assert lhs == pytest.approx(rhs, rel=1e-8)
        got = py.moment_batch(np.array([m]), np.array([v]), k + 2)[0][0]
        assert got == pytest.approx(lhs, rel=1e-8)


@pytest.mark.parametrize("v", [0.1, 1.0, 10.0])
@pytest.mark.parametrize("p", [2, 50, 500])
def test_recurrence_quadrature_overlap(v, p):
    m = np.array([0.05, 0.2, 0.5])
    vv = np.full(3, v)
    rec = py.moment_batch(m, vv, p, force_path=1)
    qua = py.moment_batch(m, vv, p, force_path=2)
    assert np.allclose(rec[0], qua[0], rtol=1e-6)
    assert np.allclose(rec[1], qua[1], rtol=1e-6)
    assert np.allclose(rec[2], qua[2], rtol=1e-6, atol=1e-8)


def test_kernels_agree():
    rng = np.random.default_rng(3)
    m = rng.standard_normal(500) * 4
    v = np.exp(rng.standard_normal(500))
    for p in (1, 2, 37, 400):
        a = py.moment_batch(m, v, p)
        b = cy.moment_batch(m, v, p)
        for x, y in zip(a, b):
            assert np.allclose(x, y, rtol=5e-13, atol=1e-12)


@settings(max_examples=150, deadline=None)
@given(
    m=st.floats(-30.0, 30.0),
    v=st.floats(1e-3, 1e3),
    p=st.integers(1, 800),
)
def test_conditional_variance_nonnegative(m, v, p):
    er, er2, logi = cy.moment_batch(np.array([m]), np.array([v]), p)
    assert er[0] > 0
    assert er2[0] > 0
    assert np.isfinite(logi[0])
    assert er2[0] - er[0] ** 2 >= -1e-9 * er2[0]


def test_domain_errors():
    with pytest.raises(DomainError):
        moment_triple(1.0, 0.0, 3)
    with pytest.raises(DomainError):
        moment_triple(1.0, -2.0, 3)
    with pytest.raises(DomainError):
        moment_triple(np.inf, 1.0, 3)
    with pytest.raises(DomainError):
        moment_triple(0.0, 1.0, 0)
    for kernel in KERNELS:
        with pytest.raises(ValueError):
            kernel(np.array([1.0]), np.array([-1.0]), 3)
