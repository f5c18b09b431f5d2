import numpy as np
import pytest

from fads import rotate
from fads.rotation import _orthomax_value_grad


def varimax_value(L):
    L2 = L * L
    p = L.shape[0]
    return float(np.sum(L2 * (L2 - np.sum(L2, axis=0, keepdims=True) / p))) / 4.0


def test_q1_identity(rng):
    lam = rng.standard_normal((10, 1))
    out = rotate(lam, "varimax")
    assert np.array_equal(out.rotation, np.eye(1))
    assert np.array_equal(out.lambda_rot, lam)


def test_perfect_simple_structure_recovers_signed_permutation(rng):
    # loadings with one nonzero per row are already at the optimum
    base = np.zeros((12, 3))
    for i in range(12):
        base[i, i % 3] = rng.uniform(0.5, 2.0) * (1 if i % 2 else -1)
    out = rotate(base, "varimax")
    R = out.rotation
    # rotation should be a signed permutation
    assert np.allclose(np.abs(R) @ np.abs(R.T), np.eye(3), atol=1e-6)
    assert np.allclose(np.max(np.abs(R), axis=0), 1.0, atol=1e-6)


@pytest.mark.parametrize("method", ["varimax", "quartimax"])
def test_orthomax_invariants(rng, method):
    lam = rng.standard_normal((30, 3))
    out = rotate(lam, method)
    R = out.rotation
    assert np.allclose(R.T @ R, np.eye(3), atol=1e-8)
    assert np.allclose(out.lambda_rot @ R.T, lam, atol=1e-8)
    # communalities preserved
    assert np.allclose(np.sum(out.lambda_rot**2, 1), np.sum(lam**2, 1), atol=1e-10)
    # Lambda Lambda' invariant
    assert np.allclose(out.lambda_rot @ out.lambda_rot.T, lam @ lam.T, atol=1e-10)


def test_oblimin_reproduces_input(rng):
    lam = rng.standard_normal((20, 3))
    out = rotate(lam, "oblimin")
    assert np.allclose(out.lambda_rot @ out.rotation.T, lam, atol=1e-8)
    # oblique rotation has unit-norm columns
    assert np.allclose(np.sum(out.rotation**2, axis=0), 1.0, atol=1e-10)


def test_varimax_beats_random_probe(rng):
    lam = rng.standard_normal((30, 3))
    out = rotate(lam, "varimax")
    ours = varimax_value(out.lambda_rot)
    assert out.criterion_value == pytest.approx(ours, rel=1e-10)
    best = -np.inf
    batch = 20_000
    for _ in range(50):  # one million random orthogonal probes
        Z = rng.standard_normal((batch, 3, 3))
        Q, _ = np.linalg.qr(Z)
        rotated = np.einsum("pk,bkj->bpj", lam, Q)
        L2 = rotated**2
        vals = np.sum(L2 * (L2 - L2.sum(axis=1, keepdims=True) / 30.0), axis=(1, 2)) / 4
        best = max(best, float(vals.max()))
    assert ours >= best - 1e-6


def test_criterion_nondecreasing_signs_canonical(rng):
    lam = rng.standard_normal((15, 4))
    out = rotate(lam, "quartimax")
    before = -_orthomax_value_grad(lam, 0.0)[0]
    assert out.criterion_value >= before - 1e-12
    for j in range(4):
        col = out.lambda_rot[:, j]
        assert col[np.argmax(np.abs(col))] > 0
    ss = np.sum(out.lambda_rot**2, axis=0)
    assert np.all(np.diff(ss) <= 1e-10)


def test_unknown_method_rejected(rng):
    from fads import DomainError

    with pytest.raises(DomainError):
        rotate(rng.standard_normal((5, 2)), "promax")
