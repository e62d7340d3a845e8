import numpy as np
import pytest

from calcert import datamatrix, operators, transforms
from calcert.selftest import pauli_family, werner_data_matrix


def test_rotation_block_inverse_pair():
    rng = np.random.default_rng(3)
    for _ in range(25):
        theta = rng.uniform(0.05, transforms.HALF_PI - 0.05)
        r = transforms.rotation_block(theta)
        r_inv = transforms.rotation_block_inverse(theta)
        assert np.allclose(r @ r_inv, np.eye(2), atol=1e-12)
        assert np.allclose(r_inv @ r, np.eye(2), atol=1e-12)
        sv = np.linalg.svd(r_inv, compute_uv=False)
        expect = sorted(
            [np.sqrt(2.0) * np.cos(theta), np.sqrt(2.0) * np.sin(theta)], reverse=True
        )
        assert np.allclose(sv, expect, atol=1e-12)


def test_rotation_block_domain():
    for theta in (0.0, transforms.HALF_PI, -0.3, 2.0):
        with pytest.raises(ValueError):
            transforms.rotation_block(theta)


def test_rotation_matrix_embedding():
    theta = 0.7
    m = transforms.rotation_matrix(theta)
    assert m.shape == (3, 3)
    assert m[0, 0] == 1.0
    assert np.allclose(m[0, 1:], 0.0) and np.allclose(m[1:, 0], 0.0)
    assert np.allclose(m[1:, 1:], transforms.rotation_block(theta))


def test_sharpener_matrix_validity():
    s = transforms.sharpener_matrix((0.5, 1.5, -0.25, 1.25))
    assert np.allclose(s, [[1.0, 0, 0], [0.5, 1.5, 0], [-0.25, 0, 1.25]])
    with pytest.raises(ValueError):
        transforms.sharpener_matrix((0.5, 1.4, 0.0, 1.0))  # x2 < 1 + |x1|
    with pytest.raises(ValueError):
        transforms.sharpener_matrix((0.0, 1.0, 0.8, 1.7))  # x4 < 1 + |x3|


def test_gram_schmidt_orthonormal_and_triangular():
    rng = np.random.default_rng(19)
    for _ in range(10):
        fam = [
            operators.DichotomicObservable(_random_direction(rng, 2)) for _ in range(2)
        ]
        result = transforms.gram_schmidt(fam)
        ops = result.operators
        assert len(ops) == 3
        for i, a in enumerate(ops):
            for j, b in enumerate(ops):
                hs = np.trace(a.conj().T @ b).real
                assert abs(hs - (1.0 if i == j else 0.0)) < 1e-10
        g = result.transform
        assert np.allclose(g, np.tril(g))
        # K_i = sum_j G[i, j] input_j with input_0 = identity
        inputs = [np.eye(2)] + [ob.mat for ob in fam]
        for i, k in enumerate(ops):
            rebuilt = sum(g[i, j] * inputs[j] for j in range(len(inputs)))
            assert np.allclose(rebuilt, k, atol=1e-10)


def _random_direction(rng, d):
    v = rng.normal(size=3)
    v /= np.linalg.norm(v)
    return (
        v[0] * operators.sigma_x + v[1] * operators.sigma_y + v[2] * operators.sigma_z
    )


def test_gram_schmidt_equality_case_pauli_pair():
    # sharp orthogonal qubit pair: G = diag(1, 1, 1)/sqrt(2), |det| = 2^{-3/2}
    result = transforms.gram_schmidt(pauli_family("xz"))
    g = result.transform
    assert np.allclose(g, np.eye(3) / np.sqrt(2.0), atol=1e-12)
    assert abs(abs(np.linalg.det(g)) - 2.0 ** (-1.5)) < 1e-14


def test_gram_schmidt_rejects_dependent_family():
    fam = (operators.sigma_x, operators.DichotomicObservable(0.5 * operators.sigma_x))
    with pytest.raises(ValueError):
        transforms.gram_schmidt(fam)


def test_normalization_part_factorization():
    # G = O N with |det O| >= 1; for unit-norm directions O is orthogonal-like
    fam = pauli_family("xz")
    n = transforms.normalization_part(fam)
    g = transforms.gram_schmidt(fam).transform
    o = g @ np.linalg.inv(n)
    assert abs(np.linalg.det(o)) >= 1.0 - 1e-12
    assert np.allclose(np.diag(n), [2.0 ** -0.5] * 3, atol=1e-12)


def test_orthonormalized_correlation_of_werner():
    D = werner_data_matrix(0.5, "xz")
    fam = pauli_family("xz")
    c = transforms.orthonormalized_correlation(D, fam, fam)
    # frames scale by 1/sqrt(2) per party: block entries get halved
    expect = np.diag([0.5, -0.25, -0.25])
    assert np.allclose(c, expect, atol=1e-12)
    with pytest.raises(ValueError):
        transforms.orthonormalized_correlation(D, pauli_family("xyz"), fam)
