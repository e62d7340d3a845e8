import math

import numpy as np
import pytest

from calcert import criteria, operators, oracles
from calcert.selftest import pauli_family, werner_data_matrix


def test_lemma1_oracle_matches_closed_form():
    # minimum of (a1^2 + a2^2)(b1^2 + b2^2) over factorizations is
    # ((sqrt(l1) + sqrt(l2))^2 / 2)^2 = (sqrt(l1) + sqrt(l2))^4 / 4
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(60):
        l1 = rng.uniform(0.05, 1.0)
        l2 = rng.uniform(0.0, l1)
        got = oracles.lemma1_oracle(l1, l2)
        expect = 0.25 * (math.sqrt(l1) + math.sqrt(l2)) ** 4
        worst = max(worst, abs(got - expect) / expect)
    assert worst < 1e-5, f"worst relative error {worst:.3e}"


def test_lemma2_oracle_frozen_points():
    cases = [
        ((1.0, 0.5, 0.25), 1.75),
        ((1.0, 1.0, 1.0), 3.0),
        ((1.0, 0.0, 0.0), 1.0),
        ((1.0, 1.0, 0.0), 2.0),
        ((0.3, 0.3, 0.3), 0.9),
    ]
    for (l0, l1, l2), expect in cases:
        got = oracles.lemma2_oracle(l0, l1, l2)
        assert abs(got - expect) < 1e-6, f"lemma2({l0},{l1},{l2}) = {got}, want {expect}"


def test_lemma2_oracle_matches_sum_on_random_tuples():
    rng = np.random.default_rng(202)
    worst = 0.0
    for _ in range(60):
        vals = np.sort(rng.uniform(0.01, 1.0, size=3))[::-1]
        got = oracles.lemma2_oracle(*vals)
        expect = float(np.sum(vals))
        worst = max(worst, abs(got - expect) / expect)
    assert worst < 1e-5, f"worst relative error {worst:.3e}"


def test_orthogonal_to_unitary_conjugation():
    rng = np.random.default_rng(55)
    paulis = [operators.sigma_x, operators.sigma_y, operators.sigma_z]
    for _ in range(15):
        # random proper rotation via QR sign fix
        q, r = np.linalg.qr(rng.normal(size=(3, 3)))
        q = q @ np.diag(np.sign(np.diag(r)))
        if np.linalg.det(q) < 0:
            q[:, 0] *= -1.0
        u = oracles.orthogonal_to_unitary(q)
        assert np.allclose(u @ u.conj().T, np.eye(2), atol=1e-10)
        for j in range(3):
            rotated = sum(q[i, j] * paulis[i] for i in range(3))
            assert np.allclose(u @ paulis[j] @ u.conj().T, rotated, atol=1e-9)


def test_fit_separable_model_reproduces_and_is_ppt():
    witness = oracles.fit_separable_model(np.diag([0.5, 0.3]))
    assert witness.reproduction_error <= 1e-9
    assert operators.ppt_check(witness.state, (2, 2))[0]
    target = np.asarray(witness.data)
    assert np.allclose(target[1:, 1:], np.diag([0.5, 0.3]), atol=1e-12)
    assert np.allclose(target[0, 1:], 0.0) and np.allclose(target[1:, 0], 0.0)


def test_fit_separable_model_handles_signs_and_rotations():
    rng = np.random.default_rng(77)
    for _ in range(10):
        s1 = rng.uniform(0.0, 1.0)
        s2 = rng.uniform(0.0, min(s1, 1.0 - s1))
        angles = rng.uniform(0.0, 2.0 * np.pi, size=2)
        rot = lambda t: np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]])  # noqa: E731
        block = rot(angles[0]) @ np.diag([s1, -s2]) @ rot(angles[1]).T
        witness = oracles.fit_separable_model(block)
        assert witness.reproduction_error <= 1e-9
        assert operators.ppt_check(witness.state, (2, 2))[0]


def test_fit_separable_model_refuses_entangled_targets():
    with pytest.raises(ValueError):
        oracles.fit_separable_model(np.diag([0.7, 0.4]))  # sum 1.1 > 1


def test_separable_witness_rejects_tampered_data():
    witness = oracles.fit_separable_model(np.diag([0.4, 0.2]))
    bad = np.array(witness.data)
    bad[1, 1] += 0.2
    with pytest.raises(ValueError):
        oracles.SeparableWitness(
            state=witness.state,
            measurements_a=witness.measurements_a,
            measurements_b=witness.measurements_b,
            data=bad,
            reproduction_error=0.0,
        )


def test_random_separable_state_is_ppt():
    for seed in range(12):
        rho = oracles.random_separable_state(seed, d=2, k=1 + seed % 4)
        assert abs(np.trace(rho.mat) - 1.0) < 1e-12
        assert operators.ppt_check(rho, (2, 2))[0]


def test_random_scenario_family_respects_kind():
    rng = np.random.default_rng(999)
    for kind in ("sharp-orthogonal", "unsharp-orthogonal"):
        fam = oracles.random_scenario_family(rng, kind)
        a1, a2 = fam[0].mat, fam[1].mat
        # orthogonal directions: anticommutator of traceless parts vanishes
        t1 = a1 - np.trace(a1) / 2.0 * np.eye(2)
        t2 = a2 - np.trace(a2) / 2.0 * np.eye(2)
        assert np.allclose(t1 @ t2 + t2 @ t1, 0.0, atol=1e-10)
    fam = oracles.random_scenario_family(rng, "sharp-nonorthogonal")
    for ob in fam:
        assert np.allclose(ob.mat @ ob.mat, np.eye(2), atol=1e-10)


def test_threshold_bisection_werner_ccnr():
    build = lambda p: werner_data_matrix(p, "xz")  # noqa: E731
    crit = lambda D: criteria.ccnr_corollary(D.mat)  # noqa: E731
    thr = oracles.threshold_bisection(build, crit, 0.0, 1.0, tol=1e-6)
    assert abs(thr - 0.5) < 2e-6


def test_threshold_bisection_rejects_unordered_endpoints():
    build = lambda p: werner_data_matrix(p, "xz")  # noqa: E731
    crit = lambda D: criteria.ccnr_corollary(D.mat)  # noqa: E731
    with pytest.raises(ValueError):
        oracles.threshold_bisection(build, crit, 0.8, 1.0, tol=1e-6)  # no flip inside
