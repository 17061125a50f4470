import numpy as np
import pytest

from varent import circuitsim as cs
from varent import posmaps as pm
from varent import states
from varent.errors import DimMismatch, ParamCountMismatch

RY = lambda t: np.array([[np.cos(t / 2), -np.sin(t / 2)], [np.sin(t / 2), np.cos(t / 2)]])  # noqa: E731
RZ = lambda t: np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])  # noqa: E731
CNOT01 = np.eye(4)[[0, 1, 3, 2]]


def test_fig2_matches_dense_circuit():
    a = np.array(cs.FIG2_INIT)
    u = CNOT01 @ np.kron(RZ(a[2]), np.eye(2)) @ np.kron(RY(a[0]), RY(a[1]))
    np.testing.assert_allclose(cs.ansatz_fig2().unitary(a), u, atol=1e-14)
    np.testing.assert_allclose(cs.ansatz_fig2().prepare(a), u[:, 0], atol=1e-14)


def test_layered_param_count_and_unitarity(rng):
    an = cs.ansatz_layered(3, 2)
    assert an.param_count == 27
    u = an.unitary(rng.uniform(0, 2 * np.pi, 27))
    np.testing.assert_allclose(u.conj().T @ u, np.eye(8), atol=1e-13)


def test_cnot_ordering():
    an = cs.Ansatz(2, (cs.Gate("CNOT", (1, 0)),), 0)
    np.testing.assert_allclose(an.unitary(np.zeros(0)), np.eye(4)[[0, 3, 2, 1]])


def test_shared_parameters_untie():
    an = cs.Ansatz(1, (cs.Gate("RY", (0,), (0,)), cs.Gate("RY", (0,), (0,))), 1)
    assert an.has_shared_params
    untied, index = an.untie()
    assert untied.param_count == 2
    np.testing.assert_array_equal(index, [0, 0])
    np.testing.assert_allclose(an.prepare([0.4]), untied.prepare([0.4, 0.4]))


def test_parameter_count_checked():
    with pytest.raises(ParamCountMismatch):
        cs.ansatz_fig2().prepare(np.zeros(4))


def test_hyperspherical_is_normalised(rng):
    an = cs.HypersphericalAnsatz(9)
    assert an.param_count == 16
    psi = an.prepare_batch(rng.uniform(0, np.pi, (5, 16)))
    np.testing.assert_allclose(np.linalg.norm(psi, axis=1), 1.0)


def test_overlap_fig1_equals_channel_overlap(rng):
    rho = states.random_density(4, seed=1, dims=(2, 2))
    an = cs.ansatz_layered(2, 2)
    alpha = rng.uniform(0, 6, an.param_count)
    psi = an.prepare(alpha)
    for term in pm.transpose_decomposition(1).terms:
        want = np.vdot(psi, term.channel(rho.mat, 2) @ psi).real
        assert cs.overlap_fig1(an, alpha, term, rho) == pytest.approx(want, abs=1e-14)


def test_shot_noise_statistics():
    policy = cs.ShotPolicy(shots=1000, seed=3)
    draws = np.array([policy.sample_frequency(0.3, policy.generator(k)) for k in range(2000)])
    assert draws.mean() == pytest.approx(0.3, abs=0.003)
    assert draws.std() == pytest.approx(np.sqrt(0.3 * 0.7 / 1000), rel=0.1)
    np.testing.assert_array_equal(draws * 1000, np.round(draws * 1000))


def test_exact_policy_passes_through():
    assert cs.ShotPolicy().sample_frequency(0.123, None) == pytest.approx(0.123)
    with pytest.raises(ValueError):
        cs.ShotPolicy(shots=-1)


def test_swap_test_estimator():
    a = states.random_density(4, seed=4).mat
    b = states.random_density(4, seed=5).mat
    exact = np.trace(a @ b).real
    assert cs.overlap_swap(a, b) == pytest.approx(exact, abs=1e-14)
    policy = cs.ShotPolicy(200_000, 1)
    est = cs.overlap_swap(a, b, policy, policy.generator(0))
    assert est == pytest.approx(exact, abs=0.01)
    with pytest.raises(DimMismatch):
        cs.overlap_swap(a, np.eye(2) / 2)


def test_ancilla_probability_matches_dense(rng):
    an = cs.ansatz_layered(3, 2)
    alpha = rng.uniform(0, 6, an.param_count)
    rho = states.random_density(4, seed=8).mat
    u = an.unitary(alpha)
    zero = np.diag([1.0, 0.0])
    big = u @ np.kron(rho, zero) @ u.conj().T
    want = np.trace(np.kron(np.eye(4), zero) @ big).real
    assert cs.vlne_ancilla_prob(an, alpha, rho) == pytest.approx(want, abs=1e-14)
