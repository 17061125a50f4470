import numpy as np
import pytest

from varent import circuitsim as cs
from varent import detect, posmaps, states
from varent.errors import NonFiniteLoss
from varent.optimize import OptimizerConfig, finite_difference_grad, minimize, param_shift_grad


def test_shift_rule_on_cosine():
    loss = lambda a: float(np.cos(a[0]))  # noqa: E731
    assert param_shift_grad(loss, [0.0])[0] == pytest.approx(0.0, abs=1e-15)
    assert param_shift_grad(loss, [np.pi / 2])[0] == pytest.approx(-1.0, abs=1e-15)


def test_gd_on_quadratic_bowl():
    loss = lambda a: float((a[0] - 1.0) ** 2)  # noqa: E731
    grad = lambda a: 2 * (a - 1.0)  # noqa: E731
    res = minimize(loss, [0.0], OptimizerConfig("gd", 0.4, max_iters=50), grad=grad)
    assert abs(res.alpha[0] - 1.0) < 1e-3


def test_adam_on_quadratic_bowl():
    loss = lambda a: float(np.sum((a - 2.0) ** 2))  # noqa: E731
    res = minimize(loss, np.zeros(3), OptimizerConfig("adam", 0.1, max_iters=300), grad=lambda a: 2 * (a - 2.0))
    np.testing.assert_allclose(res.alpha, 2.0, atol=1e-2)


def test_max_iters_one_takes_one_step():
    res = minimize(lambda a: float(a[0] ** 2), [1.0], OptimizerConfig("gd", 0.1, max_iters=1), grad=lambda a: 2 * a)
    assert res.iterations == 1
    assert res.alpha[0] == pytest.approx(0.8)


def test_early_stop_on_bell():
    loss = detect.DecompositionLoss(posmaps.reduction_decomposition(1), states.bell(), cs.ansatz_fig2())
    res = minimize(loss, cs.FIG2_INIT, OptimizerConfig("gd", 0.5, early_stop_threshold=-0.05))
    assert res.stopped_early and res.iterations < 200
    assert res.best_loss < -0.05


def test_best_seen_is_kept():
    values = iter([1.0, 0.5, 2.0, 3.0])
    res = minimize(lambda a: next(values), [0.0], OptimizerConfig("gd", 0.1, max_iters=3), grad=lambda a: np.ones(1))
    assert res.best_loss == 0.5
    assert res.trajectory == [0.5, 2.0, 3.0]
    assert res.alpha[0] == pytest.approx(-0.1)


def test_non_finite_loss_raises():
    with pytest.raises(NonFiniteLoss):
        minimize(lambda a: float("nan"), [0.0])


def test_config_validation():
    assert OptimizerConfig("adam").learning_rate == 0.1
    assert OptimizerConfig().learning_rate == 0.5
    for bad in (dict(method="lbfgs"), dict(learning_rate=0.0), dict(max_iters=0)):
        with pytest.raises(ValueError):
            OptimizerConfig(**bad)


def test_runs_are_deterministic():
    loss = detect.DecompositionLoss(posmaps.transpose_decomposition(1), states.isotropic(1, 0.8),
                                    cs.ansatz_layered(2, 2))
    a0 = np.linspace(0.1, 2.0, loss.param_count)
    r1 = minimize(loss, a0, OptimizerConfig("adam", max_iters=20))
    r2 = minimize(loss, a0, OptimizerConfig("adam", max_iters=20))
    assert r1.trajectory == r2.trajectory


def test_shared_parameter_gradient_sums_occurrences():
    an = cs.Ansatz(2, (cs.Gate("RY", (0,), (0,)), cs.Gate("RY", (1,), (0,)), cs.Gate("CNOT", (0, 1)),
                       cs.Gate("RY", (0,), (1,))), 2)
    loss = detect.DecompositionLoss(posmaps.reduction_decomposition(1), states.bell(), an)
    a = np.array([0.7, -1.2])
    np.testing.assert_allclose(loss.gradient(a), finite_difference_grad(loss, a), atol=1e-8)
