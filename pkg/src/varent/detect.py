"""Variational entanglement detection and log-negativity estimation.

Four drivers share one pattern: build a loss over ansatz parameters, minimise
it, and read a verdict or an estimate off the best value reached.

* ``ved_deterministic`` sums ``r_O <psi|O(rho)|psi>`` over every channel term.
* ``ved_probabilistic`` replaces the sum by ``M`` draws from ``|r_O| / gamma``,
  with ``M`` chosen by Hoeffding's inequality.
* ``ved_reduction_direct`` evaluates the reduction criterion as a difference of
  two swap-test overlaps, independent of the size of B.
* ``vlne`` maximises the ancilla-zero probability of ``U (rho^{T_B} ⊗ |0><0|) U^dagger``
  through the Pauli decomposition of the transpose.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from . import posmaps
from .circuitsim import (
    FIG2_INIT,
    Ansatz,
    HypersphericalAnsatz,
    ShotPolicy,
    ancilla_zero_probabilities,
    ansatz_layered,
    expectation_batch,
)
from .errors import DimMismatch, ParamOutOfRange
from .numkernel import partial_trace
from .optimize import OptimizerConfig, finite_difference_grad, minimize, param_shift_grad
from .posmaps import QuasiDecomposition
from .states import DensityMatrix

ENTANGLED = "Entangled"
INCONCLUSIVE = "Inconclusive"

DEFAULT_DELTA_EXACT = 0.05
DEFAULT_DELTA_SHOTS = 0.1
DEFAULT_MAX_ITERS = 200


def _row_fsum(weighted: np.ndarray) -> np.ndarray:
    # compensated summation keeps the loss independent of term order
    return np.array([math.fsum(row) for row in np.atleast_2d(weighted)])


class _Objective:
    """Loss over ansatz parameters with batched evaluation and a matching gradient.

    Shared parameters are handled by simulating an untied copy of the circuit
    and summing the shift-rule terms of every occurrence.
    """

    def __init__(self, ansatz, policy: ShotPolicy):
        self.ansatz = ansatz
        self.policy = policy
        self.calls = 0
        self._index = None
        self._sim = ansatz
        if getattr(ansatz, "has_shared_params", False):
            self._sim, self._index = ansatz.untie()

    @property
    def param_count(self) -> int:
        return self.ansatz.param_count

    def _rng(self, always: bool = False) -> np.random.Generator | None:
        if self.policy.exact and not always:
            return None
        rng = self.policy.generator(self.calls)
        self.calls += 1
        return rng

    def _evaluate(self, sim_alphas: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _expand(self, alphas: np.ndarray) -> np.ndarray:
        return alphas if self._index is None else alphas[..., self._index]

    def batch(self, alphas) -> np.ndarray:
        return self._evaluate(self._expand(np.atleast_2d(np.asarray(alphas, dtype=float))))

    def __call__(self, alpha) -> float:
        return float(self.batch(np.asarray(alpha, dtype=float)[None, :])[0])

    def gradient(self, alpha) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)
        if not getattr(self.ansatz, "supports_param_shift", False):
            return finite_difference_grad(self, alpha, h=1e-6)
        if self._index is None:
            return param_shift_grad(self, alpha)
        untied = _UntiedView(self)
        g = param_shift_grad(untied, alpha[self._index])
        return np.bincount(self._index, weights=g, minlength=alpha.size)


class _UntiedView:
    def __init__(self, objective: _Objective):
        self._obj = objective

    def batch(self, sim_alphas) -> np.ndarray:
        return self._obj._evaluate(np.atleast_2d(sim_alphas))

    def __call__(self, sim_alpha) -> float:
        return float(self.batch(np.asarray(sim_alpha)[None, :])[0])


def _check_ansatz(ansatz, rho: DensityMatrix) -> None:
    if ansatz.prepare_batch(np.zeros((1, ansatz.param_count))).shape[-1] != rho.dim:
        raise DimMismatch(f"ansatz prepares {getattr(ansatz, 'dim', '?')}-dim states, state has dim {rho.dim}")


class DecompositionLoss(_Objective):
    """``L(alpha) = sum_O r_O <psi(alpha)| O(rho) |psi(alpha)>``.

    Each overlap is what the two-register circuit reports as the frequency of
    the all-zeros outcome; in shot mode every overlap gets its own binomial draw.
    """

    def __init__(self, decomp: QuasiDecomposition, rho: DensityMatrix, ansatz, policy: ShotPolicy = ShotPolicy()):
        super().__init__(ansatz, policy)
        if rho.dim_b != decomp.dim_b:
            raise DimMismatch(f"state has dim_b={rho.dim_b}, map {decomp.label} acts on {decomp.dim_b}")
        _check_ansatz(ansatz, rho)
        self.decomp = decomp
        self.rho = rho
        self.coeffs = decomp.coeffs

    def exact_overlaps(self, sim_alphas: np.ndarray) -> np.ndarray:
        """``(B, T)`` matrix of ``<psi_b| O_t(rho) |psi_b>``."""
        psis = self._sim.prepare_batch(sim_alphas)
        out = np.empty((psis.shape[0], len(self.decomp)))
        for t, term in enumerate(self.decomp.terms):
            out[:, t] = expectation_batch(term.pull_back(psis, self.rho.dim_a), self.rho.mat)
        return out

    def _evaluate(self, sim_alphas):
        if not self.decomp.terms:
            return np.zeros(sim_alphas.shape[0])
        overlaps = self.policy.sample_frequency(self.exact_overlaps(sim_alphas), self._rng())
        return _row_fsum(overlaps * self.coeffs)


class SampledLoss(DecompositionLoss):
    """``L'(alpha) = (1/M) sum_m gamma sgn(r_m) <psi| O_m(rho) |psi>`` with ``O_m ~ |r| / gamma``.

    Draws are grouped by term: a term drawn ``c`` times contributes ``c`` copies
    of its exact overlap, or in shot mode a pooled ``Binomial(c * shots, v)``
    count, which has the same distribution as ``c`` separate circuit runs.
    """

    def __init__(self, decomp, rho, ansatz, samples: int, policy: ShotPolicy = ShotPolicy()):
        super().__init__(decomp, rho, ansatz, policy)
        if samples < 1:
            raise ParamOutOfRange(f"need at least one sample, got {samples}")
        self.samples = int(samples)
        self.gamma = posmaps.gamma(decomp)
        self.probs = posmaps.sampling_dist(decomp)
        self.signs = np.sign(self.coeffs)

    def _evaluate(self, sim_alphas):
        rng = self._rng(always=True)
        exact = self.exact_overlaps(sim_alphas)
        counts = rng.multinomial(self.samples, self.probs, size=exact.shape[0])
        if self.policy.exact:
            totals = counts * exact
        else:
            totals = self.policy.sample_frequency(exact, rng, repeat=counts)
        return self.gamma * _row_fsum(totals * self.signs) / self.samples


class DirectReductionLoss(_Objective):
    """``tr[psi_A rho_A] - tr[psi rho]``, the reduction criterion on B as two swap tests.

    Equals ``<psi| (rho_A ⊗ I_B - rho) |psi>``, the reduction-map loss, for any
    number of qubits on B.
    """

    def __init__(self, rho: DensityMatrix, ansatz, policy: ShotPolicy = ShotPolicy()):
        super().__init__(ansatz, policy)
        _check_ansatz(ansatz, rho)
        self.rho = rho
        self._marginal_op = np.kron(partial_trace(rho.mat, *rho.dims, keep="A"), np.eye(rho.dim_b))

    def _evaluate(self, sim_alphas):
        psis = self._sim.prepare_batch(sim_alphas)
        c1 = expectation_batch(psis, self._marginal_op)
        c2 = expectation_batch(psis, self.rho.mat)
        if not self.policy.exact:
            rng = self._rng()
            c1 = 2.0 * self.policy.sample_frequency((1.0 + c1) / 2.0, rng) - 1.0
            c2 = 2.0 * self.policy.sample_frequency((1.0 + c2) / 2.0, rng) - 1.0
        return c1 - c2


class NegativityLoss(_Objective):
    """``L1(alpha) = - sum_q t_q o_q(alpha)`` over the transpose decomposition on B.

    ``o_q`` is the ancilla-zero probability after ``U_ABR(alpha)`` acts on
    ``P_q rho P_q ⊗ |0><0|``; for one qubit per side this is
    ``-(o_0 + o_1 - o_2 + o_3) / 2``.
    """

    def __init__(self, rho: DensityMatrix, ansatz: Ansatz, policy: ShotPolicy = ShotPolicy()):
        super().__init__(ansatz, policy)
        n_b = int(round(math.log2(rho.dim_b)))
        if 2**n_b != rho.dim_b:
            raise DimMismatch(f"B side must be qubits, got dim_b={rho.dim_b}")
        if ansatz.dim != 2 * rho.dim:
            raise DimMismatch(f"ansatz on {ansatz.dim} dims, need {2 * rho.dim} (AB plus one ancilla)")
        self.rho = rho
        self.decomp = posmaps.transpose_decomposition(n_b)
        self.coeffs = self.decomp.coeffs
        self.variants = np.stack([t.channel(rho.mat, rho.dim_a) for t in self.decomp.terms])

    def _evaluate(self, sim_alphas):
        probs = ancilla_zero_probabilities(self._sim, sim_alphas, self.variants)
        probs = self.policy.sample_frequency(probs, self._rng())
        return -_row_fsum(probs * self.coeffs)


# ---------------------------------------------------------------------------
# reports


@dataclass
class DetectionReport:
    verdict: str
    final_loss: float
    loss_trajectory: list[float]
    iterations: int
    delta: float
    gamma: float
    map_label: str
    mode: str
    seed: int
    shots: int
    initial_loss: float
    alpha: list[float]
    stopped_early: bool
    epsilon: Optional[float] = None
    budget: Optional[int] = None
    confidence_floor: Optional[float] = None

    @property
    def entangled(self) -> bool:
        return self.verdict == ENTANGLED

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class NegativityReport:
    L1: float
    beta: float
    E_N: float
    trajectory: list[float]
    seed: int
    shots: int
    alpha: list[float] = field(default_factory=list)
    initial_loss: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


# ---------------------------------------------------------------------------
# drivers


def default_ansatz(dim: int):
    """Layered circuit on ``log2(dim)`` qubits, or a direct state parameterisation otherwise."""
    width = int(round(math.log2(dim))) if dim > 0 else 0
    if width >= 2 and 2**width == dim:
        return ansatz_layered(width, max(2, width))
    return HypersphericalAnsatz(dim)


def initial_parameters(ansatz, seed: int) -> np.ndarray:
    if getattr(ansatz, "name", "") == "fig2":
        return np.array(FIG2_INIT)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x1A17]))
    return rng.uniform(0.0, 2.0 * np.pi, ansatz.param_count)


def _policy(policy: ShotPolicy | None, seed: int) -> ShotPolicy:
    # without an explicit policy the run seed also drives measurement noise
    return ShotPolicy(0, seed) if policy is None else policy


def _optimizer(optimizer, max_iters, threshold) -> OptimizerConfig:
    cfg = optimizer or OptimizerConfig()
    changes = {"early_stop_threshold": threshold}
    if max_iters is not None:
        changes["max_iters"] = int(max_iters)
    return cfg.with_(**changes)


def _run(loss: _Objective, ansatz, cfg, alpha0, seed, callback):
    alpha0 = initial_parameters(ansatz, seed) if alpha0 is None else np.asarray(alpha0, dtype=float)
    return minimize(loss, alpha0, cfg, callback=callback)


def _detection_report(res, *, delta, decomp_label, gamma_value, mode, seed, policy, **extra) -> DetectionReport:
    final = res.best_loss
    return DetectionReport(
        verdict=ENTANGLED if final < -delta else INCONCLUSIVE,
        final_loss=final,
        loss_trajectory=list(res.trajectory),
        iterations=res.iterations,
        delta=delta,
        gamma=gamma_value,
        map_label=decomp_label,
        mode=mode,
        seed=int(seed),
        shots=policy.shots,
        initial_loss=res.initial_loss,
        alpha=[float(a) for a in res.alpha],
        stopped_early=res.stopped_early,
        **extra,
    )


def loss_deterministic(alpha, decomp: QuasiDecomposition, rho: DensityMatrix, policy: ShotPolicy = ShotPolicy(), ansatz=None) -> float:
    ansatz = ansatz or default_ansatz(rho.dim)
    return DecompositionLoss(decomp, rho, ansatz, policy)(alpha)


def ved_deterministic(rho: DensityMatrix, decomp: QuasiDecomposition, ansatz=None, optimizer: OptimizerConfig | None = None,
                      delta: float = DEFAULT_DELTA_EXACT, max_iters: int | None = None, policy: ShotPolicy | None = None,
                      alpha0=None, seed: int = 0, early_stop: bool = True,
                      callback: Callable[[int, float], None] | None = None) -> DetectionReport:
    """Minimise the full decomposition loss; "Entangled" once it drops below ``-delta``."""
    if delta <= 0:
        raise ParamOutOfRange(f"delta must be positive, got {delta}")
    ansatz = ansatz or default_ansatz(rho.dim)
    policy = _policy(policy, seed)
    loss = DecompositionLoss(decomp, rho, ansatz, policy)
    cfg = _optimizer(optimizer, max_iters, -delta if early_stop else None)
    res = _run(loss, ansatz, cfg, alpha0, seed, callback)
    return _detection_report(res, delta=delta, decomp_label=decomp.label, gamma_value=decomp.total_weight,
                             mode="deterministic", seed=seed, policy=policy)


def sample_budget(gamma: float, delta: float, epsilon: float) -> int:
    """``M = ceil(2 gamma**2 log2(2/epsilon) / delta**2)``."""
    if gamma <= 0 or delta <= 0:
        raise ParamOutOfRange(f"gamma and delta must be positive, got gamma={gamma}, delta={delta}")
    if not 0 < epsilon <= 2:
        raise ParamOutOfRange(f"epsilon must lie in (0, 2], got {epsilon}")
    raw = 2.0 * gamma**2 * math.log2(2.0 / epsilon) / delta**2
    return int(math.ceil(round(raw, 9)))


def loss_sampled(alpha, decomp: QuasiDecomposition, rho: DensityMatrix, samples: int, policy: ShotPolicy = ShotPolicy(),
                 ansatz=None) -> float:
    ansatz = ansatz or default_ansatz(rho.dim)
    return SampledLoss(decomp, rho, ansatz, samples, policy)(alpha)


def ved_probabilistic(rho: DensityMatrix, decomp: QuasiDecomposition, ansatz=None, optimizer: OptimizerConfig | None = None,
                      delta: float = DEFAULT_DELTA_SHOTS, epsilon: float = 0.05, max_iters: int | None = None,
                      policy: ShotPolicy | None = None, alpha0=None, seed: int = 0, early_stop: bool = True,
                      callback: Callable[[int, float], None] | None = None) -> DetectionReport:
    """Detection with the sampled loss; fresh channel draws at every evaluation.

    If it reports "Entangled", the state is entangled with probability at
    least ``1 - K epsilon`` where ``K`` is the number of iterations run.
    """
    if delta <= 0:
        raise ParamOutOfRange(f"delta must be positive, got {delta}")
    ansatz = ansatz or default_ansatz(rho.dim)
    policy = _policy(policy, seed)
    g = posmaps.gamma(decomp)
    budget = sample_budget(g, delta, epsilon)
    loss = SampledLoss(decomp, rho, ansatz, max(budget, 1), policy)
    cfg = _optimizer(optimizer, max_iters, -delta if early_stop else None)
    res = _run(loss, ansatz, cfg, alpha0, seed, callback)
    return _detection_report(res, delta=delta, decomp_label=decomp.label, gamma_value=g, mode="probabilistic",
                             seed=seed, policy=policy, epsilon=epsilon, budget=budget,
                             confidence_floor=max(0.0, 1.0 - res.iterations * epsilon))


def ved_reduction_direct(rho: DensityMatrix, ansatz=None, optimizer: OptimizerConfig | None = None,
                         delta: float = DEFAULT_DELTA_EXACT, policy: ShotPolicy | None = None, max_iters: int | None = None,
                         alpha0=None, seed: int = 0, early_stop: bool = True,
                         callback: Callable[[int, float], None] | None = None) -> DetectionReport:
    """Reduction-criterion detection with two overlaps per evaluation, whatever the size of B."""
    if delta <= 0:
        raise ParamOutOfRange(f"delta must be positive, got {delta}")
    ansatz = ansatz or default_ansatz(rho.dim)
    policy = _policy(policy, seed)
    loss = DirectReductionLoss(rho, ansatz, policy)
    cfg = _optimizer(optimizer, max_iters, -delta if early_stop else None)
    res = _run(loss, ansatz, cfg, alpha0, seed, callback)
    return _detection_report(res, delta=delta, decomp_label="reduction-direct", gamma_value=float("nan"),
                             mode="direct", seed=seed, policy=policy)


def default_vlne_ansatz(rho: DensityMatrix) -> Ansatz:
    width = int(round(math.log2(rho.dim))) + 1
    return ansatz_layered(width, 4)


def vlne(rho: DensityMatrix, ansatz_abr: Ansatz | None = None, optimizer: OptimizerConfig | None = None,
         policy: ShotPolicy | None = None, max_iters: int | None = None, alpha0=None, seed: int = 0,
         restarts: int = 1, callback: Callable[[int, float], None] | None = None) -> NegativityReport:
    """Estimate ``E_N = log2 ||rho^{T_B}||_1`` from below.

    Minimises ``L1``, then ``beta = 2 |L1| - 1`` estimates the trace norm. With
    ``restarts > 1`` extra random initialisations are tried and the lowest
    ``L1`` is kept.
    """
    ansatz_abr = ansatz_abr or default_vlne_ansatz(rho)
    policy = _policy(policy, seed)
    cfg = optimizer or OptimizerConfig(method="adam", learning_rate=0.1, max_iters=300)
    cfg = cfg.with_(early_stop_threshold=None, **({"max_iters": int(max_iters)} if max_iters is not None else {}))
    best = None
    for r in range(max(1, restarts)):
        loss = NegativityLoss(rho, ansatz_abr, ShotPolicy(policy.shots, policy.seed + r) if r else policy)
        start = alpha0 if (alpha0 is not None and r == 0) else initial_parameters(ansatz_abr, seed + r)
        res = minimize(loss, start, cfg, callback=callback if r == 0 else None)
        if best is None or res.best_loss < best.best_loss:
            best = res
    l1 = best.best_loss
    beta = 2.0 * abs(l1) - 1.0
    return NegativityReport(
        L1=l1,
        beta=beta,
        E_N=math.log2(beta) if beta > 0 else float("nan"),
        trajectory=list(best.trajectory),
        seed=int(seed),
        shots=policy.shots,
        alpha=[float(a) for a in best.alpha],
        initial_loss=best.initial_loss,
    )
