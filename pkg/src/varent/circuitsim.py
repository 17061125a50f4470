"""Parameterised circuits and the three measurement primitives used by the detectors.

States are simulated exactly. A ``ShotPolicy`` with ``shots > 0`` replaces each
exact outcome probability ``v`` by ``k / shots`` with ``k ~ Binomial(shots, v)``;
there is no gate-level noise.

Circuits are evaluated in batches: ``prepare_batch`` takes a ``(B, P)`` array of
parameter vectors, which lets a full parameter-shift gradient run as a single
vectorised simulation.

Qubit ordering follows ``numkernel``: qubit 0 is the most significant bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import DimMismatch, ParamCountMismatch

ROTATIONS = ("RY", "RZ", "U3")
KINDS = ROTATIONS + ("CNOT",)

FIG2_INIT = (3.2292, 4.8579, 5.4691)


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    param_ids: tuple[int, ...] = ()

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "param_ids", tuple(int(p) for p in self.param_ids))
        if kind not in KINDS:
            raise ValueError(f"unknown gate kind {kind!r}")
        want_targets = 2 if kind == "CNOT" else 1
        want_params = {"RY": 1, "RZ": 1, "U3": 3, "CNOT": 0}[kind]
        if len(self.targets) != want_targets or len(set(self.targets)) != want_targets:
            raise ValueError(f"{kind} needs {want_targets} distinct targets, got {self.targets}")
        if len(self.param_ids) != want_params:
            raise ValueError(f"{kind} needs {want_params} parameters, got {self.param_ids}")


def _ry(theta: np.ndarray) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    out = np.empty(theta.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = c
    out[..., 0, 1] = -s
    out[..., 1, 0] = s
    out[..., 1, 1] = c
    return out


def _rz(theta: np.ndarray) -> np.ndarray:
    out = np.zeros(theta.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = np.exp(-0.5j * theta)
    out[..., 1, 1] = np.exp(0.5j * theta)
    return out


def _u3(theta: np.ndarray, phi: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """``Rz(phi) Ry(theta) Rz(lam)``."""
    return _rz(phi) @ _ry(theta) @ _rz(lam)


@dataclass(frozen=True)
class Ansatz:
    width: int
    gates: tuple[Gate, ...]
    param_count: int
    name: str = field(default="custom", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        if self.width < 1:
            raise ValueError("circuit width must be positive")
        for g in self.gates:
            if any(not 0 <= t < self.width for t in g.targets):
                raise ValueError(f"gate {g} acts outside a width-{self.width} circuit")
            if any(not 0 <= p < self.param_count for p in g.param_ids):
                raise ValueError(f"gate {g} references a parameter outside 0..{self.param_count - 1}")

    @property
    def dim(self) -> int:
        return 2**self.width

    supports_param_shift = True

    @cached_property
    def _cnot_perms(self) -> dict[tuple[int, int], np.ndarray]:
        idx = np.arange(self.dim)
        perms = {}
        for g in self.gates:
            if g.kind == "CNOT":
                c, t = g.targets
                cbit = 1 << (self.width - 1 - c)
                tbit = 1 << (self.width - 1 - t)
                perms[g.targets] = np.where(idx & cbit, idx ^ tbit, idx)
        return perms

    def occurrences(self) -> np.ndarray:
        """Parameter index of every rotation angle in gate order."""
        return np.array([p for g in self.gates for p in g.param_ids], dtype=int)

    @property
    def has_shared_params(self) -> bool:
        occ = self.occurrences()
        return len(np.unique(occ)) != len(occ)

    def untie(self) -> tuple["Ansatz", np.ndarray]:
        """Copy with one fresh parameter per occurrence, plus the occurrence -> parameter map."""
        gates, k = [], 0
        for g in self.gates:
            ids = tuple(range(k, k + len(g.param_ids)))
            k += len(ids)
            gates.append(Gate(g.kind, g.targets, ids))
        return Ansatz(self.width, tuple(gates), k, self.name + "-untied"), self.occurrences()

    def _check(self, alphas: np.ndarray) -> np.ndarray:
        alphas = np.asarray(alphas, dtype=float)
        if alphas.shape[-1] != self.param_count:
            raise ParamCountMismatch(f"expected {self.param_count} parameters, got {alphas.shape[-1]}")
        return alphas

    def evolve(self, alphas, columns) -> np.ndarray:
        """Apply ``U(alpha_b)`` to each column set.

        Args:
            alphas: ``(B, P)`` parameter vectors.
            columns: ``(K, dim)`` input states, shared by every batch entry.

        Returns:
            ``(B, K, dim)`` output states.
        """
        alphas = self._check(np.atleast_2d(alphas))
        batch = alphas.shape[0]
        columns = np.asarray(columns, dtype=np.complex128)
        k = columns.shape[0]
        state = np.broadcast_to(columns, (batch, k, self.dim)).copy()
        for g in self.gates:
            if g.kind == "CNOT":
                state = state[..., self._cnot_perms[g.targets]]
                continue
            ang = alphas[:, list(g.param_ids)]
            if g.kind == "RY":
                mats = _ry(ang[:, 0])
            elif g.kind == "RZ":
                mats = _rz(ang[:, 0])
            else:
                mats = _u3(ang[:, 0], ang[:, 1], ang[:, 2])
            q = g.targets[0]
            view = state.reshape(batch, k, 2**q, 2, 2 ** (self.width - q - 1))
            state = np.einsum("bij,bkljm->bklim", mats, view).reshape(batch, k, self.dim)
        return state

    def prepare_batch(self, alphas) -> np.ndarray:
        """``U(alpha_b) |0...0>`` for each row; shape ``(B, dim)``."""
        zero = np.zeros((1, self.dim), dtype=np.complex128)
        zero[0, 0] = 1.0
        return self.evolve(alphas, zero)[:, 0, :]

    def prepare(self, alpha) -> np.ndarray:
        return self.prepare_batch(np.asarray(alpha, dtype=float)[None, :])[0]

    def unitary(self, alpha) -> np.ndarray:
        """Dense ``U(alpha)``; column ``j`` is ``U |j>``."""
        cols = self.evolve(np.asarray(alpha, dtype=float)[None, :], np.eye(self.dim))[0]
        return cols.T


def ansatz_fig2() -> Ansatz:
    """Two-qubit circuit: ``Ry(a1) ⊗ Ry(a2)``, ``Rz(a3)`` on qubit 0, then CNOT 0 -> 1."""
    gates = (
        Gate("RY", (0,), (0,)),
        Gate("RY", (1,), (1,)),
        Gate("RZ", (0,), (2,)),
        Gate("CNOT", (0, 1)),
    )
    return Ansatz(2, gates, 3, "fig2")


def ansatz_layered(width: int, depth: int) -> Ansatz:
    """``depth`` blocks of [U3 on every qubit, CNOT ring i -> i+1], then a last U3 layer.

    Each U3 takes parameters in the order ``(theta, phi, lambda)``.
    """
    if width < 2 or depth < 1:
        raise ValueError(f"need width >= 2 and depth >= 1, got ({width}, {depth})")
    gates, k = [], 0

    def u3_layer():
        nonlocal k
        for q in range(width):
            gates.append(Gate("U3", (q,), (k, k + 1, k + 2)))
            k += 3

    for _ in range(depth):
        u3_layer()
        for q in range(width):
            gates.append(Gate("CNOT", (q, (q + 1) % width)))
    u3_layer()
    return Ansatz(width, tuple(gates), k, f"layered-w{width}-d{depth}")


@dataclass(frozen=True)
class HypersphericalAnsatz:
    """Unit vector in ``C^dim`` from ``2 (dim - 1)`` real angles.

    The first ``dim - 1`` angles fix the magnitudes on the real hypersphere,
    the remaining ``dim - 1`` are relative phases of components 1..dim-1.
    Used for qudit test states where no qubit circuit applies; it has no
    parameter-shift rule, so gradients fall back to finite differences.
    """

    dim: int
    name: str = "hyperspherical"

    supports_param_shift = False

    @property
    def param_count(self) -> int:
        return 2 * (self.dim - 1)

    def prepare_batch(self, alphas) -> np.ndarray:
        alphas = np.atleast_2d(np.asarray(alphas, dtype=float))
        if alphas.shape[-1] != self.param_count:
            raise ParamCountMismatch(f"expected {self.param_count} parameters, got {alphas.shape[-1]}")
        d = self.dim
        theta, phase = alphas[:, : d - 1], alphas[:, d - 1 :]
        b = alphas.shape[0]
        mag = np.ones((b, d))
        sin_prod = np.ones(b)
        for j in range(d - 1):
            mag[:, j] = sin_prod * np.cos(theta[:, j])
            sin_prod = sin_prod * np.sin(theta[:, j])
        mag[:, d - 1] = sin_prod
        phases = np.concatenate([np.zeros((b, 1)), phase], axis=1)
        return mag * np.exp(1j * phases)

    def prepare(self, alpha) -> np.ndarray:
        return self.prepare_batch(np.asarray(alpha, dtype=float)[None, :])[0]


# ---------------------------------------------------------------------------
# measurement


@dataclass(frozen=True)
class ShotPolicy:
    """``shots = 0`` means exact expectation values."""

    shots: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.shots < 0:
            raise ValueError(f"shots must be non-negative, got {self.shots}")

    @property
    def exact(self) -> bool:
        return self.shots == 0

    def generator(self, *key: int) -> np.random.Generator:
        """Independent stream for evaluation ``key``, derived from the run seed."""
        return np.random.default_rng(np.random.SeedSequence([int(self.seed) & (2**64 - 1), *key]))

    def sample_frequency(self, prob, rng: np.random.Generator | None, repeat=1):
        """Relative frequency of an outcome with probability ``prob`` (array-friendly).

        ``repeat`` multiplies the shot count, for pooled draws of the same circuit.
        """
        prob = np.clip(np.asarray(prob, dtype=float), 0.0, 1.0)
        if self.exact:
            return prob
        if rng is None:
            rng = self.generator(0)
        n = self.shots * np.asarray(repeat)
        return rng.binomial(n, prob) / self.shots


def _state_matrix(rho) -> tuple[np.ndarray, int]:
    if hasattr(rho, "mat"):
        return rho.mat, rho.dim_a
    return np.asarray(rho, dtype=np.complex128), None


def expectation_batch(psis: np.ndarray, mat: np.ndarray) -> np.ndarray:
    """``Re <psi_b| M |psi_b>`` for each row."""
    return np.real(np.einsum("bi,ij,bj->b", psis.conj(), mat, psis))


def overlap_fig1(ansatz, alpha, term, rho, policy: ShotPolicy = ShotPolicy(), rng=None, dim_a: int | None = None) -> float:
    """Estimate ``<psi(alpha)| O(rho) |psi(alpha)>`` as the frequency of outcome ``0...0``.

    The circuit feeds ``rho`` through the channel ``O`` and then ``U(alpha)^dagger``;
    the all-zeros probability is the overlap.
    """
    mat, da = _state_matrix(rho)
    if dim_a is None:
        dim_a = da if da is not None else mat.shape[0] // term.dim_b
    if mat.shape[0] != ansatz.dim or mat.shape[0] != dim_a * term.dim_b:
        raise DimMismatch(f"state of size {mat.shape[0]}, ansatz on {ansatz.dim}, channel on {dim_a}x{term.dim_b}")
    psi = ansatz.prepare(alpha)
    phi = term.pull_back(psi, dim_a)
    exact = float(np.real(np.vdot(phi, mat @ phi)))
    return float(policy.sample_frequency(exact, rng))


def overlap_swap(sigma, rho, policy: ShotPolicy = ShotPolicy(), rng=None) -> float:
    """Swap-test estimate of ``tr[sigma rho]``: ancilla reads 0 with probability ``(1 + tr)/2``."""
    sigma = np.asarray(getattr(sigma, "mat", sigma), dtype=np.complex128)
    rho = np.asarray(getattr(rho, "mat", rho), dtype=np.complex128)
    if sigma.shape != rho.shape:
        raise DimMismatch(f"swap test on {sigma.shape} and {rho.shape}")
    exact = float(np.real(np.sum(sigma * rho.T)))
    if policy.exact:
        return exact
    p0 = policy.sample_frequency((1.0 + exact) / 2.0, rng)
    return float(2.0 * p0 - 1.0)


def ancilla_blocks(ansatz: Ansatz, alphas) -> np.ndarray:
    """``W_b = <0_R| U(alpha_b) |0_R>`` with the ancilla as the last qubit; ``(B, h, h)``."""
    h = ansatz.dim // 2
    inputs = np.zeros((h, ansatz.dim), dtype=np.complex128)
    inputs[np.arange(h), 2 * np.arange(h)] = 1.0
    out = ansatz.evolve(alphas, inputs)  # (B, h_in, dim)
    return np.transpose(out[:, :, 0::2], (0, 2, 1))


def ancilla_zero_probabilities(ansatz: Ansatz, alphas, variants: np.ndarray) -> np.ndarray:
    """``tr[|0><0|_R U (rho_j ⊗ |0><0|_R) U^dagger]`` for every batch row and variant; ``(B, J)``."""
    w = ancilla_blocks(ansatz, alphas)
    return np.real(np.einsum("bij,njk,bik->bn", w, variants, w.conj()))


def vlne_ancilla_prob(ansatz_abr: Ansatz, alpha, rho_variant, policy: ShotPolicy = ShotPolicy(), rng=None) -> float:
    """Probability that the ancilla reads 0 after ``U_ABR(alpha)`` acts on ``rho ⊗ |0><0|``."""
    mat = np.asarray(getattr(rho_variant, "mat", rho_variant), dtype=np.complex128)
    if 2 * mat.shape[0] != ansatz_abr.dim:
        raise DimMismatch(f"state of size {mat.shape[0]} needs a {2 * mat.shape[0]}-dim ansatz, got {ansatz_abr.dim}")
    exact = ancilla_zero_probabilities(ansatz_abr, np.asarray(alpha, dtype=float)[None, :], mat[None])[0, 0]
    return float(policy.sample_frequency(exact, rng))
