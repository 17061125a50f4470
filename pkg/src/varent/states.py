"""Bipartite density matrices: the state families studied and random samplers for tests."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimMismatch, ParamOutOfRange
from .numkernel import as_cmat, hermiticity_error, partial_trace

TRACE_TOL = 1e-10
PSD_TOL = 1e-10


@dataclass(frozen=True)
class DensityMatrix:
    """A validated state on ``A ⊗ B`` with ``dims = (dim_a, dim_b)``."""

    mat: np.ndarray
    dims: tuple[int, int]

    def __post_init__(self):
        mat = as_cmat(self.mat)
        dim_a, dim_b = (int(d) for d in self.dims)
        if mat.shape != (dim_a * dim_b, dim_a * dim_b):
            raise DimMismatch(f"matrix {mat.shape} does not match dims ({dim_a}, {dim_b})")
        if hermiticity_error(mat) > 1e-12:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density matrix has trace {tr}")
        # validation only; the reference spectra come from numkernel.eig_hermitian
        lam = np.linalg.eigvalsh(0.5 * (mat + mat.conj().T))[0]
        if lam < -PSD_TOL:
            raise ValueError(f"density matrix has negative eigenvalue {lam}")
        mat = 0.5 * (mat + mat.conj().T)
        mat.setflags(write=False)
        object.__setattr__(self, "mat", mat)
        object.__setattr__(self, "dims", (dim_a, dim_b))

    @property
    def dim(self) -> int:
        return self.dims[0] * self.dims[1]

    @property
    def dim_a(self) -> int:
        return self.dims[0]

    @property
    def dim_b(self) -> int:
        return self.dims[1]

    def marginal(self, keep: str) -> np.ndarray:
        return partial_trace(self.mat, *self.dims, keep=keep)

    def purity(self) -> float:
        return float(np.real(np.trace(self.mat @ self.mat)))


def _check_unit_interval(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise ParamOutOfRange(f"{name} must lie in [0, 1], got {value}")
    return value


def max_entangled(d: int) -> DensityMatrix:
    """``(1/sqrt(d)) sum_i |ii>`` on ``C^d ⊗ C^d``."""
    v = np.zeros(d * d, dtype=np.complex128)
    v[np.arange(d) * (d + 1)] = 1.0 / np.sqrt(d)
    return DensityMatrix(np.outer(v, v.conj()), (d, d))


def bell() -> DensityMatrix:
    return max_entangled(2)


def mes(n: int) -> DensityMatrix:
    """Maximally entangled state with ``n`` qubits on each side."""
    if n < 1:
        raise ParamOutOfRange(f"need at least one qubit per side, got {n}")
    return max_entangled(2**n)


def isotropic_dim(d: int, p: float) -> DensityMatrix:
    p = _check_unit_interval("p", p)
    phi = max_entangled(d).mat
    return DensityMatrix(p * phi + (1.0 - p) * np.eye(d * d) / (d * d), (d, d))


def isotropic(n: int, p: float) -> DensityMatrix:
    """``p Phi + (1 - p) I / 4**n`` with ``n`` qubits per side."""
    if n < 1:
        raise ParamOutOfRange(f"need at least one qubit per side, got {n}")
    return isotropic_dim(2**n, p)


def breuer_literal(lam: float) -> DensityMatrix:
    """The printed 4x4 Breuer-family matrix, read as a qubit ⊗ qubit state.

    Its spectrum is ``{(1 - lam)/3 (three times), lam}``.
    """
    lam = _check_unit_interval("lambda", lam)
    diag_outer = (1.0 - lam) / 3.0
    diag_inner = (1.0 + 2.0 * lam) / 6.0
    coupling = (1.0 - 4.0 * lam) / 6.0
    m = np.array(
        [
            [diag_outer, 0, 0, 0],
            [0, diag_inner, coupling, 0],
            [0, coupling, diag_inner, 0],
            [0, 0, 0, diag_outer],
        ],
        dtype=np.complex128,
    )
    return DensityMatrix(m, (2, 2))


def _ginibre_state(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_density(d: int, seed=None, dims: tuple[int, int] | None = None) -> DensityMatrix:
    """Full-rank Ginibre sample ``G G^dagger / tr``; ``dims`` defaults to ``(1, d)``."""
    if d < 2:
        raise ParamOutOfRange(f"dimension must be at least 2, got {d}")
    rng = np.random.default_rng(seed)
    if dims is None:
        dims = (1, d)
    return DensityMatrix(_ginibre_state(d, rng), dims)


def random_product(dim_a: int, dim_b: int, seed=None) -> DensityMatrix:
    """``rho_A ⊗ rho_B`` with independent Ginibre factors, hence separable."""
    rng = np.random.default_rng(seed)
    rho_a = _ginibre_state(dim_a, rng)
    rho_b = _ginibre_state(dim_b, rng)
    return DensityMatrix(np.kron(rho_a, rho_b), (dim_a, dim_b))


def random_separable(dim_a: int, dim_b: int, terms: int = 4, seed=None) -> DensityMatrix:
    """Convex mixture of random product states."""
    rng = np.random.default_rng(seed)
    weights = rng.dirichlet(np.ones(terms))
    mat = sum(w * np.kron(_ginibre_state(dim_a, rng), _ginibre_state(dim_b, rng)) for w in weights)
    return DensityMatrix(mat, (dim_a, dim_b))


# ---------------------------------------------------------------------------
# file format: {"dims": [dA, dB], "entries": [[re, im], ...]} row-major


def state_to_json(rho: DensityMatrix) -> dict:
    flat = rho.mat.reshape(-1)
    return {
        "dims": list(rho.dims),
        "entries": [[float(z.real), float(z.imag)] for z in flat],
    }


def state_from_json(obj: dict) -> DensityMatrix:
    try:
        dim_a, dim_b = (int(d) for d in obj["dims"])
        entries = np.asarray(obj["entries"], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValueError(f"malformed state file: {exc}") from exc
    n = dim_a * dim_b
    if entries.shape != (n * n, 2):
        raise DimMismatch(f"expected {n * n} [re, im] pairs for dims ({dim_a}, {dim_b}), got shape {entries.shape}")
    mat = (entries[:, 0] + 1j * entries[:, 1]).reshape(n, n)
    return DensityMatrix(mat, (dim_a, dim_b))


def save_state(rho: DensityMatrix, path) -> None:
    Path(path).write_text(json.dumps(state_to_json(rho)))


def load_state(path) -> DensityMatrix:
    return state_from_json(json.loads(Path(path).read_text()))
