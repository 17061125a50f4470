"""Positive maps written as real-weighted sums of unitary-conjugation channels.

Every map here acts on the whole B side of a bipartite state. A term with
coefficient ``r`` and unitary ``U`` contributes ``r (I_A ⊗ U) rho (I_A ⊗ U)^dagger``;
qubit terms are Pauli strings and use the signed-permutation fast path, the
qutrit Choi terms carry explicit 3x3 matrices.

The sampling cost of a decomposition is ``gamma = sum |r|`` and the induced
distribution over terms is ``|r| / gamma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from . import pauli as pl
from .errors import ComplexCoefficient, DimMismatch, UnsupportedDim, ZeroMap
from .pauli import PauliString, PhasedPauli, WeylOperator

DROP_TOL = 1e-14
IMAG_TOL = 1e-12

MAP_NAMES = ("ppt", "reduction", "reduction-tp", "enhanced", "choi")

Unitary = Union[PhasedPauli, np.ndarray]


@dataclass(frozen=True)
class ChannelTerm:
    coeff: float
    unitary: Unitary
    label: str = ""

    def __post_init__(self):
        if not math.isfinite(self.coeff) or self.coeff == 0.0:
            raise ValueError(f"channel coefficient must be finite and nonzero, got {self.coeff}")
        if isinstance(self.unitary, PhasedPauli):
            if not self.label:
                object.__setattr__(self, "label", self.unitary.string.label)
        else:
            u = np.asarray(self.unitary, dtype=np.complex128)
            if u.ndim != 2 or u.shape[0] != u.shape[1]:
                raise DimMismatch(f"unitary must be square, got {u.shape}")
            if np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) > 1e-12:
                raise ValueError("channel operator is not unitary")
            u.setflags(write=False)
            object.__setattr__(self, "unitary", u)

    @property
    def is_pauli(self) -> bool:
        return isinstance(self.unitary, PhasedPauli)

    @property
    def dim_b(self) -> int:
        if self.is_pauli:
            return 2**self.unitary.string.n
        return self.unitary.shape[0]

    def matrix(self) -> np.ndarray:
        return self.unitary.matrix() if self.is_pauli else self.unitary

    def channel(self, rho, dim_a: int) -> np.ndarray:
        """``(I_A ⊗ U) rho (I_A ⊗ U)^dagger`` without the coefficient."""
        rho = np.asarray(rho, dtype=np.complex128)
        if rho.shape != (dim_a * self.dim_b,) * 2:
            raise DimMismatch(f"operator {rho.shape} vs channel on ({dim_a}, {self.dim_b})")
        if self.is_pauli:
            return pl.conjugate(self.unitary.string, rho, dim_a)
        full = np.kron(np.eye(dim_a), self.unitary)
        return full @ rho @ full.conj().T

    def pull_back(self, psi, dim_a: int) -> np.ndarray:
        """``(I_A ⊗ U)^dagger psi``, so that ``<psi|O(rho)|psi> = <phi|rho|phi>``.

        Works on a single vector or a stack of vectors along the last axis.
        """
        psi = np.asarray(psi)
        if self.is_pauli:
            # Pauli strings are Hermitian, the stored phase drops out of the channel
            return pl.apply_to_vector(self.unitary.string, psi, dim_a)
        d_b = self.dim_b
        lead = psi.shape[:-1]
        t = psi.reshape(*lead, dim_a, d_b)
        return np.einsum("kj,...ak->...aj", self.unitary.conj(), t).reshape(*lead, dim_a * d_b)


@dataclass(frozen=True)
class QuasiDecomposition:
    terms: tuple[ChannelTerm, ...]
    dim_b: int
    label: str
    note: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        for t in self.terms:
            if t.dim_b != self.dim_b:
                raise DimMismatch(f"term {t.label} acts on {t.dim_b} dims, decomposition on {self.dim_b}")

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([t.coeff for t in self.terms], dtype=float)

    @property
    def total_weight(self) -> float:
        """``sum |r|``; zero for an empty decomposition."""
        return math.fsum(abs(t.coeff) for t in self.terms)

    @property
    def coeff_sum(self) -> float:
        return math.fsum(t.coeff for t in self.terms)

    def coefficient_of(self, label: str) -> float:
        for t in self.terms:
            if t.label == label:
                return t.coeff
        return 0.0


def _pauli_decomposition(coeffs: dict[PauliString, complex], n: int, label: str, note: str = "") -> QuasiDecomposition:
    terms = []
    for string in sorted(coeffs):
        c = complex(coeffs[string])
        if abs(c.imag) > IMAG_TOL:
            raise ComplexCoefficient(f"{label}: coefficient of {string.label} is {c}")
        if abs(c.real) < DROP_TOL:
            continue
        terms.append(ChannelTerm(c.real, PhasedPauli(0, string)))
    return QuasiDecomposition(tuple(terms), 2**n, label, note)


def _check_n(n: int) -> None:
    if n < 1:
        raise UnsupportedDim(f"need at least one qubit on B, got n={n}")


def transpose_coefficients(n: int) -> dict[PauliString, complex]:
    """``T = (1/2**n) sum_q (-1)**#Y(q) P_q (.) P_q``, one qubit transpose per site."""
    scale = 1.0 / 2**n
    return {q: scale * (-1) ** q.y_count for q in pl.all_paulis(n)}


def reduction_coefficients(n: int) -> dict[PauliString, complex]:
    """``R(X) = tr[X] I - X`` through the Pauli twirl ``tr[X] I = (1/2**n) sum_q P_q X P_q``."""
    scale = 1.0 / 2**n
    coeffs = {q: scale for q in pl.all_paulis(n)}
    coeffs[PauliString.identity(n)] = scale - 1.0
    return coeffs


def transpose_decomposition(n: int) -> QuasiDecomposition:
    _check_n(n)
    return _pauli_decomposition(transpose_coefficients(n), n, "ppt")


def reduction_decomposition(n: int) -> QuasiDecomposition:
    _check_n(n)
    return _pauli_decomposition(reduction_coefficients(n), n, "reduction")


def reduction_tp_decomposition(n: int) -> QuasiDecomposition:
    """Reduction map divided by ``2**n - 1`` so that it preserves trace.

    Its sampling cost is ``(2**n + 2) / 2**n``.
    """
    _check_n(n)
    div = 2**n - 1
    coeffs = {q: c / div for q, c in reduction_coefficients(n).items()}
    return _pauli_decomposition(coeffs, n, "reduction-tp")


def antisymmetric_unitary(n: int) -> PhasedPauli:
    """``X ⊗ ... ⊗ X ⊗ iY`` (equal to ``antidiag(1, -1, ..., 1, -1)``)."""
    _check_n(n)
    return PhasedPauli(1, PauliString((1,) * (n - 1) + (2,)))


def enhanced_decomposition(n: int) -> QuasiDecomposition:
    """``K = R - U_a T(.) U_a^dagger`` regrouped into one Pauli term per string.

    ``U_a P_q = i**k P_q'`` so the conjugated transpose term lands on ``q'``
    with weight ``|i**k|**2``. The weight is computed in complex arithmetic and
    the regrouped coefficients must come out real. For ``n = 1`` every
    coefficient cancels and the decomposition is empty.
    """
    _check_n(n)
    u_a = antisymmetric_unitary(n)
    coeffs: dict[PauliString, complex] = dict(reduction_coefficients(n))
    for q, t in transpose_coefficients(n).items():
        prod = u_a * PhasedPauli(0, q)
        weight = prod.scalar * np.conj(prod.scalar)
        coeffs[prod.string] = coeffs.get(prod.string, 0.0) - t * weight
    return _pauli_decomposition(coeffs, n, "enhanced")


def choi_decomposition() -> QuasiDecomposition:
    """Choi map on a qutrit as six Weyl-conjugation channels (coefficients sum to 2)."""
    weighted = [
        (1 / 3, WeylOperator(2, 1)),
        (1 / 3, WeylOperator(2, 2)),
        (1 / 3, WeylOperator(2, 0)),
        (2 / 3, WeylOperator(0, 1)),
        (2 / 3, WeylOperator(0, 2)),
        (-1 / 3, WeylOperator(0, 0)),
    ]
    terms = tuple(ChannelTerm(c, pl.weyl_matrix(w), w.label) for c, w in weighted)
    return QuasiDecomposition(terms, 3, "choi", note="not trace-preserving: coefficients sum to 2")


def decomposition_by_name(name: str, n: int = 1) -> QuasiDecomposition:
    builders: dict[str, Callable[[], QuasiDecomposition]] = {
        "ppt": lambda: transpose_decomposition(n),
        "transpose": lambda: transpose_decomposition(n),
        "reduction": lambda: reduction_decomposition(n),
        "reduction-tp": lambda: reduction_tp_decomposition(n),
        "enhanced": lambda: enhanced_decomposition(n),
        "choi": choi_decomposition,
    }
    try:
        return builders[name]()
    except KeyError:
        raise ValueError(f"unknown map {name!r}; expected one of {', '.join(MAP_NAMES)}") from None


def _bipartite(rho, decomp: QuasiDecomposition, dim_a: int | None) -> tuple[np.ndarray, int]:
    if hasattr(rho, "mat"):
        if rho.dim_b != decomp.dim_b:
            raise DimMismatch(f"state has dim_b={rho.dim_b}, map {decomp.label} acts on {decomp.dim_b}")
        return rho.mat, rho.dim_a
    rho = np.asarray(rho, dtype=np.complex128)
    if dim_a is None:
        if rho.shape[0] % decomp.dim_b:
            raise DimMismatch(f"operator of size {rho.shape[0]} is not a multiple of dim_b={decomp.dim_b}")
        dim_a = rho.shape[0] // decomp.dim_b
    if rho.shape != (dim_a * decomp.dim_b,) * 2:
        raise DimMismatch(f"operator {rho.shape} vs dims ({dim_a}, {decomp.dim_b})")
    return rho, dim_a


def apply_map(decomp: QuasiDecomposition, rho, dim_a: int | None = None) -> np.ndarray:
    """``sum_O r_O O(rho)`` on the B side; accepts a DensityMatrix or a raw matrix."""
    mat, dim_a = _bipartite(rho, decomp, dim_a)
    if not decomp.terms:
        return np.zeros_like(mat)
    parts = np.stack([t.coeff * t.channel(mat, dim_a) for t in decomp.terms])
    out = np.sum(parts, axis=0)
    return 0.5 * (out + out.conj().T)


def gamma(decomp: QuasiDecomposition) -> float:
    g = decomp.total_weight
    if g == 0.0:
        raise ZeroMap(f"decomposition {decomp.label} has no nonzero terms")
    return g


def sampling_dist(decomp: QuasiDecomposition) -> np.ndarray:
    g = gamma(decomp)
    return np.abs(decomp.coeffs) / g
