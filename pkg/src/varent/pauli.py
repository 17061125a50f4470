"""Pauli strings with exact phase tracking, Pauli channels, and qutrit Weyl operators.

A Pauli string on ``n`` qubits is stored as its quaternary sequence
``q_1 ... q_n`` with ``0, 1, 2, 3`` standing for ``I, X, Y, Z``. Products carry
their phase as an integer power of ``i`` so no floating-point phase ever
accumulates.

Channels ``rho -> P rho P^dagger`` are applied without forming ``P``: every
Pauli string maps a basis state ``|x>`` to ``c(x) |x XOR m>`` for a flip mask
``m`` and a phase vector ``c``, so conjugation is a signed index permutation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator

import numpy as np

from .errors import DimMismatch, LengthMismatch, UnsupportedDim

_LETTERS = "IXYZ"

SIGMA = (
    np.array([[1, 0], [0, 1]], dtype=np.complex128),
    np.array([[0, 1], [1, 0]], dtype=np.complex128),
    np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    np.array([[1, 0], [0, -1]], dtype=np.complex128),
)

# sigma_a sigma_b = i**_PHASE[a][b] * sigma_{_PRODUCT[a][b]}
_PRODUCT = (
    (0, 1, 2, 3),
    (1, 0, 3, 2),
    (2, 3, 0, 1),
    (3, 2, 1, 0),
)
_PHASE = (
    (0, 0, 0, 0),
    (0, 0, 1, 3),
    (0, 3, 0, 1),
    (0, 1, 3, 0),
)

_I_POWERS = (1, 1j, -1, -1j)


@dataclass(frozen=True, order=True)
class PauliString:
    """Tensor product of single-qubit Paulis, site 0 being the most significant factor."""

    sites: tuple[int, ...]

    def __post_init__(self):
        if len(self.sites) < 1:
            raise ValueError("a Pauli string needs at least one site")
        if any(q not in (0, 1, 2, 3) for q in self.sites):
            raise ValueError(f"quaternary digits must be in 0..3, got {self.sites}")

    @classmethod
    def parse(cls, label: str) -> "PauliString":
        """Accept either letters (``"IXYZ"``) or quaternary digits (``"0123"``)."""
        label = label.strip().upper()
        if not label:
            raise ValueError("empty Pauli label")
        if all(ch in "0123" for ch in label):
            return cls(tuple(int(ch) for ch in label))
        if all(ch in _LETTERS for ch in label):
            return cls(tuple(_LETTERS.index(ch) for ch in label))
        raise ValueError(f"cannot parse Pauli label {label!r}")

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls((0,) * n)

    @property
    def n(self) -> int:
        return len(self.sites)

    @property
    def label(self) -> str:
        return "".join(_LETTERS[q] for q in self.sites)

    @property
    def digits(self) -> str:
        return "".join(str(q) for q in self.sites)

    @property
    def y_count(self) -> int:
        return sum(1 for q in self.sites if q == 2)

    def is_identity(self) -> bool:
        return not any(self.sites)

    def __str__(self) -> str:
        return self.label


@dataclass(frozen=True)
class PhasedPauli:
    """``i**phase`` times a Pauli string."""

    phase: int
    string: PauliString

    def __post_init__(self):
        object.__setattr__(self, "phase", self.phase % 4)

    @property
    def scalar(self) -> complex:
        return _I_POWERS[self.phase]

    def __mul__(self, other: "PhasedPauli") -> "PhasedPauli":
        prod = pauli_mul(self.string, other.string)
        return PhasedPauli(self.phase + other.phase + prod.phase, prod.string)

    def matrix(self) -> np.ndarray:
        return self.scalar * pauli_matrix(self.string)

    def __str__(self) -> str:
        return f"{('', 'i', '-', '-i')[self.phase]}{self.string.label}"


def as_pauli(p) -> PauliString:
    if isinstance(p, PauliString):
        return p
    if isinstance(p, PhasedPauli):
        return p.string
    if isinstance(p, str):
        return PauliString.parse(p)
    return PauliString(tuple(int(q) for q in p))


def all_paulis(n: int) -> Iterator[PauliString]:
    """The ``4**n`` strings in lexicographic quaternary order."""
    for sites in itertools.product(range(4), repeat=n):
        yield PauliString(sites)


def pauli_matrix(p) -> np.ndarray:
    p = as_pauli(p)
    out = SIGMA[p.sites[0]]
    for q in p.sites[1:]:
        out = np.kron(out, SIGMA[q])
    return out


def pauli_mul(a, b) -> PhasedPauli:
    """Product ``a · b`` with the phase accumulated site by site mod 4."""
    a, b = as_pauli(a), as_pauli(b)
    if a.n != b.n:
        raise LengthMismatch(f"cannot multiply strings of length {a.n} and {b.n}")
    phase = 0
    sites = []
    for qa, qb in zip(a.sites, b.sites):
        phase += _PHASE[qa][qb]
        sites.append(_PRODUCT[qa][qb])
    return PhasedPauli(phase, PauliString(tuple(sites)))


@lru_cache(maxsize=4096)
def signed_permutation(p: PauliString) -> tuple[int, np.ndarray]:
    """Return ``(mask, c)`` such that ``P |x> = c[x] |x ^ mask>``."""
    mask = 0
    c = np.ones(1, dtype=np.complex128)
    for q in p.sites:
        mask <<= 1
        if q in (1, 2):
            mask |= 1
        # per-site amplitudes for input bit 0 and bit 1
        site = {0: (1, 1), 1: (1, 1), 2: (1j, -1j), 3: (1, -1)}[q]
        c = np.kron(c, np.array(site, dtype=np.complex128))
    c.setflags(write=False)
    return mask, c


def _embedded(p: PauliString, dim_a: int) -> tuple[np.ndarray, np.ndarray]:
    """Permutation and phases of ``I_A ⊗ P`` on the full ``dim_a * 2**n`` space."""
    mask, c = signed_permutation(p)
    full = dim_a * c.size
    perm = np.arange(full) ^ mask
    return perm, np.tile(c, dim_a)


def apply_to_vector(p, psi, dim_a: int = 1) -> np.ndarray:
    """``(I_A ⊗ P) psi``."""
    p = as_pauli(p)
    psi = np.asarray(psi)
    perm, c = _embedded(p, dim_a)
    if psi.shape[-1] != perm.size:
        raise DimMismatch(f"vector of length {psi.shape[-1]} vs operator on {perm.size}")
    # |x> -> c[x] |x ^ mask>  and  x -> x ^ mask is an involution
    return (c * psi)[..., perm]


def conjugate(p, rho, dim_a: int = 1) -> np.ndarray:
    """Pauli channel ``rho -> (I_A ⊗ P) rho (I_A ⊗ P)^dagger``.

    With ``dim_a == 1`` this is the plain channel on ``2**n`` dimensions. Any
    phase attached to ``p`` cancels and is ignored.
    """
    p = as_pauli(p)
    rho = np.asarray(rho, dtype=np.complex128)
    perm, c = _embedded(p, dim_a)
    if rho.shape != (perm.size, perm.size):
        raise DimMismatch(f"operator of shape {rho.shape} vs channel on {perm.size} dimensions")
    m = c[:, None] * rho * np.conj(c)[None, :]
    return m[np.ix_(perm, perm)]


# ---------------------------------------------------------------------------
# qutrit generalised Paulis

OMEGA = np.exp(2j * np.pi / 3)


@dataclass(frozen=True)
class WeylOperator:
    """``X**a Z**b`` built from the cyclic boost ``X`` and the clock ``Z``."""

    a: int
    b: int
    d: int = 3

    @property
    def label(self) -> str:
        parts = []
        if self.a % self.d:
            parts.append("X" if self.a % self.d == 1 else f"X{self.a % self.d}")
        if self.b % self.d:
            parts.append("Z" if self.b % self.d == 1 else f"Z{self.b % self.d}")
        return "".join(parts) or "I"


def weyl_boost(d: int = 3) -> np.ndarray:
    """``|j> -> |j+1 mod d>``."""
    return np.roll(np.eye(d, dtype=np.complex128), 1, axis=0)


def weyl_clock(d: int = 3) -> np.ndarray:
    return np.diag(np.exp(2j * np.pi * np.arange(d) / d))


def weyl_matrix(w: WeylOperator) -> np.ndarray:
    if w.d != 3:
        raise UnsupportedDim(f"only qutrit Weyl operators are supported, got d={w.d}")
    x = np.linalg.matrix_power(weyl_boost(3), w.a % 3)
    z = np.linalg.matrix_power(weyl_clock(3), w.b % 3)
    return x @ z
