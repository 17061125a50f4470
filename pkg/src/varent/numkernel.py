"""Dense complex linear algebra used by every other module.

Matrices are plain ``numpy`` arrays of dtype ``complex128``. Bipartite
operators follow one index convention throughout the package: site 0 is the
most significant Kronecker factor and system A precedes system B, so an
operator on ``A ⊗ B`` has row index ``a * dim_b + b``.

The Hermitian eigensolver is a cyclic complex Jacobi iteration written here
rather than delegated to LAPACK. It serves as the exact reference that the
variational estimates are checked against, and keeping it self-contained
makes its output bit-reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import DimMismatch, NonHermitian

HERMITIAN_TOL = 1e-12

CMat = np.ndarray


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues in ascending order with matching orthonormal eigenvectors.

    ``eigenvectors[:, k]`` belongs to ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def ground_state(self) -> np.ndarray:
        return self.eigenvectors[:, 0]


def as_cmat(m) -> CMat:
    """Coerce ``m`` to a finite 2-D complex array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2:
        raise DimMismatch(f"expected a matrix, got array of shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def kron(a, b) -> CMat:
    return np.kron(as_cmat(a), as_cmat(b))


def kron_all(*mats) -> CMat:
    out = np.ones((1, 1), dtype=np.complex128)
    for m in mats:
        out = np.kron(out, as_cmat(m))
    return out


def dagger(m) -> CMat:
    return np.conj(np.asarray(m)).T


def hermiticity_error(h) -> float:
    h = np.asarray(h)
    return float(np.max(np.abs(h - dagger(h)))) if h.size else 0.0


def _check_hermitian(h: CMat) -> CMat:
    if h.shape[0] != h.shape[1]:
        raise DimMismatch(f"expected a square matrix, got {h.shape}")
    err = hermiticity_error(h)
    if err > HERMITIAN_TOL:
        raise NonHermitian(f"max |H - H^dagger| = {err:.3e} exceeds {HERMITIAN_TOL}")
    return 0.5 * (h + dagger(h))


def _jacobi_rotation(a_pp: float, a_qq: float, a_pq: complex) -> np.ndarray:
    """2x2 unitary ``V`` with ``V^dagger [[a_pp, a_pq], [a_pq*, a_qq]] V`` diagonal."""
    mag = abs(a_pq)
    phase = a_pq / mag
    tau = (a_qq - a_pp) / (2.0 * mag)
    # smaller root keeps the rotation angle below pi/4
    t = (1.0 if tau >= 0 else -1.0) / (abs(tau) + np.sqrt(1.0 + tau * tau))
    c = 1.0 / np.sqrt(1.0 + t * t)
    s = t * c
    return np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]], dtype=np.complex128)


def eig_hermitian(h, *, max_sweeps: int = 100) -> Spectrum:
    """Full eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    The input is symmetrised as ``(H + H^dagger)/2`` after the Hermiticity
    check, which absorbs rounding drift from averaging channel outputs.

    Raises:
        NonHermitian: if any entry of ``H - H^dagger`` exceeds 1e-12 in modulus.
    """
    a = _check_hermitian(as_cmat(h)).copy()
    d = a.shape[0]
    v = np.eye(d, dtype=np.complex128)
    scale = max(float(np.linalg.norm(a)), np.finfo(float).tiny)

    for _ in range(max_sweeps):
        off = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off <= 1e-15 * scale:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                a_pq = a[p, q]
                if abs(a_pq) <= 1e-300:
                    continue
                rot = _jacobi_rotation(a[p, p].real, a[q, q].real, a_pq)
                idx = [p, q]
                a[:, idx] = a[:, idx] @ rot
                a[idx, :] = dagger(rot) @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ rot

    evals = np.real(np.diag(a))
    order = np.argsort(evals, kind="stable")
    return Spectrum(eigenvalues=evals[order], eigenvectors=v[:, order])


def eigvals_hermitian(h) -> np.ndarray:
    return eig_hermitian(h).eigenvalues


def min_eigenvalue(h) -> float:
    return eig_hermitian(h).min


def trace_norm(h) -> float:
    """Sum of absolute eigenvalues of a Hermitian matrix."""
    return float(np.sum(np.abs(eig_hermitian(h).eigenvalues)))


def _split(m, dim_a: int, dim_b: int) -> np.ndarray:
    m = as_cmat(m)
    n = dim_a * dim_b
    if m.shape != (n, n):
        raise DimMismatch(f"matrix of shape {m.shape} does not match dims ({dim_a}, {dim_b})")
    return m.reshape(dim_a, dim_b, dim_a, dim_b)


def partial_transpose(m, dim_a: int, dim_b: int) -> CMat:
    """Transpose the B factor: ``|i><j| ⊗ |k><l|  ->  |i><j| ⊗ |l><k|``."""
    t = _split(m, dim_a, dim_b)
    n = dim_a * dim_b
    return np.ascontiguousarray(t.transpose(0, 3, 2, 1)).reshape(n, n)


def partial_trace(m, dim_a: int, dim_b: int, keep: Literal["A", "B"] = "A") -> CMat:
    """Trace out one side of a bipartite operator, returning the marginal on ``keep``."""
    t = _split(m, dim_a, dim_b)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("ijil->jl", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


def expectation(h, psi) -> float:
    """Real part of ``<psi|H|psi>`` for a Hermitian ``H``."""
    psi = np.asarray(psi)
    return float(np.real(np.vdot(psi, h @ psi)))
