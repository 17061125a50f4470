"""Exact reference answers computed from matrix-level map definitions.

Nothing here goes through the channel decompositions: the direct maps are
written from their defining formulas, and spectra come from the Jacobi solver.
"""

from __future__ import annotations

import math
from typing import Callable, Union

import numpy as np

from . import states
from .errors import DimMismatch, NonMonotone, ParamOutOfRange, UnsupportedDim
from .numkernel import min_eigenvalue, partial_trace, partial_transpose, trace_norm
from .posmaps import QuasiDecomposition, apply_map
from .states import DensityMatrix

NO_CROSSING = float("nan")
SIGN_TOL = 1e-12
BISECT_TOL = 1e-9

DirectMap = Callable[[np.ndarray, tuple], np.ndarray]


def _dims(rho) -> tuple[np.ndarray, tuple[int, int]]:
    if isinstance(rho, DensityMatrix):
        return rho.mat, rho.dims
    raise TypeError("expected a DensityMatrix")


def transpose_direct(mat: np.ndarray, dims) -> np.ndarray:
    return partial_transpose(mat, *dims)


def reduction_direct(mat: np.ndarray, dims) -> np.ndarray:
    """``tr_B[X] ⊗ I - X``."""
    dim_a, dim_b = dims
    return np.kron(partial_trace(mat, dim_a, dim_b, keep="A"), np.eye(dim_b)) - mat


def reduction_tp_direct(mat: np.ndarray, dims) -> np.ndarray:
    return reduction_direct(mat, dims) / (dims[1] - 1)


def antidiagonal_unitary(d: int) -> np.ndarray:
    """``antidiag(1, -1, ..., 1, -1)``: row ``i`` holds ``(-1)**i`` in column ``d - 1 - i``."""
    if d % 2:
        raise UnsupportedDim(f"antisymmetric unitary needs even dimension, got {d}")
    u = np.zeros((d, d))
    u[np.arange(d), d - 1 - np.arange(d)] = (-1.0) ** np.arange(d)
    return u


def enhanced_direct(mat: np.ndarray, dims) -> np.ndarray:
    """``R(X) - U T(X) U^dagger`` with the antidiagonal ``U`` on B."""
    dim_a, dim_b = dims
    u = np.kron(np.eye(dim_a), antidiagonal_unitary(dim_b))
    return reduction_direct(mat, dims) - u @ partial_transpose(mat, dim_a, dim_b) @ u.T


def choi_entries(x: np.ndarray) -> np.ndarray:
    """Choi map on one 3x3 block: diagonal ``x_ii + x_{i+1,i+1}``, off-diagonal ``-x_ij``."""
    out = -np.array(x, dtype=np.complex128)
    for i in range(3):
        out[i, i] = x[i, i] + x[(i + 1) % 3, (i + 1) % 3]
    return out


def choi_direct(mat: np.ndarray, dims) -> np.ndarray:
    dim_a, dim_b = dims
    if dim_b != 3:
        raise UnsupportedDim(f"Choi map acts on a qutrit, got dim_b={dim_b}")
    blocks = np.asarray(mat, dtype=np.complex128).reshape(dim_a, 3, dim_a, 3)
    out = np.empty_like(blocks)
    for a in range(dim_a):
        for c in range(dim_a):
            out[a, :, c, :] = choi_entries(blocks[a, :, c, :])
    return out.reshape(dim_a * 3, dim_a * 3)


DIRECT_MAPS: dict[str, DirectMap] = {
    "ppt": transpose_direct,
    "transpose": transpose_direct,
    "reduction": reduction_direct,
    "reduction-tp": reduction_tp_direct,
    "enhanced": enhanced_direct,
    "choi": choi_direct,
}


def direct_map(name: str) -> DirectMap:
    try:
        return DIRECT_MAPS[name]
    except KeyError:
        raise ValueError(f"unknown map {name!r}; expected one of {', '.join(DIRECT_MAPS)}") from None


def map_output(decomp_or_map: Union[str, QuasiDecomposition], rho: DensityMatrix) -> np.ndarray:
    if isinstance(decomp_or_map, QuasiDecomposition):
        return apply_map(decomp_or_map, rho)
    mat, dims = _dims(rho)
    out = direct_map(decomp_or_map)(mat, dims)
    return 0.5 * (out + out.conj().T)


def min_eig_exact(decomp_or_map: Union[str, QuasiDecomposition], rho: DensityMatrix) -> float:
    """Smallest eigenvalue of the map output; negative certifies entanglement."""
    return min_eigenvalue(map_output(decomp_or_map, rho))


def log_negativity_exact(rho: DensityMatrix) -> float:
    """``log2 ||rho^{T_B}||_1``, clamped at 0 against rounding."""
    mat, dims = _dims(rho)
    return max(0.0, math.log2(trace_norm(partial_transpose(mat, *dims))))


def family_state(family: str, t: float, n: int = 1) -> DensityMatrix:
    if family == "isotropic":
        return states.isotropic(n, t)
    if family == "breuer":
        return states.breuer_literal(t)
    raise ValueError(f"unknown family {family!r}; expected 'isotropic' or 'breuer'")


def family_curve(family: str, map_name: Union[str, QuasiDecomposition], grid: np.ndarray, n: int = 1) -> np.ndarray:
    return np.array([min_eig_exact(map_name, family_state(family, float(t), n)) for t in grid])


def _sign(v: float) -> int:
    return 0 if abs(v) <= SIGN_TOL else (1 if v > 0 else -1)


def threshold_scan(family: str, map_name: Union[str, QuasiDecomposition] = "ppt", n: int = 1, grid: int = 101,
                   tol: float = BISECT_TOL) -> float:
    """Family parameter where ``lambda_min`` of the map output changes sign.

    A ``grid``-point scan over ``[0, 1]`` must show at most one strict sign
    change (points within ``SIGN_TOL`` of zero are skipped); the bracketing
    interval is then bisected to ``tol``. Returns ``NO_CROSSING`` (NaN) if the
    sign never changes.
    """
    if grid < 2:
        raise ParamOutOfRange(f"grid needs at least 2 points, got {grid}")
    ts = np.linspace(0.0, 1.0, grid)
    values = family_curve(family, map_name, ts, n)
    signed = [(i, _sign(v)) for i, v in enumerate(values) if _sign(v) != 0]
    changes = [k for k in range(1, len(signed)) if signed[k][1] != signed[k - 1][1]]
    if len(changes) > 1:
        raise NonMonotone(f"lambda_min changes sign {len(changes)} times over the {family} family")
    if not changes:
        return NO_CROSSING
    (i_lo, s_lo), (i_hi, _) = signed[changes[0] - 1], signed[changes[0]]
    lo, hi = ts[i_lo], ts[i_hi]

    def f(t):
        return min_eig_exact(map_name, family_state(family, t, n))

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _sign(f(mid)) == s_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def decomposition_equiv(decomp: QuasiDecomposition, direct: Union[str, DirectMap, None] = None, trials: int = 100,
                        seed: int = 0, dim_a: int | None = None) -> float:
    """Largest entrywise gap between the decomposition and a direct map over random states.

    ``direct=None`` means the zero map; a string picks a built-in direct map.
    """
    if trials < 1:
        raise ParamOutOfRange(f"trials must be at least 1, got {trials}")
    if isinstance(direct, str):
        direct = direct_map(direct)
    dim_b = decomp.dim_b
    dim_a = dim_b if dim_a is None else dim_a
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        rho = states.random_density(dim_a * dim_b, rng, dims=(dim_a, dim_b))
        got = apply_map(decomp, rho)
        want = np.zeros_like(got) if direct is None else direct(rho.mat, rho.dims)
        if want.shape != got.shape:
            raise DimMismatch(f"direct map returned {want.shape}, decomposition {got.shape}")
        worst = max(worst, float(np.max(np.abs(got - want))))
    return worst
