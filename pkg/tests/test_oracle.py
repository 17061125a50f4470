import math

import numpy as np
import pytest

from varent import oracle, posmaps, states
from varent.errors import NonMonotone, UnsupportedDim


def test_bell_reduction():
    assert oracle.min_eig_exact("reduction", states.bell()) == pytest.approx(-0.5, abs=1e-12)
    assert oracle.min_eig_exact(posmaps.reduction_decomposition(1), states.bell()) == pytest.approx(-0.5, abs=1e-12)


@pytest.mark.parametrize("p", [0.0, 0.1, 0.2, 0.5, 1.0])
def test_isotropic_two_qubit_closed_forms(p):
    rho = states.isotropic(2, p)
    assert oracle.min_eig_exact("ppt", rho) == pytest.approx((1 - 5 * p) / 16, abs=1e-12)
    assert oracle.min_eig_exact("reduction", rho) == pytest.approx((3 - 15 * p) / 16, abs=1e-12)
    assert oracle.min_eig_exact("enhanced", rho) == pytest.approx((1 - 5 * p) / 8, abs=1e-12)


def test_log_negativity():
    assert oracle.log_negativity_exact(states.bell()) == pytest.approx(1.0, abs=1e-12)
    assert oracle.log_negativity_exact(states.isotropic(1, 0.5)) == pytest.approx(math.log2(5 / 4), abs=1e-12)
    for n in (1, 2, 3):
        assert oracle.log_negativity_exact(states.mes(n)) == pytest.approx(n, abs=1e-12)
    assert oracle.log_negativity_exact(states.random_product(2, 3, seed=1)) == pytest.approx(0.0, abs=1e-12)


def test_threshold_scans():
    for m in ("ppt", "reduction", "enhanced"):
        assert oracle.threshold_scan("isotropic", m, n=2) == pytest.approx(0.2, abs=1e-6)
    assert oracle.threshold_scan("isotropic", "ppt", n=1) == pytest.approx(1 / 3, abs=1e-6)
    assert oracle.threshold_scan("breuer", "ppt") == pytest.approx(0.5, abs=1e-6)


def _breuer_param(rho) -> float:
    # the (0, 0) entry of the literal matrix is (1 - lam) / 3
    return 1.0 - 3.0 * float(rho.mat[0, 0].real)


def test_threshold_scan_no_crossing(monkeypatch):
    monkeypatch.setattr(oracle, "min_eig_exact", lambda m, rho: 0.1 + _breuer_param(rho))
    assert math.isnan(oracle.threshold_scan("breuer", "ppt"))


def test_threshold_scan_rejects_two_crossings(monkeypatch):
    monkeypatch.setattr(oracle, "min_eig_exact", lambda m, rho: (_breuer_param(rho) - 0.3) * (_breuer_param(rho) - 0.7))
    with pytest.raises(NonMonotone):
        oracle.threshold_scan("breuer", "ppt")


def test_decomposition_equivalence():
    for name, n in [("ppt", 1), ("ppt", 2), ("reduction", 1), ("reduction", 2), ("reduction-tp", 2), ("enhanced", 2)]:
        assert oracle.decomposition_equiv(posmaps.decomposition_by_name(name, n), name, trials=10) <= 1e-12
    assert oracle.decomposition_equiv(posmaps.choi_decomposition(), "choi", trials=10) <= 1e-12
    assert oracle.decomposition_equiv(posmaps.enhanced_decomposition(1), None, trials=10) <= 1e-12
    assert oracle.decomposition_equiv(posmaps.enhanced_decomposition(1), "enhanced", trials=10) <= 1e-12


def test_decomposition_equivalence_detects_mismatch():
    assert oracle.decomposition_equiv(posmaps.reduction_decomposition(1), "ppt", trials=3) > 0.01


def test_product_states_stay_positive():
    for seed in range(20):
        rho = states.random_product(2, 2, seed=seed)
        for m in ("ppt", "reduction", "reduction-tp"):
            assert oracle.min_eig_exact(m, rho) >= -1e-12


def test_choi_direct_needs_qutrit():
    with pytest.raises(UnsupportedDim):
        oracle.choi_direct(np.eye(4) / 4, (2, 2))
    with pytest.raises(ValueError):
        oracle.direct_map("realignment")


def test_reduction_and_trace_preserving_reduction_agree_in_sign():
    for seed in range(30):
        rho = states.random_density(16, seed=seed, dims=(4, 4)) if seed % 2 else states.isotropic(2, seed / 30)
        a = oracle.min_eig_exact("reduction", rho)
        b = oracle.min_eig_exact(posmaps.reduction_tp_decomposition(2), rho)
        assert np.sign(round(a, 12)) == np.sign(round(b, 12))
