import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from varent import pauli as pl
from varent.errors import LengthMismatch, UnsupportedDim
from varent.pauli import PauliString, PhasedPauli, WeylOperator

I2 = np.eye(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]])
Z = np.diag([1.0, -1.0]).astype(complex)
DENSE = {"I": I2, "X": X, "Y": Y, "Z": Z}


def dense(label: str) -> np.ndarray:
    out = np.ones((1, 1))
    for ch in label:
        out = np.kron(out, DENSE[ch])
    return out


labels = st.integers(1, 3).flatmap(lambda n: st.tuples(st.text("IXYZ", min_size=n, max_size=n),
                                                      st.text("IXYZ", min_size=n, max_size=n)))


def test_parse_and_encode():
    p = PauliString.parse("IXYZ")
    assert p.sites == (0, 1, 2, 3)
    assert PauliString.parse("0123") == p
    assert p.label == "IXYZ" and p.digits == "0123"
    assert p.y_count == 1
    assert PauliString.identity(3).is_identity()
    with pytest.raises(ValueError):
        PauliString.parse("IXA")


def test_documented_product():
    prod = pl.pauli_mul("XY", "YY")
    assert prod.string.label == "ZI"
    assert prod.scalar == 1j


@given(labels)
def test_product_matches_dense(pair):
    a, b = pair
    prod = pl.pauli_mul(a, b)
    np.testing.assert_allclose(prod.matrix(), dense(a) @ dense(b), atol=1e-15)


def test_single_qubit_table_exhaustive():
    for a, b in itertools.product("IXYZ", repeat=2):
        np.testing.assert_allclose(pl.pauli_mul(a, b).matrix(), DENSE[a] @ DENSE[b], atol=1e-15)


def test_length_mismatch():
    with pytest.raises(LengthMismatch):
        pl.pauli_mul("X", "XY")


def test_phased_multiplication_is_associative():
    a = PhasedPauli(1, PauliString.parse("XY"))
    b = PhasedPauli(3, PauliString.parse("ZZ"))
    c = PhasedPauli(2, PauliString.parse("YX"))
    np.testing.assert_allclose(((a * b) * c).matrix(), (a * (b * c)).matrix(), atol=1e-15)
    np.testing.assert_allclose((a * b).matrix(), a.matrix() @ b.matrix(), atol=1e-15)


def test_all_paulis_count_and_order():
    strings = list(pl.all_paulis(2))
    assert len(strings) == 16
    assert strings[0].label == "II" and strings[-1].label == "ZZ"
    assert strings == sorted(strings)


@pytest.mark.parametrize("label", ["X", "Y", "Z", "XY", "ZIY", "YYX"])
@pytest.mark.parametrize("dim_a", [1, 2, 3])
def test_fast_paths_match_dense(label, dim_a, rng):
    d = dim_a * 2 ** len(label)
    full = np.kron(np.eye(dim_a), dense(label))
    psi = rng.standard_normal((2, d)) + 1j * rng.standard_normal((2, d))
    np.testing.assert_allclose(pl.apply_to_vector(label, psi, dim_a), psi @ full.T, atol=1e-14)
    rho = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    np.testing.assert_allclose(pl.conjugate(label, rho, dim_a), full @ rho @ full.conj().T, atol=1e-13)


def test_weyl_operators():
    x, z = pl.weyl_boost(), pl.weyl_clock()
    np.testing.assert_allclose(x @ np.eye(3)[:, 0], np.eye(3)[:, 1])
    np.testing.assert_allclose(z @ x, pl.OMEGA * x @ z, atol=1e-15)
    assert WeylOperator(2, 1).label == "X2Z"
    assert WeylOperator(0, 0).label == "I"
    w = pl.weyl_matrix(WeylOperator(2, 2))
    np.testing.assert_allclose(w @ w.conj().T, np.eye(3), atol=1e-15)
    with pytest.raises(UnsupportedDim):
        pl.weyl_matrix(WeylOperator(1, 0, d=4))
