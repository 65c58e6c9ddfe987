import numpy as np
import pytest
from scipy.linalg import expm

from conftest import random_hermitian, random_state
from proxygap.linalg import (Bipartition, HermitianOperator, LinalgError,
                             eig_hermitian, kron, partial_transpose,
                             partial_transpose_matrix, psd_project,
                             psd_project_matrix, spectral_fn)


def test_hermitian_operator_rejects_non_hermitian():
    with pytest.raises(LinalgError):
        HermitianOperator(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_hermitian_operator_rejects_bad_dims():
    with pytest.raises(LinalgError):
        HermitianOperator(np.eye(4), (3, 2))
    with pytest.raises(LinalgError):
        HermitianOperator(np.eye(4), (0, 4))


def test_hermitian_operator_arithmetic(rng):
    a = random_hermitian(rng, (2, 2))
    b = random_hermitian(rng, (2, 2))
    np.testing.assert_allclose((a + b).entries, a.entries + b.entries)
    np.testing.assert_allclose((a - b).entries, a.entries - b.entries)
    np.testing.assert_allclose((2.5 * a).entries, 2.5 * a.entries)


def test_bipartition_validation():
    with pytest.raises(LinalgError):
        Bipartition(set(), 3)
    with pytest.raises(LinalgError):
        Bipartition({0, 1, 2}, 3)
    with pytest.raises(LinalgError):
        Bipartition({3}, 3)
    cut = Bipartition({0, 2}, 4)
    assert cut.complement == frozenset({1, 3})


def test_kron_structure(rng):
    a = random_hermitian(rng, (2,))
    b = random_hermitian(rng, (3,))
    ab = kron(a, b)
    assert ab.local_dims == (2, 3)
    np.testing.assert_allclose(ab.entries, np.kron(a.entries, b.entries))


def test_partial_transpose_involution_and_trace(rng):
    for _ in range(20):
        m = random_hermitian(rng, (2, 2, 2))
        cut = Bipartition({0, 2}, 3)
        pt = partial_transpose(m, cut)
        np.testing.assert_allclose(partial_transpose(pt, cut).entries,
                                   m.entries, atol=1e-14)
        assert abs(np.trace(pt.entries) - np.trace(m.entries)) < 1e-12


def test_partial_transpose_full_set_is_transpose(rng):
    m = random_hermitian(rng, (2, 3))
    out = partial_transpose_matrix(m.entries, (2, 3), {0, 1})
    np.testing.assert_allclose(out, m.entries.T, atol=1e-14)


def test_partial_transpose_single_site_explicit():
    # |01><10| on two qubits -> |11><00| under transposition of site 0
    m = np.zeros((4, 4))
    m[1, 2] = 1.0
    out = partial_transpose_matrix(m, (2, 2), {0})
    expected = np.zeros((4, 4))
    expected[3, 0] = 1.0
    np.testing.assert_allclose(out, expected)


def test_eig_reconstruct(rng):
    m = random_hermitian(rng, (2, 2))
    dec = eig_hermitian(m)
    np.testing.assert_allclose(dec.reconstruct(), m.entries, atol=1e-12)
    assert np.all(np.diff(dec.eigenvalues) >= -1e-14)


def test_spectral_fn_matches_expm(rng):
    m = random_hermitian(rng, (2, 2))
    out = spectral_fn(eig_hermitian(m), np.exp)
    np.testing.assert_allclose(out.entries, expm(m.entries), atol=1e-10)


def test_spectral_fn_rejects_non_finite(rng):
    m = random_hermitian(rng, (2,))
    with pytest.raises(LinalgError):
        spectral_fn(eig_hermitian(m), lambda x: np.inf)


def test_psd_project_properties(rng):
    for _ in range(10):
        m = random_hermitian(rng, (2, 2)).entries
        p = psd_project_matrix(m)
        w = np.linalg.eigvalsh(p)
        assert w.min() >= -1e-12
        # projection is idempotent and dominates m in the PSD order
        np.testing.assert_allclose(psd_project_matrix(p), p, atol=1e-12)
        assert np.linalg.eigvalsh(p - m).min() >= -1e-12


def test_psd_project_fixed_point(rng):
    m = random_hermitian(rng, (4,))
    p = psd_project(HermitianOperator(m.entries @ m.entries.conj().T))
    np.testing.assert_allclose(p.entries, m.entries @ m.entries.conj().T,
                               atol=1e-10)
