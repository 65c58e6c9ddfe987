import numpy as np
import pytest

from proxygap.linalg import HermitianOperator


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_hermitian(rng, dims):
    d = int(np.prod(dims))
    m = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return HermitianOperator((m + m.conj().T) / 2, dims)


def random_state(rng, d, k=None):
    shape = (d,) if k is None else (k, d)
    v = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if k is None:
        return v / np.linalg.norm(v)
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def random_product_states(rng, n, k):
    """k fully product n-qubit state vectors, shape (k, 2^n)."""
    sites = rng.standard_normal((k, n, 2)) + 1j * rng.standard_normal((k, n, 2))
    sites /= np.linalg.norm(sites, axis=2, keepdims=True)
    vecs = sites[:, 0, :]
    for i in range(1, n):
        vecs = np.einsum("ka,kb->kab", vecs, sites[:, i, :]).reshape(k, -1)
    return vecs


def random_cut_product_states(rng, cut, k):
    """k states that are product across the given bipartition."""
    n = cut.n_sites
    a = sorted(cut.subset_mask)
    b = sorted(cut.complement)
    va = random_state(rng, 2 ** len(a), k)
    vb = random_state(rng, 2 ** len(b), k)
    t = np.einsum("ka,kb->kab", va, vb).reshape((k,) + (2,) * n)
    perm = np.argsort(a + b)
    return t.transpose([0] + [1 + p for p in perm]).reshape(k, 2 ** n)
