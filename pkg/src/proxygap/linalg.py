"""Dense Hermitian linear algebra on multipartite operators.

Operators carry their tensor-factor structure (``local_dims``) so that
partial transposition and bipartite cuts can be applied by index
bookkeeping alone.  Everything is dense complex128; entropies elsewhere
are in nats.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

HERMITICITY_RTOL = 1e-12


class LinalgError(ValueError):
    pass


def _as_matrix(entries) -> np.ndarray:
    m = np.asarray(entries, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise LinalgError(f"expected a square matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class HermitianOperator:
    """A Hermitian matrix together with its subsystem structure."""

    entries: np.ndarray
    local_dims: tuple[int, ...]

    def __init__(self, entries, local_dims=None):
        m = _as_matrix(entries)
        if local_dims is None:
            local_dims = (m.shape[0],)
        local_dims = tuple(int(d) for d in local_dims)
        if any(d <= 0 for d in local_dims):
            raise LinalgError("local dimensions must be positive")
        if int(np.prod(local_dims)) != m.shape[0]:
            raise LinalgError(
                f"product of local_dims {local_dims} != dim {m.shape[0]}")
        scale = max(np.abs(m).max(), 1.0)
        if np.abs(m - m.conj().T).max() > HERMITICITY_RTOL * scale:
            raise LinalgError("matrix is not Hermitian")
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "local_dims", local_dims)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def n_sites(self) -> int:
        return len(self.local_dims)

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.entries + other.entries, self.local_dims)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        return HermitianOperator(self.entries - other.entries, self.local_dims)

    def __mul__(self, c: float) -> "HermitianOperator":
        return HermitianOperator(self.entries * float(c), self.local_dims)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Bipartition:
    """A proper nonempty subset of subsystem indices (the "A" side)."""

    subset_mask: frozenset[int]
    n_sites: int

    def __init__(self, subset, n_sites):
        subset = frozenset(int(i) for i in subset)
        n_sites = int(n_sites)
        if not subset:
            raise LinalgError("bipartition subset must be nonempty")
        if any(i < 0 or i >= n_sites for i in subset):
            raise LinalgError("subsystem index out of range")
        if len(subset) == n_sites:
            raise LinalgError("bipartition subset must be proper")
        object.__setattr__(self, "subset_mask", subset)
        object.__setattr__(self, "n_sites", n_sites)

    @property
    def complement(self) -> frozenset[int]:
        return frozenset(range(self.n_sites)) - self.subset_mask


@dataclass(frozen=True)
class SpectralDecomposition:
    """Ascending eigenvalues and the unitary of column eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    local_dims: tuple[int, ...] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", np.asarray(self.eigenvalues, dtype=float))
        object.__setattr__(self, "eigenvectors", np.asarray(self.eigenvectors, dtype=complex))
        if self.local_dims is None:
            object.__setattr__(self, "local_dims", (self.eigenvectors.shape[0],))

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def kron(a: HermitianOperator, b: HermitianOperator) -> HermitianOperator:
    return HermitianOperator(np.kron(a.entries, b.entries),
                             a.local_dims + b.local_dims)


def partial_transpose_matrix(m: np.ndarray, local_dims, subset) -> np.ndarray:
    """Transpose the tensor factors in `subset`, acting on a raw matrix."""
    dims = tuple(local_dims)
    n = len(dims)
    t = np.asarray(m).reshape(dims + dims)
    axes = list(range(2 * n))
    for i in subset:
        axes[i], axes[n + i] = axes[n + i], axes[i]
    d = int(np.prod(dims))
    return t.transpose(axes).reshape(d, d)


def partial_transpose(m: HermitianOperator, cut: Bipartition) -> HermitianOperator:
    if cut.n_sites != m.n_sites:
        raise LinalgError("bipartition does not match operator structure")
    out = partial_transpose_matrix(m.entries, m.local_dims, cut.subset_mask)
    return HermitianOperator(out, m.local_dims)


def eig_hermitian(m: HermitianOperator) -> SpectralDecomposition:
    w, v = np.linalg.eigh(m.entries)
    return SpectralDecomposition(w, v, m.local_dims)


def spectral_fn(m: SpectralDecomposition, f) -> HermitianOperator:
    fw = np.asarray([f(x) for x in m.eigenvalues], dtype=float)
    if not np.all(np.isfinite(fw)):
        raise LinalgError("scalar function not finite on the spectrum")
    v = m.eigenvectors
    out = (v * fw) @ v.conj().T
    out = (out + out.conj().T) / 2
    return HermitianOperator(out, m.local_dims)


def psd_project_matrix(m: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix in Frobenius distance (eigenvalue clipping)."""
    m = (m + m.conj().T) / 2
    w, v = np.linalg.eigh(m)
    w = np.maximum(w, 0.0)
    out = (v * w) @ v.conj().T
    return (out + out.conj().T) / 2


def psd_project(m: HermitianOperator) -> HermitianOperator:
    return HermitianOperator(psd_project_matrix(m.entries), m.local_dims)
