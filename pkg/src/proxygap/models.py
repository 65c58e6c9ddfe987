"""Spin-chain Hamiltonians, Dicke / Bell-basis states, magnetization sectors.

Convention: sigma_z |0> = +|0>, so |1> is the excited state and a basis
index's popcount is its excitation number m (total magnetization n - 2m).
Site 0 is the most significant bit of the basis index.

Hamiltonians are assembled as sparse matrices from bit arithmetic (a bond
term touches at most one off-diagonal per row), then densified behind a
memory guard where a dense operator is requested.
"""
from __future__ import annotations

import os
from dataclasses import dataclass
from math import comb

import numpy as np
import scipy.sparse as sp

from .linalg import HermitianOperator, SpectralDecomposition, LinalgError

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

DEFAULT_MAX_QUBITS = 14


def max_qubits() -> int:
    return int(os.environ.get("PROXYGAP_MAX_QUBITS", DEFAULT_MAX_QUBITS))


def _check_size(n: int):
    cap = max_qubits()
    if n > cap:
        raise MemoryError(
            f"{n} qubits exceeds the memory guard ({cap}); "
            "set PROXYGAP_MAX_QUBITS to override")


@dataclass(frozen=True)
class HeisenbergParams:
    n: int
    jx: float = 1.0
    jy: float = 1.0
    jz: float = 1.0
    b: float = 0.0
    periodic: bool = True

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("need at least 2 sites")


@dataclass(frozen=True)
class XYParams:
    n: int
    r: float
    h: float
    periodic: bool = True

    def __post_init__(self):
        if not 0.0 <= self.r <= 1.0:
            raise ValueError("anisotropy r must lie in [0, 1]")


@dataclass(frozen=True)
class Sector:
    magnetization: int
    indices: np.ndarray
    block: np.ndarray


@dataclass(frozen=True)
class SectorBlocks:
    n_sites: int
    sectors: tuple[Sector, ...]

    def spectrum(self) -> np.ndarray:
        ws = [np.linalg.eigvalsh(s.block) for s in self.sectors]
        return np.sort(np.concatenate(ws))


def _bonds(n: int, periodic: bool):
    bonds = [(i, i + 1) for i in range(n - 1)]
    if periodic:
        bonds.append((n - 1, 0))
    return bonds


def _bit(idx: np.ndarray, site: int, n: int) -> np.ndarray:
    return ((idx >> (n - 1 - site)) & 1).astype(np.int64)


def heisenberg_sparse(p: HeisenbergParams) -> sp.csr_matrix:
    """H = -sum_bonds (Jx XX + Jy YY + Jz ZZ) + B sum_i Z as real CSR.

    J < 0 is antiferromagnetic.  A periodic 2-site ring counts its single
    bond twice (the literal formula).
    """
    n = p.n
    d = 2 ** n
    idx = np.arange(d, dtype=np.int64)
    diag = np.zeros(d)
    rows, cols, vals = [], [], []
    for (i, j) in _bonds(n, p.periodic):
        bi = _bit(idx, i, n)
        bj = _bit(idx, j, n)
        si = 1 - 2 * bi
        sj = 1 - 2 * bj
        diag -= p.jz * (si * sj).astype(float)
        # flipping both bits: XX gives 1; YY gives +1 (bits differ) or -1
        flipped = idx ^ ((1 << (n - 1 - i)) | (1 << (n - 1 - j)))
        amp = np.where(bi != bj, -(p.jx + p.jy), -(p.jx - p.jy))
        nz = amp != 0.0
        rows.append(flipped[nz])
        cols.append(idx[nz])
        vals.append(amp[nz].astype(float))
    if p.b != 0.0:
        sz = (n - 2 * popcounts(n)).astype(float)
        diag += p.b * sz
    rows.append(idx)
    cols.append(idx)
    vals.append(diag)
    h = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(d, d))
    h.sum_duplicates()
    return h


def heisenberg_chain(p: HeisenbergParams) -> HermitianOperator:
    _check_size(p.n)
    return HermitianOperator(heisenberg_sparse(p).toarray(), (2,) * p.n)


def xy_params_as_heisenberg(p: XYParams) -> HeisenbergParams:
    # -sum((1+r)/2 XX + (1-r)/2 YY + h Z) is Heisenberg with B = -h
    return HeisenbergParams(n=p.n, jx=0.5 * (1.0 + p.r), jy=0.5 * (1.0 - p.r),
                            jz=0.0, b=-p.h, periodic=p.periodic)


def xy_chain(p: XYParams) -> HermitianOperator:
    """H = -sum_i ((1+r)/2 XX + (1-r)/2 YY + h Z).  r=1 Ising, r=0 XX."""
    return heisenberg_chain(xy_params_as_heisenberg(p))


def bell_staircase(n: int) -> SpectralDecomposition:
    """Staircase Hamiltonian sum_k k |Psi_k><Psi_k| over a generalized
    Bell basis of n qubits (d = 2^(n/2)); eigenvalue j has eigenvector
    with shift k = j mod d and phase l = j // d, so the first d
    eigenvectors are the zero-phase maximally entangled states."""
    if n % 2 != 0:
        raise ValueError("qubit count must be even")
    _check_size(n)
    d = 2 ** (n // 2)
    vecs = np.zeros((d * d, d * d), dtype=complex)
    omega = np.exp(2j * np.pi / d)
    amp = 1.0 / np.sqrt(d)
    for l in range(d):
        for k in range(d):
            j = l * d + k
            for i in range(d):
                vecs[i * d + (i + k) % d, j] = amp * omega ** ((i * l) % d)
    return SpectralDecomposition(np.arange(d * d, dtype=float), vecs, (2,) * n)


def dicke_state(n: int, m: int) -> np.ndarray:
    """Uniform superposition of all n-qubit states with m excitations."""
    if not 0 <= m <= n:
        raise ValueError("excitation number out of range")
    _check_size(n)
    vec = np.zeros(2 ** n, dtype=complex)
    idx = excitation_sector_indices(n, m)
    vec[idx] = 1.0 / np.sqrt(comb(n, m))
    return vec


def excitation_sector_indices(n: int, m: int) -> np.ndarray:
    """Basis indices with popcount m, ascending."""
    return np.nonzero(popcounts(n) == m)[0]


def popcounts(n: int) -> np.ndarray:
    idx = np.arange(2 ** n, dtype=np.int64)
    counts = np.zeros(2 ** n, dtype=np.int64)
    for bit in range(n):
        counts += (idx >> bit) & 1
    return counts


def total_sz_diagonal(n: int) -> np.ndarray:
    """Diagonal of sum_i sigma_z_i in the computational basis."""
    return (n - 2 * popcounts(n)).astype(float)


def sector_split_sparse(h: sp.spmatrix, n: int,
                        tol: float = 1e-10) -> SectorBlocks:
    """Split a sparse qubit operator conserving total sigma_z into dense
    excitation-sector blocks."""
    counts = popcounts(n)
    coo = h.tocoo()
    scale = max(np.abs(coo.data).max() if coo.nnz else 0.0, 1.0)
    cross = counts[coo.row] != counts[coo.col]
    if coo.nnz and np.abs(coo.data[cross]).max(initial=0.0) > tol * scale:
        raise LinalgError("operator does not commute with total sigma_z")
    csr = h.tocsr()
    sectors = []
    for mm in range(n + 1):
        idx = np.nonzero(counts == mm)[0]
        block = csr[np.ix_(idx, idx)].toarray()
        if np.iscomplexobj(block) and np.abs(block.imag).max() < tol * scale:
            block = block.real.copy()
        sectors.append(Sector(n - 2 * mm, idx, block))
    return SectorBlocks(n, tuple(sectors))


def translation_table(n: int) -> np.ndarray:
    """Index permutation of the one-site translation T (site i -> i+1)."""
    idx = np.arange(2 ** n, dtype=np.int64)
    return (idx >> 1) | ((idx & 1) << (n - 1))


def is_translation_invariant(h: sp.spmatrix, n: int,
                             tol: float = 1e-10) -> bool:
    """Whether the sparse operator commutes with the ring translation."""
    perm = translation_table(n)
    coo = h.tocoo()
    d = 2 ** n
    moved = sp.csr_matrix((coo.data, (perm[coo.row], perm[coo.col])),
                          shape=(d, d))
    diff = (moved - h.tocsr())
    scale = max(np.abs(coo.data).max() if coo.nnz else 0.0, 1.0)
    if diff.nnz == 0:
        return True
    return bool(np.abs(diff.data).max() <= tol * scale)


def momentum_sector_split(ops, n: int, tol: float = 1e-10):
    """Joint magnetization + momentum block decomposition of commuting
    translation-invariant qubit operators.

    `ops` is a list of sparse matrices, each conserving total sigma_z and
    commuting with the ring translation.  Returns (blocks, spectra_basis)
    where blocks is a list over (sector, momentum) of per-op dense
    blocks.  Requires every translation orbit to have full period n
    (always true for prime n away from the uniform states); raises
    LinalgError otherwise.
    """
    d = 2 ** n
    perm = translation_table(n)
    idx = np.arange(d, dtype=np.int64)
    orbit = np.empty((n, d), dtype=np.int64)
    orbit[0] = idx
    for t in range(1, n):
        orbit[t] = perm[orbit[t - 1]]
    rep = orbit.min(axis=0)
    # s = T^(n - argmin) |rep>, i.e. shift j_s = (n - t0) mod n
    t0 = orbit.argmin(axis=0)
    shift = (n - t0) % n
    counts = popcounts(n)
    omega = np.exp(2j * np.pi / n)
    op_scale = max(max(np.abs(o.tocoo().data).max(initial=0.0)
                       for o in ops), 1.0)
    blocks = []
    for m in range(n + 1):
        sector = np.nonzero(counts == m)[0]
        reps = np.unique(rep[sector])
        if 0 < m < n:
            full = np.array([np.unique(orbit[:, r]).size == n for r in reps])
            if not full.all():
                raise LinalgError(
                    "translation orbit with partial period; momentum "
                    "refinement unavailable")
        else:
            # uniform states are their own orbit: keep the 1x1 block at k=0
            blocks.append(tuple(
                o.tocsr()[np.ix_(reps, reps)].toarray().astype(complex)
                for o in ops))
            continue
        pos = {r: i for i, r in enumerate(reps)}
        per_op = []
        for o in ops:
            cols = o.tocsc()[:, reps].tocoo()
            rows = np.array([pos[r] for r in rep[cols.row]], dtype=np.int64)
            per_op.append((rows, cols.col, shift[cols.row],
                           np.asarray(cols.data, dtype=complex)))
        r_dim = len(reps)
        for k in range(n):
            kblocks = []
            for (rows, colpos, shifts, amps) in per_op:
                b = np.zeros((r_dim, r_dim), dtype=complex)
                np.add.at(b, (rows, colpos), amps * omega ** (shifts * k))
                if np.abs(b - b.conj().T).max() > tol * op_scale:
                    raise LinalgError("momentum block not Hermitian")
                kblocks.append((b + b.conj().T) / 2)
            blocks.append(tuple(kblocks))
    return blocks


def sector_split(h: HermitianOperator, tol: float = 1e-10) -> SectorBlocks:
    """Dense-operator front end of `sector_split_sparse`."""
    if any(d != 2 for d in h.local_dims):
        raise LinalgError("sector split requires qubit subsystems")
    return sector_split_sparse(sp.csr_matrix(h.entries), h.n_sites, tol)


def energy_extremes(h, degeneracy_rtol: float = 1e-9):
    """Return (E0, ground vectors as columns, E_max)."""
    m = h.entries if isinstance(h, HermitianOperator) else np.asarray(h)
    w, v = np.linalg.eigh(m)
    scale = max(np.abs(w).max(), 1.0)
    n_ground = int(np.sum(w <= w[0] + degeneracy_rtol * scale))
    return w[0], v[:, :n_ground], w[-1]
