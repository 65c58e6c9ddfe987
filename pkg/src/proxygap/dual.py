"""Certified upper bounds on constrained maximum entropy via Lagrangian
duality, entropy gaps, detection windows, and the PPT minimum energy.

The reduced von Neumann dual is

    l(mu, nu_i, X_A) = ln tr exp(mu H + sum_i nu_i W_i + sum_A X_A^(T_A)) - mu E

minimized over mu real, nu_i >= 0, X_A PSD.  Any feasible point is a
valid certificate (weak duality), so even a non-converged minimization
yields a usable upper bound.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.special import logsumexp

from .linalg import (Bipartition, HermitianOperator, LinalgError,
                     partial_transpose_matrix, psd_project_matrix)
from .models import (SectorBlocks, is_translation_invariant,
                     momentum_sector_split, sector_split_sparse)
from .thermo import GibbsCurve, beta_from_energy, gibbs_at, linear_entropy_max
from .witness import ConstraintSet, Witness

GAP_TOLERANCE = 1e-4       # nats; "detected" threshold, von Neumann path
GAP_TOLERANCE_LINEAR = 1e-6  # the quadratic dual converges to ~1e-11


@dataclass
class DualPoint:
    mu: float
    nus: np.ndarray
    xs: list  # PSD matrices aligned with cs.map_slots

    def copy(self) -> "DualPoint":
        return DualPoint(self.mu, np.array(self.nus, dtype=float),
                         [np.array(x) for x in self.xs])


@dataclass
class SolveInfo:
    converged: bool
    iterations: int
    grad_norm: float


@dataclass
class ScanRow:
    e: float
    beta: float
    s_gibbs: float
    s_dual: float
    delta_s: float
    detected: bool
    converged: bool = True


@dataclass
class GapScanResult:
    rows: list
    e0: float
    e_max: float
    e_min_gap: float | None
    e_max_gap: float | None
    detection_fraction: float


def _operator_matrix(h) -> np.ndarray:
    if isinstance(h, HermitianOperator):
        return h.entries
    if sp.issparse(h):
        return h.toarray()
    return np.asarray(h)


def _local_dims(h, dim: int):
    if isinstance(h, HermitianOperator):
        return h.local_dims
    n = int(round(np.log2(dim)))
    if 2 ** n == dim:
        return (2,) * n
    return (dim,)


def _build_exponent(hmat, cs: ConstraintSet, dims, p: DualPoint) -> np.ndarray:
    m = p.mu * hmat
    for nu, w in zip(p.nus, cs.witnesses):
        if nu != 0.0:
            m = m + nu * w.to_dense()
    for x, cut in zip(p.xs, cs.map_slots):
        m = m + partial_transpose_matrix(x, dims, cut.subset_mask)
    return (m + m.conj().T) / 2


def wcee_value_grad(h, cs: ConstraintSet, e: float, p: DualPoint):
    """Value and gradients of the reduced von Neumann dual at `p`.

    Returns (value, grad_mu, grad_nus, grad_xs); the gradients are those
    of the witness-canonical-ensemble state sigma = exp(M)/tr exp(M):
    d/dmu = tr(sigma H) - E, d/dnu_i = tr(sigma W_i),
    d/dX_A = partial transpose of sigma on A.
    """
    hmat = _operator_matrix(h)
    dims = _local_dims(h, hmat.shape[0])
    m = _build_exponent(hmat, cs, dims, p)
    w, v = np.linalg.eigh(m)
    shift = w.max()
    ew = np.exp(w - shift)
    z = ew.sum()
    value = np.log(z) + shift - p.mu * e
    sigma = (v * (ew / z)) @ v.conj().T
    gmu = float(np.real(np.sum(sigma.T * hmat))) - e
    gnus = np.array([float(np.real(np.sum(sigma.T * wi.to_dense())))
                     for wi in cs.witnesses])
    gxs = [partial_transpose_matrix(sigma, dims, cut.subset_mask)
           for cut in cs.map_slots]
    return float(value), gmu, gnus, gxs


# ---------------------------------------------------------------------------
# block-diagonal objective (witness-only constraint sets)

class _BlockObjective:
    """l(mu, nu) over magnetization blocks.  Blocks with no witness
    support contribute through their fixed spectra only."""

    def __init__(self, h_blocks, w_blocks, e):
        # h_blocks: list of dense Hermitian blocks
        # w_blocks: list (per witness) of lists of blocks (None if zero)
        self.e = e
        self.n_wit = len(w_blocks)
        self.active = []    # (h_block, [w_block per witness])
        self.free_eigs = []
        for bi, hb in enumerate(h_blocks):
            wbs = [wb[bi] for wb in w_blocks]
            if any(wb is not None and np.abs(wb).max() > 0 for wb in wbs):
                wbs = [wb if wb is not None else np.zeros_like(hb)
                       for wb in wbs]
                self.active.append((hb, wbs))
            else:
                self.free_eigs.append(np.linalg.eigvalsh(hb))

    def value_grad(self, x):
        mu, nus = x[0], x[1:]
        exps = []     # exponent eigenvalues per block
        hds = []      # diag of H in the eigenbasis per block
        wds = []      # per witness
        for w_free in self.free_eigs:
            exps.append(mu * w_free)
            hds.append(w_free)
            wds.append(np.zeros((self.n_wit, w_free.size)))
        for hb, wbs in self.active:
            m = mu * hb
            for nu, wb in zip(nus, wbs):
                m = m + nu * wb
            w, v = np.linalg.eigh(m)
            exps.append(w)
            hds.append(np.real(np.einsum("ij,jk,ki->i", v.conj().T, hb, v)))
            wds.append(np.array(
                [np.real(np.einsum("ij,jk,ki->i", v.conj().T, wb, v))
                 for wb in wbs]))
        allw = np.concatenate(exps)
        shift = allw.max()
        ew = np.exp(allw - shift)
        z = ew.sum()
        value = np.log(z) + shift - mu * self.e
        probs = ew / z
        hd = np.concatenate(hds)
        gmu = float(probs @ hd) - self.e
        if self.n_wit:
            wd = np.concatenate(wds, axis=1)
            gnus = wd @ probs
        else:
            gnus = np.zeros(0)
        return float(value), np.concatenate(([gmu], gnus))


def _blocks_for(h, cs: ConstraintSet):
    """Try to express H and all witnesses as magnetization blocks.
    Returns (h_blocks, w_blocks, indices) or None."""
    if cs.map_slots:
        return None
    if isinstance(h, HermitianOperator):
        if any(d != 2 for d in h.local_dims):
            return None
        n = h.n_sites
        hs = sp.csr_matrix(h.entries)
    elif sp.issparse(h):
        n = int(round(np.log2(h.shape[0])))
        if 2 ** n != h.shape[0]:
            return None
        hs = h.tocsr()
    else:
        return None
    w_sparse = [w.matrix.tocsr() for w in cs.witnesses]
    try:
        sb = sector_split_sparse(hs, n)
        w_sb = [sector_split_sparse(ws, n) for ws in w_sparse]
    except Exception:
        return None
    # refine by momentum when everything is translation invariant
    try:
        ops = [hs] + w_sparse
        if all(is_translation_invariant(o, n) for o in ops):
            fine = momentum_sector_split(ops, n)
            h_blocks = [bl[0] for bl in fine]
            w_blocks = [[bl[1 + i] for bl in fine]
                        for i in range(len(w_sparse))]
            return h_blocks, w_blocks, None
    except LinalgError:
        pass
    h_blocks = [s.block for s in sb.sectors]
    w_blocks = [[s.block for s in wsb.sectors] for wsb in w_sb]
    return h_blocks, w_blocks, [s.indices for s in sb.sectors]


# ---------------------------------------------------------------------------
# projected minimization

def _pack(p: DualPoint) -> np.ndarray:
    parts = [np.array([p.mu]), np.asarray(p.nus, dtype=float)]
    for x in p.xs:
        parts.append(np.ascontiguousarray(x, dtype=complex).view(float).ravel())
    return np.concatenate(parts)


def _unpack(vec: np.ndarray, n_wit: int, x_dims) -> DualPoint:
    mu = vec[0]
    nus = vec[1:1 + n_wit].copy()
    xs = []
    off = 1 + n_wit
    for d in x_dims:
        size = 2 * d * d
        xs.append(vec[off:off + size].copy().view(complex).reshape(d, d))
        off += size
    return DualPoint(float(mu), nus, xs)


def _project_vec(vec, n_wit, x_dims):
    out = vec.copy()
    out[1:1 + n_wit] = np.maximum(out[1:1 + n_wit], 0.0)
    off = 1 + n_wit
    for d in x_dims:
        size = 2 * d * d
        x = out[off:off + size].copy().view(complex).reshape(d, d)
        x = psd_project_matrix(x)
        out[off:off + size] = np.ascontiguousarray(x).view(float).ravel()
        off += size
    return out


def _spg(fun_grad, x0, project, tol=1e-7, max_iter=2000, memory=10):
    """Spectral projected gradient (Barzilai-Borwein steps, nonmonotone
    Armijo line search) for smooth convex objectives over a convex set."""
    x = project(x0)
    f, g = fun_grad(x)
    hist = [f]
    alpha = 1.0 / max(np.linalg.norm(g), 1e-8)
    best_x, best_f = x.copy(), f
    it = 0
    pg_norm = np.inf
    for it in range(1, max_iter + 1):
        pg_norm = np.linalg.norm(project(x - g) - x)
        if pg_norm <= tol:
            break
        d = project(x - alpha * g) - x
        dg = float(np.dot(d, g))
        if dg > -1e-18:
            alpha = max(alpha * 0.1, 1e-12)
            d = project(x - alpha * g) - x
            dg = float(np.dot(d, g))
            if dg > -1e-18:
                break
        lam = 1.0
        fmax = max(hist[-memory:])
        while True:
            xn = x + lam * d
            fn, gn = fun_grad(xn)
            if fn <= fmax + 1e-4 * lam * dg or lam < 1e-12:
                break
            lam *= 0.5
        s = xn - x
        y = gn - g
        sy = float(np.dot(s, y))
        ss = float(np.dot(s, s))
        alpha = min(max(ss / sy, 1e-12), 1e8) if sy > 1e-18 else alpha * 2.0
        x, f, g = xn, fn, gn
        hist.append(f)
        if f < best_f:
            best_f, best_x = f, x.copy()
    if f > best_f:
        x, f = best_x, best_f
        _, g = fun_grad(x)
        pg_norm = np.linalg.norm(project(x - g) - x)
    return x, f, SolveInfo(pg_norm <= tol * 10, it, float(pg_norm))


@dataclass
class SolverOptions:
    tol: float = 1e-7
    max_iter: int = 2000


def minimize_dual(h, cs: ConstraintSet, e: float, opts: SolverOptions = None,
                  init: DualPoint = None, spectrum=None):
    """Minimize the von Neumann dual; returns (s_upper, point, info).

    Starts from the Gibbs point (mu = -beta(E), nu = X = 0) so the initial
    value equals S_Gibbs(E) and descent only improves the certificate.
    Witness-only constraint sets on magnetization-conserving Hamiltonians
    are solved blockwise with scalar variables.
    """
    opts = opts or SolverOptions()
    if spectrum is None:
        hmat = _operator_matrix(h)
        spectrum = np.linalg.eigvalsh(hmat)
    mu0 = -beta_from_energy(spectrum, e)
    n_wit = len(cs.witnesses)

    blocks = _blocks_for(h, cs) if not cs.map_slots else None
    if blocks is not None:
        obj = _BlockObjective(blocks[0], blocks[1], e)
        x0 = np.concatenate(([mu0], np.zeros(n_wit)))
        if init is not None:
            xi = np.concatenate(([init.mu], np.maximum(init.nus, 0.0)))
            if obj.value_grad(xi)[0] < obj.value_grad(x0)[0]:
                x0 = xi
        bounds = [(None, None)] + [(0.0, None)] * n_wit
        res = minimize(obj.value_grad, x0, jac=True, method="L-BFGS-B",
                       bounds=bounds,
                       options={"maxiter": opts.max_iter, "ftol": 1e-14,
                                "gtol": opts.tol})
        point = DualPoint(float(res.x[0]), np.maximum(res.x[1:], 0.0), [])
        value = obj.value_grad(np.concatenate(([point.mu], point.nus)))[0]
        info = SolveInfo(bool(res.success) or
                         np.linalg.norm(res.jac) <= 10 * opts.tol,
                         int(res.nit), float(np.linalg.norm(res.jac)))
        return value, point, info

    hmat = _operator_matrix(h)
    dims = _local_dims(h, hmat.shape[0])
    x_dims = [hmat.shape[0]] * len(cs.map_slots)

    def fun_grad(vec):
        p = _unpack(vec, n_wit, x_dims)
        val, gmu, gnus, gxs = wcee_value_grad(h, cs, e, p)
        gparts = [np.array([gmu]), gnus]
        for gx in gxs:
            gparts.append(np.ascontiguousarray(gx, dtype=complex)
                          .view(float).ravel())
        return val, np.concatenate(gparts)

    start = DualPoint(mu0, np.zeros(n_wit),
                      [np.zeros((d, d), dtype=complex) for d in x_dims])
    x0 = _pack(start)
    if init is not None and len(init.xs) == len(x_dims):
        xi = _project_vec(_pack(init), n_wit, x_dims)
        if fun_grad(xi)[0] < fun_grad(x0)[0]:
            x0 = xi
    x, f, info = _spg(fun_grad, x0,
                      lambda v: _project_vec(v, n_wit, x_dims),
                      tol=opts.tol, max_iter=opts.max_iter)
    return f, _unpack(x, n_wit, x_dims), info


def entropy_gap(h, cs: ConstraintSet, e: float, opts: SolverOptions = None,
                init: DualPoint = None, spectrum=None) -> float:
    """S_Gibbs(E) minus the dual upper bound; > 0 certifies entanglement."""
    if spectrum is None:
        spectrum = np.linalg.eigvalsh(_operator_matrix(h))
    beta = beta_from_energy(spectrum, e)
    s_gibbs = gibbs_at(spectrum, beta)[2]
    s_dual, _, _ = minimize_dual(h, cs, e, opts, init, spectrum=spectrum)
    return s_gibbs - s_dual


# ---------------------------------------------------------------------------
# linear-entropy dual

def _lin_value_grad(hmat, wmats, dims, cuts, e, vec):
    """Value/gradient of the linear-entropy dual with X0 minimized out.

    With C = lam*I + mu*H + sum nu_i W_i + sum X_A^(T_A), the optimal
    slack X0 = (C)_- cancels the negative part, leaving
    1/4 tr((C)_+^2) + 1 - lam - mu*E with gradient map G = (C)_+ / 2.
    """
    lam, mu = vec[0], vec[1]
    n_wit = len(wmats)
    nus = vec[2:2 + n_wit]
    d = hmat.shape[0]
    off = 2 + n_wit
    size = 2 * d * d
    xs = []
    for _ in cuts:
        xs.append(vec[off:off + size].copy().view(complex).reshape(d, d))
        off += size
    c = mu * hmat + np.diag(np.full(d, lam + 0j))
    for nu, w in zip(nus, wmats):
        c = c + nu * w
    for x, cut in zip(xs, cuts):
        c = c + partial_transpose_matrix(x, dims, cut.subset_mask)
    c = (c + c.conj().T) / 2
    w, v = np.linalg.eigh(c)
    wp = np.maximum(w, 0.0)
    value = 0.25 * float(wp @ wp) + 1.0 - lam - mu * e
    g = 0.5 * ((v * wp) @ v.conj().T)
    glam = float(np.real(np.trace(g))) - 1.0
    gmu = float(np.real(np.sum(g.T * hmat))) - e
    gnus = np.array([float(np.real(np.sum(g.T * wm))) for wm in wmats])
    gparts = [np.array([glam, gmu]), gnus]
    for cut in cuts:
        gx = partial_transpose_matrix(g, dims, cut.subset_mask)
        gparts.append(np.ascontiguousarray(gx).view(float).ravel())
    return value, np.concatenate(gparts)


def _fista(fun_grad, x0, project, tol=1e-9, max_iter=5000):
    """Accelerated projected gradient with backtracking and adaptive
    restart, for smooth convex objectives over a convex set."""
    x = project(x0)
    f, g = fun_grad(x)
    y, t = x, 1.0
    lip = max(np.linalg.norm(g), 1.0)
    best_x, best_f = x.copy(), f
    fy, gy = f, g
    pg_norm = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        while True:
            xn = project(y - gy / lip)
            s = xn - y
            fn, gn = fun_grad(xn)
            if fn <= fy + float(gy @ s) + 0.5 * lip * float(s @ s) + 1e-15:
                break
            lip *= 2.0
        pg_norm = lip * np.linalg.norm(xn - y)
        if fn < best_f:
            best_f, best_x = fn, xn.copy()
        if pg_norm <= tol and it > 1:
            x = xn
            break
        tn = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        yn = xn + ((t - 1.0) / tn) * (xn - x)
        if float((y - xn) @ (xn - x)) > 0.0:  # restart the momentum
            yn, tn = xn, 1.0
        x, y, t = xn, yn, tn
        fy, gy = fun_grad(y)
        lip *= 0.9
    return best_x, best_f, SolveInfo(pg_norm <= tol * 10, it, float(pg_norm))


def lin_dual_minimize(h, cs: ConstraintSet, e: float,
                      opts: SolverOptions = None, init: np.ndarray = None):
    """Upper bound on the maximal constrained linear entropy (impurity).

    Minimizes 1/4 tr(lam*I + mu*H + sum nu_i W_i + X0 + sum X_A^(T_A))^2
    + 1 - lam - mu*E over lam, mu real, nu >= 0, X0 and X_A PSD; the slack
    X0 is eliminated in closed form.  Returns (value, vec, info); pass the
    vec back as `init` to warm-start a nearby solve."""
    opts = opts or SolverOptions(tol=1e-9, max_iter=5000)
    hmat = _operator_matrix(h)
    dims = _local_dims(h, hmat.shape[0])
    d = hmat.shape[0]
    wmats = [w.to_dense() for w in cs.witnesses]
    cuts = list(cs.map_slots)
    n_wit = len(wmats)

    def fun_grad(vec):
        return _lin_value_grad(hmat, wmats, dims, cuts, e, vec)

    def project(vec):
        out = vec.copy()
        out[2:2 + n_wit] = np.maximum(out[2:2 + n_wit], 0.0)
        off = 2 + n_wit
        for _ in cuts:
            size = 2 * d * d
            x = out[off:off + size].copy().view(complex).reshape(d, d)
            out[off:off + size] = np.ascontiguousarray(
                psd_project_matrix(x)).view(float).ravel()
            off += size
        return out

    # start at the unconstrained impurity maximizer, rho* = (lam*I + mu*H)/2
    x0 = np.zeros(2 + n_wit + len(cuts) * 2 * d * d)
    from .thermo import _linear_entropy_weights
    spec = np.linalg.eigvalsh(hmat)
    p = _linear_entropy_weights(spec, float(np.clip(e, spec.min(),
                                                    spec.mean())))
    sup = p > 0
    if sup.sum() >= 2:
        a = np.polyfit(spec[sup], p[sup], 1)
        x0[0], x0[1] = 2.0 * a[1], 2.0 * a[0]
    else:
        x0[0] = 2.0 / d
    if init is not None and init.size == x0.size:
        pi = project(init)
        if fun_grad(pi)[0] < fun_grad(x0)[0]:
            x0 = pi
    vec, f, info = _fista(fun_grad, x0, project, tol=opts.tol,
                          max_iter=opts.max_iter)
    return f, vec, info


# ---------------------------------------------------------------------------
# energy scans

@dataclass
class GridOptions:
    n_points: int = 40
    e_lo: float | None = None
    e_hi: float | None = None
    bisect_iters: int = 40
    gap_tolerance: float | None = None  # default depends on the entropy kind
    entropy: str = "von-neumann"  # or "linear"

    def resolved_gap_tolerance(self) -> float:
        if self.gap_tolerance is not None:
            return self.gap_tolerance
        return (GAP_TOLERANCE_LINEAR if self.entropy.startswith("lin")
                else GAP_TOLERANCE)


def gap_energy_scan(h, cs: ConstraintSet, grid: GridOptions = None,
                    opts: SolverOptions = None,
                    spectrum=None) -> GapScanResult:
    """Scan the energy axis, record the entropy gap per point, and locate
    the detection window edges by bisection on gap = gap_tolerance."""
    grid = grid or GridOptions()
    lin_opts = opts  # None lets lin_dual_minimize pick its tighter default
    opts = opts or SolverOptions()
    if spectrum is None:
        blocks = _blocks_for(h, cs)
        if blocks is not None:
            spectrum = np.sort(np.concatenate(
                [np.linalg.eigvalsh(b) for b in blocks[0]]))
        else:
            spectrum = np.linalg.eigvalsh(_operator_matrix(h))
    e0 = float(spectrum.min())
    e_top = float(spectrum.max())
    e_inf = float(spectrum.mean())
    spread = e_inf - e0
    lo = grid.e_lo if grid.e_lo is not None else e0 + 1e-6 * spread
    hi = grid.e_hi if grid.e_hi is not None else e_inf
    linear = grid.entropy.startswith("lin")
    gap_tol = grid.resolved_gap_tolerance()

    state = {"init": None, "lin_init": None}

    def gap_at(e):
        if linear:
            s_ref = linear_entropy_max(spectrum, e)
            s_dual, vec, info = lin_dual_minimize(h, cs, e, lin_opts,
                                                  init=state["lin_init"])
            state["lin_init"] = vec
            conv = info.converged
        else:
            s_ref = gibbs_at(spectrum, beta_from_energy(spectrum, e))[2]
            s_dual, point, info = minimize_dual(h, cs, e, opts,
                                                init=state["init"],
                                                spectrum=spectrum)
            state["init"] = point
            conv = info.converged
        return s_ref, s_dual, conv

    rows = []
    for e in np.linspace(lo, hi, grid.n_points):
        beta = beta_from_energy(spectrum, e)
        s_ref, s_dual, conv = gap_at(e)
        delta = s_ref - s_dual
        rows.append(ScanRow(float(e), float(beta), s_ref, s_dual, delta,
                            delta > gap_tol, conv))

    detected = [r.detected for r in rows]
    e_min_gap = e_max_gap = None
    if any(detected):
        first = detected.index(True)
        last = len(detected) - 1 - detected[::-1].index(True)

        def bisect(e_out, e_in):
            # gap(e_in) > tol, gap(e_out) <= tol
            for _ in range(grid.bisect_iters):
                mid = 0.5 * (e_out + e_in)
                s_ref, s_dual, _ = gap_at(mid)
                if s_ref - s_dual > gap_tol:
                    e_in = mid
                else:
                    e_out = mid
                if abs(e_in - e_out) < 1e-10 * max(abs(spread), 1.0):
                    break
            return 0.5 * (e_out + e_in)

        e_min_gap = rows[first].e if first == 0 else \
            bisect(rows[first - 1].e, rows[first].e)
        e_max_gap = rows[last].e if last == len(rows) - 1 else \
            bisect(rows[last + 1].e, rows[last].e)
    frac = 0.0 if e_max_gap is None else (e_max_gap - e0) / (e_top - e0)
    return GapScanResult(rows, e0, e_top, e_min_gap, e_max_gap, float(frac))


# ---------------------------------------------------------------------------
# PPT minimum energy (consensus ADMM with a dual certificate)

@dataclass
class PPTResult:
    value: float            # certified lower bound on min tr(rho H)
    primal_value: float
    residual: float         # primal-dual gap
    converged: bool
    rho: np.ndarray


def _simplex_project(w: np.ndarray) -> np.ndarray:
    """Euclidean projection of eigenvalues onto the probability simplex."""
    u = np.sort(w)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, w.size + 1)
    cond = u - css / k > 0
    rho = k[cond][-1]
    theta = css[cond][-1] / rho
    return np.maximum(w - theta, 0.0)


def _density_project(m: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((m + m.conj().T) / 2)
    return (v * _simplex_project(w)) @ v.conj().T


def ppt_energy_min(h, cuts, sigma: float = None, tol: float = 1e-9,
                   cert_tol: float = 1e-5, max_iter: int = 20000) -> PPTResult:
    """min tr(rho H) over states PSD under partial transposition on every
    cut, by first-order operator splitting (consensus ADMM: alternating
    projections onto the density and PT-PSD sets), certified by a dual
    feasibility bound with gap <= cert_tol."""
    hmat = _operator_matrix(h)
    dims = _local_dims(h, hmat.shape[0])
    cuts = list(cuts)
    d = hmat.shape[0]
    n_c = len(cuts)
    scale = max(np.abs(hmat).max(), 1.0)
    sigma = sigma if sigma is not None else float(scale)
    z0 = np.eye(d, dtype=complex) / d
    za = [z0.copy() for _ in cuts]
    u0 = np.zeros((d, d), dtype=complex)
    ua = [np.zeros((d, d), dtype=complex) for _ in cuts]
    rho = z0.copy()
    best = None
    for it in range(1, max_iter + 1):
        acc = (z0 - u0) - hmat / sigma
        for zi, ui, cut in zip(za, ua, cuts):
            acc = acc + partial_transpose_matrix(zi - ui, dims,
                                                 cut.subset_mask)
        rho = acc / (1.0 + n_c)
        z0_new = _density_project(rho + u0)
        za_new = [psd_project_matrix(
            partial_transpose_matrix(rho, dims, c.subset_mask) + ui)
            for ui, c in zip(ua, cuts)]
        u0 = u0 + rho - z0_new
        ua = [ui + partial_transpose_matrix(rho, dims, c.subset_mask) - zi
              for ui, zi, c in zip(ua, za_new, cuts)]
        r_prim = np.linalg.norm(rho - z0_new)
        for zi, c in zip(za_new, cuts):
            r_prim = max(r_prim, np.linalg.norm(
                partial_transpose_matrix(rho, dims, c.subset_mask) - zi))
        z0, za = z0_new, za_new
        if it % 50 == 0 or r_prim < tol:
            # z0 is a state by construction; its PT-PSD violation plus the
            # primal-dual gap form the certificate residual
            primal = float(np.real(np.sum(z0.T * hmat)))
            viol = 0.0
            for c in cuts:
                wmin = np.linalg.eigvalsh(partial_transpose_matrix(
                    z0, dims, c.subset_mask))[0]
                viol = max(viol, float(-wmin))
            ys = [psd_project_matrix(-sigma * ui) for ui in ua]
            g = hmat.copy()
            for y, c in zip(ys, cuts):
                g = g - partial_transpose_matrix(y, dims, c.subset_mask)
            lower = float(np.linalg.eigvalsh((g + g.conj().T) / 2)[0])
            resid = max(primal - lower, 0.0) + viol * scale
            if best is None or resid < best.residual:
                best = PPTResult(lower, primal, resid, resid <= cert_tol, z0)
            if resid <= cert_tol:
                return best
    return replace(best, converged=best.residual <= cert_tol)


# ---------------------------------------------------------------------------
# diagonal (ground-state witness) dual

def diagonal_dual(spectrum, alpha: float, ground_count: int, e: float,
                  tol: float = 1e-9):
    """Minimize ln sum_i exp(mu E_i + nu (alpha - delta_i)) - mu E over
    mu real, nu >= 0, where delta_i = 1 on the first `ground_count`
    entries of the ascending spectrum.  Returns (s_upper, mu*, nu*)."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    w = np.sort(np.asarray(spectrum, dtype=float))
    delta = np.zeros(w.size)
    delta[:ground_count] = 1.0

    def value_grad(x):
        mu, nu = x
        a = mu * w + nu * (alpha - delta)
        shift = a.max()
        ew = np.exp(a - shift)
        z = ew.sum()
        p = ew / z
        val = np.log(z) + shift - mu * e
        return val, np.array([p @ w - e, p @ (alpha - delta)])

    mu0 = -beta_from_energy(w, e)
    res = minimize(value_grad, np.array([mu0, 0.0]), jac=True,
                   method="L-BFGS-B", bounds=[(None, None), (0.0, None)],
                   options={"ftol": 1e-16, "gtol": 1e-12, "maxiter": 5000})
    mu, nu = res.x
    nu = max(nu, 0.0)
    # Newton polish on the active variables
    for _ in range(50):
        x = np.array([mu, nu])
        val, g = value_grad(x)
        a = mu * w + nu * (alpha - delta)
        shift = a.max()
        ew = np.exp(a - shift)
        p = ew / ew.sum()
        fe = np.vstack([w, alpha - delta])
        mean = fe @ p
        cov = (fe * p) @ fe.T - np.outer(mean, mean)
        active = nu > 0 or g[1] < 0
        if active:
            try:
                step = np.linalg.solve(cov + 1e-15 * np.eye(2), g)
            except np.linalg.LinAlgError:
                break
            mu, nu = mu - step[0], nu - step[1]
            nu = max(nu, 0.0)
        else:
            if cov[0, 0] <= 0:
                break
            mu = mu - g[0] / cov[0, 0]
        if np.abs(g).max() < tol / 10:
            break
    val, g = value_grad(np.array([mu, nu]))
    return float(val), float(mu), float(nu)


def theorem3_check(alpha: float, beta: float, spectrum) -> bool:
    """True when ln(alpha) < -beta*E0 - lnZ, i.e. the ground-state
    witness detects the Gibbs state at inverse temperature beta."""
    w = np.asarray(spectrum, dtype=float)
    lnz = logsumexp(-beta * w)
    return bool(np.log(alpha) < -beta * w.min() - lnz)


# ---------------------------------------------------------------------------
# entropy-gap lower bounds

def gap_lower_bound(h, cs: ConstraintSet, beta: float, p: DualPoint) -> float:
    """ln [tr exp(-beta H) / tr exp(-beta H + sum nu_i W_i + sum X^(T_A))]
    for any feasible (nu >= 0, X PSD); no optimization involved."""
    if np.any(np.asarray(p.nus) < -1e-12):
        raise ValueError("witness multipliers must be nonnegative")
    hmat = _operator_matrix(h)
    dims = _local_dims(h, hmat.shape[0])
    w0 = np.linalg.eigvalsh(hmat)
    pt = DualPoint(-beta, np.asarray(p.nus, dtype=float), list(p.xs))
    m = _build_exponent(hmat, cs, dims, pt)
    w1 = np.linalg.eigvalsh(m)
    return float(logsumexp(-beta * w0) - logsumexp(w1))


def bell_gap_bound(beta: float, d: float, nu: float) -> float:
    """Closed-form entropy-gap lower bound for the Bell-staircase model,
    evaluated in log space from geometric sums; valid for any d >= 2,
    beta > 0, nu >= 0 and never materializes matrices."""
    if d < 2 or beta <= 0 or nu < 0:
        raise ValueError("need d >= 2, beta > 0, nu >= 0")
    d = float(d)

    def ln_geom(n_terms: float) -> float:
        # ln sum_{k=0}^{n_terms-1} e^{-beta k}
        x = beta * n_terms
        num = np.log1p(-np.exp(-x)) if x < 700 else 0.0
        return num - np.log1p(-np.exp(-beta))

    ln_all = ln_geom(d * d)
    ln_first = ln_geom(d)
    ln_tail_body = ln_geom(d * d - d)
    ln_tail = -beta * d + ln_tail_body
    ln_den = np.logaddexp(ln_first - nu * (1.0 - 1.0 / d),
                          ln_tail + nu / d)
    return float(ln_all - ln_den)


# ---------------------------------------------------------------------------
# sensitivity of the certificate to Hamiltonian perturbations

def perturbation_sensitivity(h, p_op, eps: float, cs: ConstraintSet,
                             e: float, opts: SolverOptions = None):
    """Re-minimize the dual for H + eps*P and compare with the conservative
    envelope 2 |mu*| eps ||P||_inf; returns (delta_value, bound)."""
    hmat = _operator_matrix(h)
    pmat = _operator_matrix(p_op)
    v0, point, _ = minimize_dual(h, cs, e, opts)
    hp = hmat + eps * pmat
    v1, _, _ = minimize_dual(HermitianOperator(hp, _local_dims(h, hmat.shape[0])),
                             cs, e, opts, init=point)
    delta = abs(v1 - v0)
    p_norm = float(np.abs(np.linalg.eigvalsh(pmat)).max())
    bound = 2.0 * abs(point.mu) * abs(eps) * p_norm + 1e-9
    if delta > bound:
        raise AssertionError(
            f"sensitivity {delta} exceeds envelope {bound}")
    return float(delta), float(bound)
