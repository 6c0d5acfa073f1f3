"""Optimal supports: relaxed density descent, thresholding, penalized
single-cell local search, the penalty/volume bisection and a brute-force
enumeration oracle."""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .domain import GridDomain, Support
from .spectral import (
    SpectralResult,
    assemble_laplacian,
    cell_index,
    dense_eigen_oracle,
    dense_laplacian,
    eigenpair_on_cells,
    neighbor_count,
    smallest_eigenpair,
    smallest_eigenvalues_batch,
)

log = logging.getLogger(__name__)

ENUMERATION_BUDGET = 10_000_000


@dataclass(frozen=True, eq=False)
class DensityField:
    domain: GridDomain
    phi: np.ndarray
    a: float
    c_pen: float
    lam: float = float("nan")
    u: Optional[np.ndarray] = None
    history: list = field(default_factory=list)

    @property
    def mass(self) -> float:
        return float(np.sum(self.phi)) * self.domain.cell_area


@dataclass(frozen=True, eq=False)
class OptimizeResult:
    support: Support
    spectral: SpectralResult
    lambda_penalty: float
    history: list = field(default_factory=list)

    @property
    def objective(self) -> float:
        return self.spectral.lam + self.lambda_penalty * self.support.volume


def _check_target(domain: GridDomain, a: float):
    if not 0.0 < a <= domain.volume * (1 + 1e-12):
        raise ValueError(f"a out of range (0, |D|): a={a!r}, |D|={domain.volume!r}")


# ---------------------------------------------------------------------------
# relaxed density descent


def project_density(phi: np.ndarray, mask: np.ndarray, a: float, h: float) -> np.ndarray:
    """Euclidean projection onto {0 <= phi <= 1 on D, phi = 0 off D, sum phi h^2 = a}
    by bisection on a scalar shift."""
    target = a / (h * h)
    vals = phi[mask]
    lo = -1.0 - vals.max()
    hi = 1.0 - vals.min()
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        s = np.clip(vals + mid, 0.0, 1.0).sum()
        if s < target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-15:
            break
    out = np.zeros_like(phi)
    out[mask] = np.clip(vals + 0.5 * (lo + hi), 0.0, 1.0)
    return out


def _relaxed_eigen(domain, phi, c_pen, x0, lam_box):
    extra = c_pen * (1.0 - phi)
    # lambda_1(L) + min reaction bounds the spectrum from below
    shift = 0.99 * lam_box + float(extra[domain.mask].min())
    lam, u, _, _ = eigenpair_on_cells(
        domain.mask, domain.h, tol=1e-11, x0=x0, solver="lu", diag_extra=extra, shift=shift
    )
    return lam, u


def relaxed_descent(
    domain: GridDomain,
    a: float,
    c_pen: Optional[float] = None,
    steps: int = 400,
    step0: Optional[float] = None,
    seed: int = 0,
    stall_window: int = 10,
    stall_rtol: float = 1e-8,
) -> DensityField:
    """Projected descent on the fictitious-domain eigenvalue
    lambda(phi) = min spectrum of (L + c_pen (1 - phi)).

    Steps follow +c_pen u^2 (the negative eigenvalue gradient), are projected
    back onto the volume-constrained box and halved until lambda decreases;
    each accepted step doubles the next trial step.
    """
    _check_target(domain, a)
    h = domain.h
    mask = domain.mask
    lam_box = smallest_eigenpair(domain, domain.full_support(), tol=1e-8).lam
    if c_pen is None:
        c_pen = 1e4 * lam_box
    full = a >= domain.volume * (1 - 1e-12)
    if full:
        phi = mask.astype(float)
    else:
        phi = project_density(np.where(mask, a / domain.volume, 0.0), mask, a, h)
    lam, u = _relaxed_eigen(domain, phi, c_pen, None, lam_box)
    history = [(0, lam, float(phi.sum()) * h * h, lam)]
    if full:
        return DensityField(domain, phi, a, c_pen, lam, u, history)
    accepted = [lam]
    s = None
    for it in range(1, steps + 1):
        g = c_pen * u * u
        if s is None:
            s = (0.1 * a / g[mask].max()) if step0 is None else step0
        improved = False
        for _ in range(40):
            trial = project_density(phi + s * g, mask, a, h)
            lam_t, u_t = _relaxed_eigen(domain, trial, c_pen, u, lam_box)
            if lam_t < lam - 1e-12 * abs(lam):
                improved = True
                break
            s *= 0.5
        if not improved:
            log.debug("relaxed descent stalled at step %d", it)
            break
        phi, lam, u = trial, lam_t, u_t
        s *= 2.0
        history.append((it, lam, float(phi.sum()) * h * h, lam))
        accepted.append(lam)
        if len(accepted) > stall_window:
            ref = accepted[-1 - stall_window]
            if abs(ref - lam) < stall_rtol * abs(lam):
                break
    return DensityField(domain, phi, a, c_pen, lam, u, history)


def threshold(density: DensityField, break_ties: bool = False) -> Support:
    """Superlevel set {phi >= theta} with the smallest volume not below a.

    All cells tied at theta are kept (so |volume - a| is at most the tied
    count times h^2).  With ``break_ties`` exactly ceil(a/h^2) cells are
    taken, tied cells in row-major order.
    """
    domain = density.domain
    mask = domain.mask
    flat = np.flatnonzero(mask.ravel())
    vals = density.phi.ravel()[flat]
    m = int(math.ceil(density.a / domain.cell_area - 1e-9))
    m = min(max(m, 1), flat.size)
    order = np.argsort(-vals, kind="stable")
    cells = np.zeros(mask.size, dtype=bool)
    if break_ties:
        cells[flat[order[:m]]] = True
    else:
        theta = vals[order[m - 1]]
        cells[flat[vals >= theta]] = True
    return Support(domain, cells.reshape(mask.shape))


# ---------------------------------------------------------------------------
# exact single-cell flip evaluation

DENSE_LIMIT = 300


def boundary_candidates(cells: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Support cells with a non-support 4-neighbor and admissible non-support
    cells with a support 4-neighbor, as flat row-major indices."""
    inside_nb = neighbor_count(cells)
    outside_nb = 4 - neighbor_count(np.pad(cells, 1, constant_values=False))[1:-1, 1:-1]
    inner = cells & (outside_nb > 0)
    outer = mask & ~cells & (inside_nb > 0)
    return np.flatnonzero((inner | outer).ravel())


class FlipEvaluator:
    """lambda_1 of ``cells`` with one cell toggled, for a fixed base support.

    Small supports use a dense symmetric eigensolver.  Large ones run
    warm-started inverse iteration on the toggled matrix, with solves done
    through one sparse factorization of the base matrix plus a rank-2
    Sherman-Morrison-Woodbury correction.
    """

    def __init__(self, mask: np.ndarray, cells: np.ndarray, h: float, lam: float, u: np.ndarray):
        self.mask = mask
        self.cells = cells
        self.h = h
        self.lam = lam
        self.u = u
        self.count = int(cells.sum())
        self.dense = self.count + 1 <= DENSE_LIMIT
        if not self.dense:
            self._factor()

    def _factor(self):
        h2 = self.h**2
        band = self.mask & ~self.cells & (neighbor_count(self.cells) > 0)
        region = self.cells | band
        flat, inv = cell_index(region)
        self.region_flat, self.region_inv = flat, inv
        self.d_band = 8.0 / h2
        extra = np.where(band, self.d_band - 4.0 / h2, 0.0)
        # band cells must be decoupled: assemble on the support, then add
        A = assemble_laplacian(region, self.h, extra)
        A = A.tocoo()
        in_cells = self.cells.ravel()[flat]
        keep = (A.row == A.col) | (in_cells[A.row] & in_cells[A.col])
        A = sp.csr_matrix((A.data[keep], (A.row[keep], A.col[keep])), shape=A.shape)
        self.A = A
        self.sigma = self.lam * (1.0 - 0.02)
        self.lu = splu(sp.csc_matrix(A - self.sigma * sp.identity(A.shape[0])))
        self.x_base = self.u.ravel()[flat]

    def evaluate(self, k: int) -> tuple[float, Optional[np.ndarray]]:
        """Return (lambda of the toggled support, its eigenfield or None)."""
        i, j = divmod(k, self.cells.shape[1])
        new = self.cells.copy()
        new[i, j] = not new[i, j]
        if not new.any():
            return math.inf, None
        if self.dense:
            A = dense_laplacian(new, self.h)
            return float(np.linalg.eigvalsh(A)[0]), None
        return self._smw(i, j, new)

    def eigenfield(self, cells: np.ndarray) -> tuple[float, np.ndarray]:
        A = dense_laplacian(cells, self.h)
        w, V = np.linalg.eigh(A)
        flat, _ = cell_index(cells)
        u = np.zeros(cells.size)
        u[flat] = np.abs(V[:, 0])
        u = u.reshape(cells.shape)
        return float(w[0]), u / math.sqrt(np.sum(u * u) * self.h**2)

    def _smw(self, i, j, new):
        h2 = self.h**2
        inv = self.region_inv
        k = inv[i, j]
        removing = bool(self.cells[i, j])
        nb = []
        nx, ny = self.cells.shape
        for a, b in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
            if 0 <= a < nx and 0 <= b < ny and self.cells[a, b]:
                nb.append(inv[a, b])
        n = self.A.shape[0]
        delta = (self.d_band - 4.0 / h2) * (1 if removing else -1)
        s = (1.0 / h2) * (1 if removing else -1)
        if nb:
            U = np.zeros((n, 2))
            U[k, 0] = 1.0
            U[nb, 1] = 1.0
            C = np.array([[delta, s], [s, 0.0]])
        else:
            U = np.zeros((n, 1))
            U[k, 0] = 1.0
            C = np.array([[delta]])
        Z = self.lu.solve(U)
        K = np.linalg.inv(C) + U.T @ Z

        def solve(b):
            y = self.lu.solve(b)
            return y - Z @ np.linalg.solve(K, U.T @ y)

        def apply(x):
            return self.A @ x + U @ (C @ (U.T @ x))

        x = self.x_base.copy()
        if removing:
            x[k] = 0.0
        else:
            x[k] = 0.5 * (np.mean(self.x_base[nb]) if nb else 1.0)
        x /= np.linalg.norm(x)
        lam_old = float(x @ apply(x))
        lam_new = lam_old
        for _ in range(80):
            y = solve(x)
            x = y / np.linalg.norm(y)
            Mx = apply(x)
            lam_new = float(x @ Mx)
            if abs(lam_new - lam_old) <= 1e-15 * abs(lam_new):
                res = np.linalg.norm(Mx - lam_new * x) / lam_new
                if res < 1e-7:
                    break
            lam_old = lam_new
        else:
            lam_new, u = eigenpair_on_cells(new, self.h, tol=1e-12)[:2]
            return lam_new, u
        u = np.zeros(self.cells.size)
        u[self.region_flat] = x
        u = u.reshape(self.cells.shape)
        u[~new] = 0.0
        u = np.abs(u)
        return lam_new, u / math.sqrt(np.sum(u * u) * h2)


def _current_pair(mask, cells, h, x0=None):
    if cells.sum() + 1 <= DENSE_LIMIT:
        ev = FlipEvaluator.__new__(FlipEvaluator)
        ev.h = h
        return ev.eigenfield(cells)
    lam, u, _, _ = eigenpair_on_cells(cells, h, tol=1e-12, x0=x0, solver="lu")
    return lam, u


def _local_search_cells(mask, cells, h, Lambda, sweep_limit, history, lam=None, u=None):
    cells = cells.copy()
    if lam is None:
        lam, u = _current_pair(mask, cells, h)
    h2 = h * h
    count = int(cells.sum())
    obj = lam + Lambda * count * h2
    history.append((0, lam, count * h2, obj, 0))
    ev = FlipEvaluator(mask, cells, h, lam, u)
    for sweep in range(1, sweep_limit + 1):
        accepted = 0
        for k in boundary_candidates(cells, mask):
            i, j = divmod(int(k), cells.shape[1])
            # skip cells that stopped being boundary-adjacent during the sweep
            if not _is_candidate(cells, mask, i, j):
                continue
            new_count = count + (-1 if cells[i, j] else 1)
            if new_count == 0:
                continue
            lam_new, u_new = ev.evaluate(int(k))
            obj_new = lam_new + Lambda * new_count * h2
            if obj - obj_new > 1e-12 * abs(obj):
                cells[i, j] = not cells[i, j]
                count = new_count
                if u_new is None:
                    lam, u = ev.eigenfield(cells)
                else:
                    lam, u = lam_new, u_new
                obj = lam + Lambda * count * h2
                accepted += 1
                ev = FlipEvaluator(mask, cells, h, lam, u)
        history.append((sweep, lam, count * h2, obj, accepted))
        if accepted == 0:
            break
    return cells, lam, u


def _is_candidate(cells, mask, i, j):
    nx, ny = cells.shape
    here = cells[i, j]
    if not here and not mask[i, j]:
        return False
    for a, b in ((i + 1, j), (i - 1, j), (i, j + 1), (i, j - 1)):
        other = cells[a, b] if (0 <= a < nx and 0 <= b < ny) else False
        if other != here:
            return True
    return False


def penalized_local_search(
    domain: GridDomain, Lambda: float, initial: Support, sweep_limit: int = 100
) -> OptimizeResult:
    """Minimize lambda_1(S) + Lambda |S| by single-cell flips of boundary
    cells, visited in row-major order; only strict improvements are taken."""
    if not Lambda > 0:
        raise ValueError("Lambda must be positive")
    if initial.count == 0:
        raise ValueError("empty support")
    history: list = []
    cells, _, _ = _local_search_cells(
        domain.mask, initial.cells, domain.h, Lambda, sweep_limit, history
    )
    support = Support(domain, cells)
    spectral = smallest_eigenpair(domain, support)
    return OptimizeResult(support, spectral, float(Lambda), history)


# ---------------------------------------------------------------------------
# penalty <-> volume


def default_volume_tolerance(support: Support) -> float:
    cells = support.cells
    pad = np.pad(cells, 1)
    perim = cells & (neighbor_count(pad)[1:-1, 1:-1] < 4)
    return support.domain.cell_area * max(4.0, perim.sum() / 10.0)


def lambda_volume_search(
    domain: GridDomain,
    a: float,
    bracket: Sequence[float],
    tol_vol: Optional[float] = None,
    initial: Optional[Support] = None,
    sweep_limit: int = 100,
    exact_volume: bool = False,
) -> OptimizeResult:
    """Bisect the penalty so that the penalized local optimum has volume a.

    Larger penalties give (weakly) smaller supports.  Each trial is seeded
    from the best support so far.  With ``exact_volume`` the best iterate is
    then trimmed or grown to exactly round(a/h^2) cells and polished by
    swap moves at fixed volume.
    """
    _check_target(domain, a)
    lo, hi = float(bracket[0]), float(bracket[1])
    h = domain.h
    h2 = h * h
    mask = domain.mask
    start = domain.full_support() if initial is None else initial
    history: list = []

    def trial(Lambda, seed_cells):
        rows: list = []
        cells, lam, u = _local_search_cells(mask, seed_cells, h, Lambda, sweep_limit, rows)
        vol = int(cells.sum()) * h2
        history.append((Lambda, lam, vol, lam + Lambda * vol, len(rows) - 1))
        return cells, lam, u, vol

    if not (lo > 0 and hi > 0):
        raise ValueError("bracket does not straddle: penalties must be positive")
    c_lo, l_lo, u_lo, v_lo = trial(lo, start.cells)
    c_hi, l_hi, u_hi, v_hi = trial(hi, c_lo)
    if tol_vol is None:
        tol_vol = default_volume_tolerance(Support(domain, c_lo))
    if not (v_lo >= a - tol_vol and v_hi <= a + tol_vol) or lo >= hi:
        raise ValueError(
            f"bracket does not straddle a={a!r}: volume({lo!r})={v_lo!r}, "
            f"volume({hi!r})={v_hi!r}"
        )
    cands = [(abs(v_lo - a), lo, c_lo), (abs(v_hi - a), hi, c_hi)]
    best = min(cands, key=lambda c: c[0])
    width0 = hi - lo
    while best[0] > tol_vol and (hi - lo) >= 1e-6 * width0:
        mid = math.sqrt(lo * hi)
        c_mid, _, _, v_mid = trial(mid, best[2])
        if v_mid > a:
            lo = mid
        else:
            hi = mid
        if abs(v_mid - a) < best[0]:
            best = (abs(v_mid - a), mid, c_mid)
    cells = best[2]
    if exact_volume:
        cells = _fix_volume(mask, cells, h, int(round(a / h2)))
        cells = _swap_polish(mask, cells, h)
    support = Support(domain, cells)
    spectral = smallest_eigenpair(domain, support)
    return OptimizeResult(support, spectral, best[1], history)


def _fix_volume(mask, cells, h, target):
    cells = cells.copy()
    while int(cells.sum()) != target:
        lam, u = _current_pair(mask, cells, h)
        ev = FlipEvaluator(mask, cells, h, lam, u)
        grow = int(cells.sum()) < target
        best = None
        for k in boundary_candidates(cells, mask):
            i, j = divmod(int(k), cells.shape[1])
            if bool(cells[i, j]) == grow:
                continue
            val, _ = ev.evaluate(int(k))
            if best is None or val < best[0] * (1 - 1e-12):
                best = (val, i, j)
        if best is None:
            break
        cells[best[1], best[2]] = grow
    return cells


def _swap_polish(mask, cells, h, max_rounds=200):
    """Best-improvement swaps (drop one boundary cell, add one outer cell)."""
    cells = cells.copy()
    for _ in range(max_rounds):
        lam, _ = _current_pair(mask, cells, h)
        cand = boundary_candidates(cells, mask)
        flat_cells = cells.ravel()
        inner = [int(k) for k in cand if flat_cells[k]]
        best = (lam, None)
        for r in inner:
            removed = cells.copy().ravel()
            removed[r] = False
            removed = removed.reshape(cells.shape)
            if not removed.any():
                continue
            for c in boundary_candidates(removed, mask):
                c = int(c)
                if removed.ravel()[c] or c == r:
                    continue
                trial = removed.copy().ravel()
                trial[c] = True
                trial = trial.reshape(cells.shape)
                val = float(np.linalg.eigvalsh(dense_laplacian(trial, h))[0]) if trial.sum() <= DENSE_LIMIT \
                    else eigenpair_on_cells(trial, h, tol=1e-12, solver="lu")[0]
                if val < best[0] * (1 - 1e-12):
                    best = (val, trial)
        if best[1] is None:
            break
        cells = best[1]
    return cells


# ---------------------------------------------------------------------------
# enumeration oracle


def _connected_rows(adj_sub: np.ndarray) -> np.ndarray:
    B, k, _ = adj_sub.shape
    step = adj_sub | np.eye(k, dtype=bool)[None]
    reach = step.copy()
    for _ in range(max(1, int(math.ceil(math.log2(max(k, 2)))))):
        reach = np.matmul(reach.astype(np.int32), reach.astype(np.int32)) > 0
    return reach[:, 0, :].all(axis=1)


def brute_force_optimal(
    domain: GridDomain, a_cells: int, connected_only: bool = False
) -> OptimizeResult:
    """Exhaustive minimum of lambda_1 over supports of exactly ``a_cells``
    cells, eigenvalues from the in-repo Jacobi oracle.  Ties (1e-12 relative)
    go to the lexicographically first cell-index tuple."""
    flat = np.flatnonzero(domain.mask.ravel())
    n = flat.size
    if not 1 <= a_cells <= n:
        raise ValueError(f"a_cells out of range [1, {n}]")
    total = math.comb(n, a_cells)
    if total > ENUMERATION_BUDGET:
        raise ValueError(f"combinatorial budget exceeded: C({n},{a_cells}) = {total}")
    ii, jj = np.unravel_index(flat, domain.shape)
    adj = (np.abs(ii[:, None] - ii[None, :]) + np.abs(jj[:, None] - jj[None, :])) == 1
    best_val, best_combo = math.inf, None
    it = itertools.combinations(range(n), a_cells)
    chunk = 50_000
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            break
        combos = np.array(block, dtype=np.int64)
        if connected_only and a_cells > 1:
            sub = adj[combos[:, :, None], combos[:, None, :]]
            combos = combos[_connected_rows(sub)]
            if combos.size == 0:
                continue
        vals = smallest_eigenvalues_batch(adj, combos, domain.h)
        m = float(vals.min())
        if m < best_val * (1 - 1e-12):
            first = int(np.flatnonzero(vals <= m * (1 + 1e-12))[0])
            best_val, best_combo = m, combos[first]
    cells = np.zeros(domain.mask.size, dtype=bool)
    cells[flat[best_combo]] = True
    support = Support(domain, cells.reshape(domain.shape))
    spectral = dense_eigen_oracle(domain, support)
    return OptimizeResult(support, spectral, float("nan"), [])
