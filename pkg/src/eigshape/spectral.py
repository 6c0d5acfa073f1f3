"""Dirichlet Laplacian on a support, its first eigenpair, and the energy J.

Discretization: the 5-point stencil on cell centers, with every cell outside
the support acting as a homogeneous Dirichlet ghost.  All integrals are cell
sums times h^2, and the Dirichlet energy is the sum of squared differences
over grid edges (ghost edges included), so that

    sum |grad v|^2 h^2 == sum v * (L v) * h^2

holds exactly and J never disagrees with the operator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp

from .domain import GridDomain, Support, label_components


class ConvergenceError(RuntimeError):
    """Raised when an iterative solve misses its tolerance.

    Carries the best iterate so callers can inspect or restart from it.
    """

    def __init__(self, message: str, best=None, residual: float = float("nan")):
        super().__init__(message)
        self.best = best
        self.residual = residual


@dataclass(frozen=True, eq=False)
class SpectralResult:
    lam: float
    u: np.ndarray
    residual: float
    iterations: int
    per_component: Optional[list[float]] = None
    component: int = 0


@dataclass(frozen=True)
class EnergyValue:
    j: float
    gradient_part: float
    mass_part: float


# ---------------------------------------------------------------------------
# stencil kernels


def neighbor_sum(w: np.ndarray) -> np.ndarray:
    """Sum of the four axis neighbors with zero padding."""
    s = np.zeros_like(w)
    s[1:, :] += w[:-1, :]
    s[:-1, :] += w[1:, :]
    s[:, 1:] += w[:, :-1]
    s[:, :-1] += w[:, 1:]
    return s


def neighbor_count(cells: np.ndarray) -> np.ndarray:
    return neighbor_sum(cells.astype(np.int64))


def apply_laplacian(domain: GridDomain, support: Support, v: np.ndarray) -> np.ndarray:
    cells = support.cells
    w = np.where(cells, v, 0.0)
    out = (4.0 * w - neighbor_sum(w)) / domain.h**2
    out[~cells] = 0.0
    return out


def edge_differences(w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward differences over every grid edge, including the edges to the
    zero ghost layer around the array."""
    p = np.pad(w, 1)
    dx = np.diff(p[:, 1:-1], axis=0)
    dy = np.diff(p[1:-1, :], axis=1)
    return dx, dy


def dirichlet_energy(v: np.ndarray, cells: np.ndarray, h: float) -> float:
    """Discrete int |grad v|^2 of v extended by zero outside ``cells``."""
    w = np.where(cells, v, 0.0)
    dx, dy = edge_differences(w)
    # (diff/h)^2 * h^2
    return float(np.sum(dx * dx) + np.sum(dy * dy))


def l2_mass(v: np.ndarray, cells: np.ndarray, h: float) -> float:
    w = np.where(cells, v, 0.0)
    return float(np.sum(w * w)) * h * h


# ---------------------------------------------------------------------------
# assembly


def cell_index(cells: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Flat row-major indices of the true cells and the inverse map (-1 off)."""
    flat = np.flatnonzero(cells.ravel())
    inv = -np.ones(cells.size, dtype=np.int64)
    inv[flat] = np.arange(flat.size)
    return flat, inv.reshape(cells.shape)


def assemble_laplacian(
    cells: np.ndarray, h: float, diag_extra: Optional[np.ndarray] = None
) -> sp.csr_matrix:
    """Sparse 5-point Dirichlet Laplacian on ``cells`` (row-major unknowns).

    ``diag_extra`` is an optional per-cell reaction term added to the diagonal.
    """
    flat, inv = cell_index(cells)
    n = flat.size
    ii, jj = np.unravel_index(flat, cells.shape)
    rows = [np.arange(n)]
    cols = [np.arange(n)]
    diag = np.full(n, 4.0 / h**2)
    if diag_extra is not None:
        diag = diag + diag_extra[ii, jj]
    vals = [diag]
    nx, ny = cells.shape
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        a, b = ii + di, jj + dj
        ok = (a >= 0) & (a < nx) & (b >= 0) & (b < ny)
        k = np.flatnonzero(ok)
        nb = inv[a[k], b[k]]
        keep = nb >= 0
        rows.append(k[keep])
        cols.append(nb[keep])
        vals.append(np.full(int(keep.sum()), -1.0 / h**2))
    A = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n, n),
    )
    A.sort_indices()
    return A


def dense_laplacian(cells: np.ndarray, h: float) -> np.ndarray:
    return assemble_laplacian(cells, h).toarray()


# ---------------------------------------------------------------------------
# Krylov and inverse iteration


def conjugate_gradient(
    matvec: Callable[[np.ndarray], np.ndarray],
    b: np.ndarray,
    x0: Optional[np.ndarray] = None,
    rtol: float = 1e-10,
    maxiter: int = 10_000,
    diag: Optional[np.ndarray] = None,
    relative_to: str = "rhs",
) -> tuple[np.ndarray, float, int]:
    """Diagonally preconditioned CG for an SPD operator.

    ``relative_to`` selects the reference norm for ``rtol``: the right-hand
    side ("rhs") or the initial residual ("initial").  Returns the iterate,
    the final residual norm relative to the reference, and the iteration
    count.
    """
    x = np.zeros_like(b) if x0 is None else x0.copy()
    r = b - matvec(x) if x0 is not None else b.copy()
    ref = np.linalg.norm(b) if relative_to == "rhs" else np.linalg.norm(r)
    if ref == 0.0:
        return x, 0.0, 0
    target = rtol * ref
    inv_diag = None if diag is None else 1.0 / diag
    z = r if inv_diag is None else inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    rnorm = np.linalg.norm(r)
    k = 0
    while rnorm > target and k < maxiter:
        Ap = matvec(p)
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            break
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = r if inv_diag is None else inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        rnorm = np.linalg.norm(r)
        k += 1
    return x, float(rnorm / ref), k


def inverse_iteration(
    A: sp.spmatrix,
    x0: np.ndarray,
    tol: float = 1e-10,
    max_iter: int = 2000,
    seed: int = 0,
    inner_rtol: float = 1e-2,
    solver: str = "cg",
    shift: float = 0.0,
) -> tuple[float, np.ndarray, float, int]:
    """Smallest eigenpair of an SPD matrix by inverse iteration.

    ``shift`` must stay below the smallest eigenvalue; the default zero shift
    is always safe for the Dirichlet Laplacian.
    Inner solves are warm-started at ``x / lam`` and stopped at ``inner_rtol``
    relative to their initial residual, which keeps inexact iteration
    convergent.  ``solver="lu"`` replaces CG by one sparse factorization.
    Returns ``(lam, x, residual, iterations)`` with ``x`` of unit 2-norm.
    """
    n = A.shape[0]
    As = A if shift == 0.0 else (A - shift * sp.identity(n, format="csr")).tocsr()
    diag = As.diagonal()
    x = np.asarray(x0, dtype=float).copy()
    nrm = np.linalg.norm(x)
    if nrm == 0.0:
        raise ValueError("zero start vector")
    x /= nrm
    Ax = A @ x
    lam = float(x @ Ax)
    if solver == "lu":
        from scipy.sparse.linalg import splu

        lu = splu(sp.csc_matrix(As))
        solve = lu.solve
    elif solver != "cg":
        raise ValueError(f"unknown solver {solver!r}")
    rng = None
    best = (np.inf, x.copy(), lam)
    stall_ref, stall_at = np.inf, 0
    for it in range(1, max_iter + 1):
        if solver == "cg":
            y, _, _ = conjugate_gradient(
                As.__matmul__, x, x0=x / (lam - shift), rtol=inner_rtol, diag=diag,
                relative_to="initial", maxiter=10 * n + 100,
            )
        else:
            y = solve(x)
        x_new = y / np.linalg.norm(y)
        Ax = A @ x_new
        lam_new = float(x_new @ Ax)
        res = float(np.linalg.norm(Ax - lam_new * x_new) / abs(lam_new))
        if res < best[0]:
            best = (res, x_new.copy(), lam_new)
        converged = abs(lam_new - lam) < tol * abs(lam_new) and res < tol
        x, lam = x_new, lam_new
        if converged:
            return lam, x, res, it
        # restart from a seeded random vector if the residual stops improving
        if res < 0.5 * stall_ref:
            stall_ref, stall_at = res, it
        elif it - stall_at > 200:
            if rng is None:
                rng = np.random.default_rng(seed)
            x = np.abs(rng.standard_normal(n)) + best[1]
            x /= np.linalg.norm(x)
            lam = float(x @ (A @ x))
            stall_ref, stall_at = np.inf, it
    raise ConvergenceError(
        f"inverse iteration did not converge in {max_iter} steps "
        f"(residual {best[0]:.3e})",
        best=(best[2], best[1]),
        residual=best[0],
    )


def _normalize_field(u: np.ndarray, h: float) -> np.ndarray:
    return u / np.sqrt(np.sum(u * u) * h * h)


def eigenpair_on_cells(
    cells: np.ndarray,
    h: float,
    tol: float = 1e-10,
    max_iter: int = 2000,
    seed: int = 0,
    x0: Optional[np.ndarray] = None,
    solver: str = "cg",
    diag_extra: Optional[np.ndarray] = None,
    shift: float = 0.0,
) -> tuple[float, np.ndarray, float, int]:
    """First eigenpair of the Dirichlet Laplacian on one set of cells.

    Returns ``(lam, u, residual, iterations)`` with ``u`` a grid field,
    nonnegative, zero off ``cells`` and normalized by sum u^2 h^2 = 1.
    """
    flat, _ = cell_index(cells)
    A = assemble_laplacian(cells, h, diag_extra)
    start = np.ones(flat.size) if x0 is None else np.abs(x0.ravel()[flat]) + 1e-300
    if not np.any(start):
        start = np.ones(flat.size)
    lam, x, res, its = inverse_iteration(
        A, start, tol=tol, max_iter=max_iter, seed=seed, solver=solver, shift=shift
    )
    if x.sum() < 0:
        x = -x
    u = np.zeros(cells.size)
    u[flat] = np.abs(x)
    return lam, _normalize_field(u.reshape(cells.shape), h), res, its


def smallest_eigenpair(
    domain: GridDomain,
    support: Support,
    tol: float = 1e-10,
    max_iter: int = 2000,
    seed: int = 0,
    x0: Optional[np.ndarray] = None,
    solver: str = "cg",
) -> SpectralResult:
    """First Dirichlet eigenpair on a support.

    Several 4-connected components are solved separately; the eigenvalue is
    their minimum and ``u`` lives on the minimizing component (ties within
    1e-12 relative go to the lowest component label).
    """
    cells = support.cells
    if not cells.any():
        raise ValueError("empty support")
    labels, n = label_components(cells)
    h = domain.h
    if n == 1:
        lam, u, res, its = eigenpair_on_cells(cells, h, tol, max_iter, seed, x0, solver)
        return SpectralResult(lam, u, res, its, None, 0)
    results = []
    for c in range(n):
        comp = labels == c
        results.append(eigenpair_on_cells(comp, h, tol, max_iter, seed, x0, solver))
    lams = [r[0] for r in results]
    lo = min(lams)
    best = next(c for c, l in enumerate(lams) if l <= lo * (1 + 1e-12))
    lam, u, res, _ = results[best]
    its = sum(r[3] for r in results)
    return SpectralResult(lam, u, res, its, lams, best)


def rayleigh_quotient(domain: GridDomain, support: Support, v: np.ndarray) -> float:
    cells = support.cells
    mass = l2_mass(v, cells, domain.h)
    if mass == 0.0:
        raise ValueError("zero field")
    return dirichlet_energy(v, cells, domain.h) / mass


def j_energy(domain: GridDomain, v: np.ndarray, lambda_ref: float) -> EnergyValue:
    """J(v) = int |grad v|^2 - lambda_ref * int v^2 over the whole box."""
    grad = dirichlet_energy(v, domain.mask, domain.h)
    mass = l2_mass(v, domain.mask, domain.h)
    return EnergyValue(grad - lambda_ref * mass, grad, mass)


# ---------------------------------------------------------------------------
# dense oracle: cyclic Jacobi with round-robin (parallel) ordering


def _round_robin(n: int) -> list[tuple[np.ndarray, np.ndarray]]:
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = [(players[k], players[m - 1 - k]) for k in range(m // 2)]
        pairs = [(min(p, q), max(p, q)) for p, q in pairs if p < n and q < n]
        if pairs:
            P = np.array([p for p, _ in pairs])
            Q = np.array([q for _, q in pairs])
            rounds.append((P, Q))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(
    A: np.ndarray, vectors: bool = False, tol: float = 1e-15, max_sweeps: int = 60
) -> tuple[np.ndarray, Optional[np.ndarray]]:
    """Eigen-decomposition of a batch of symmetric matrices by Jacobi rotations.

    ``A`` has shape ``(n, n)`` or ``(batch, n, n)``.  Disjoint pivot pairs
    of each round are rotated simultaneously.  Returns eigenvalues (unsorted,
    one row per matrix) and, optionally, the accumulated rotations whose
    columns are the eigenvectors.
    """
    single = A.ndim == 2
    A = np.array(A, dtype=float, copy=True)
    if single:
        A = A[None]
    B, n, _ = A.shape
    V = np.broadcast_to(np.eye(n), (B, n, n)).copy() if vectors else None
    if n == 1:
        w = A[:, :, 0].copy()
        return (w[0] if single else w), (V[0] if single and vectors else V)
    rounds = _round_robin(n)
    scale = np.sqrt(np.sum(A * A, axis=(1, 2)))
    scale[scale == 0] = 1.0
    off_mask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(A[:, off_mask] ** 2, axis=1))
        if np.all(off <= tol * scale):
            break
        for P, Q in rounds:
            apq = A[:, P, Q]
            app = A[:, P, P]
            aqq = A[:, Q, Q]
            zero = apq == 0.0
            theta = np.where(zero, 0.0, (aqq - app) / np.where(zero, 1.0, 2.0 * apq))
            sign = np.where(theta >= 0.0, 1.0, -1.0)
            t = np.where(zero, 0.0, sign / (np.abs(theta) + np.hypot(theta, 1.0)))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            cc, ss = c[:, None, :], s[:, None, :]
            ap = A[:, :, P]
            aq = A[:, :, Q]
            A[:, :, P] = cc * ap - ss * aq
            A[:, :, Q] = ss * ap + cc * aq
            cr, sr = c[:, :, None], s[:, :, None]
            ap = A[:, P, :]
            aq = A[:, Q, :]
            A[:, P, :] = cr * ap - sr * aq
            A[:, Q, :] = sr * ap + cr * aq
            if vectors:
                vp = V[:, :, P]
                vq = V[:, :, Q]
                V[:, :, P] = cc * vp - ss * vq
                V[:, :, Q] = ss * vp + cc * vq
    w = np.diagonal(A, axis1=1, axis2=2).copy()
    if single:
        return w[0], (V[0] if vectors else None)
    return w, V


ORACLE_LIMIT = 400


def dense_eigen_oracle(domain: GridDomain, support: Support) -> SpectralResult:
    cells = support.cells
    n = int(cells.sum())
    if n == 0:
        raise ValueError("empty support")
    if n > ORACLE_LIMIT:
        raise ValueError("oracle size limit")
    A = dense_laplacian(cells, domain.h)
    w, V = jacobi_eigh(A, vectors=True)
    k = int(np.argmin(w))
    lam = float(w[k])
    flat, _ = cell_index(cells)
    u = np.zeros(cells.size)
    u[flat] = np.abs(V[:, k])
    u = _normalize_field(u.reshape(cells.shape), domain.h)
    x = u.ravel()[flat]
    res = float(np.linalg.norm(A @ x - lam * x) / (lam * np.linalg.norm(x)))
    return SpectralResult(lam, u, res, 0, None, 0)


def smallest_eigenvalues_batch(
    adjacency: np.ndarray, combos: np.ndarray, h: float, chunk: int = 40_000
) -> np.ndarray:
    """lambda_1 of many small supports given as index tuples into a fixed
    admissible-cell adjacency matrix (Jacobi oracle, batched)."""
    k = combos.shape[1]
    out = np.empty(combos.shape[0])
    eye = 4.0 * np.eye(k)
    for s in range(0, combos.shape[0], chunk):
        c = combos[s : s + chunk]
        adj = adjacency[c[:, :, None], c[:, None, :]].astype(float)
        A = (eye[None] - adj) / h**2
        w, _ = jacobi_eigh(A)
        out[s : s + chunk] = w.min(axis=1) if w.ndim == 2 else w
    return out
