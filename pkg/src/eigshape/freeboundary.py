"""Free-boundary diagnostics: contour extraction, the boundary gradient trace,
density ratios, the residual measure Delta u + lambda u, harmonic
replacement, the average dichotomy and the two-dimensional deficit."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy import ndimage
from skimage.measure import find_contours

from .domain import BallSpec, GridDomain, Support, ball_cells, ball_inside_domain
from .spectral import (
    ConvergenceError,
    assemble_laplacian,
    conjugate_gradient,
    neighbor_count,
    neighbor_sum,
)
from .variation import cell_gradient

SMOOTHING_PASSES = 1
_PAD = 3


@dataclass(frozen=True, eq=False)
class BoundaryTrace:
    polyline: list
    samples: Optional[np.ndarray] = None
    sqrt_lambda_ref: float = float("nan")

    @property
    def length(self) -> float:
        return float(sum(np.sum(np.hypot(*np.diff(p, axis=0).T)) for p in self.polyline))

    @property
    def vertices(self) -> np.ndarray:
        return np.concatenate([p[:-1] if _closed(p) else p for p in self.polyline])

    @property
    def median(self) -> float:
        return float(np.median(self.samples))


def _closed(p: np.ndarray) -> bool:
    return len(p) > 1 and np.allclose(p[0], p[-1])


def _smoothed_indicator(cells: np.ndarray, passes: int) -> np.ndarray:
    f = np.pad(cells.astype(float), _PAD)
    for _ in range(passes):
        for ax in (0, 1):
            f = ndimage.correlate1d(f, [0.25, 0.5, 0.25], axis=ax, mode="constant")
    return f


def extract_boundary(support: Support, passes: int = SMOOTHING_PASSES) -> BoundaryTrace:
    """Level-1/2 marching-squares contours of the support indicator after
    ``passes`` rounds of separable [1, 2, 1]/4 smoothing.  Vertices are in
    physical coordinates."""
    cells = support.cells
    if not cells.any() or np.array_equal(cells, support.domain.mask):
        raise ValueError("no boundary")
    d = support.domain
    f = _smoothed_indicator(cells, passes)
    polys = []
    for c in find_contours(f, 0.5):
        xy = np.empty_like(c)
        xy[:, 0] = d.origin[0] + (c[:, 0] - _PAD) * d.h
        xy[:, 1] = d.origin[1] + (c[:, 1] - _PAD) * d.h
        polys.append(xy)
    return BoundaryTrace(polys)


def perimeter_estimate(support: Support, passes: int = SMOOTHING_PASSES) -> float:
    return extract_boundary(support, passes).length


def _to_index(domain: GridDomain, pts: np.ndarray) -> np.ndarray:
    return np.stack(
        [(pts[:, 0] - domain.origin[0]) / domain.h, (pts[:, 1] - domain.origin[1]) / domain.h]
    )


def _sample(field_: np.ndarray, domain: GridDomain, pts: np.ndarray) -> np.ndarray:
    return ndimage.map_coordinates(field_, _to_index(domain, pts), order=1, mode="constant")


def gradient_trace(
    u: np.ndarray, support: Support, trace: BoundaryTrace, sqrt_lambda_ref: float = float("nan")
) -> BoundaryTrace:
    """|grad u| at each contour vertex from the two-point difference
    (u(p + 2h n) - u(p + h n)) / h along the inward normal n of the smoothed
    indicator."""
    d = support.domain
    h = d.h
    f = _smoothed_indicator(support.cells, SMOOTHING_PASSES)
    gx, gy = np.gradient(f)
    pts = trace.vertices
    idx = _to_index(d, pts) + _PAD
    nx_ = ndimage.map_coordinates(gx, idx, order=1)
    ny_ = ndimage.map_coordinates(gy, idx, order=1)
    nrm = np.hypot(nx_, ny_)
    nrm[nrm == 0] = 1.0
    n = np.stack([nx_ / nrm, ny_ / nrm], axis=1)
    w = np.where(support.cells, u, 0.0)
    u1 = _sample(w, d, pts + h * n)
    u2 = _sample(w, d, pts + 2 * h * n)
    samples = np.abs(u2 - u1) / h
    return replace(trace, samples=samples, sqrt_lambda_ref=float(sqrt_lambda_ref))


def _ball_cells_checked(domain: GridDomain, x0, r: float) -> np.ndarray:
    ball = BallSpec(tuple(float(c) for c in x0), float(r))
    if not ball_inside_domain(domain, ball):
        raise ValueError("ball exits D")
    cells = ball_cells(domain, ball)
    if not cells.any():
        raise ValueError("degenerate ball")
    return cells


def density_ratio(support: Support, x0, r: float) -> float:
    """Cell-counted |B(x0, r) & Omega| / |B(x0, r)|."""
    if r < 2 * support.domain.h:
        raise ValueError("radius below 2h")
    ball = _ball_cells_checked(support.domain, x0, r)
    return float(np.sum(ball & support.cells)) / float(np.sum(ball))


# ---------------------------------------------------------------------------
# residual measure


def boundary_band(cells: np.ndarray) -> np.ndarray:
    """Cells with a 4-neighbor of the other indicator value (off-grid counts
    as outside)."""
    nb_in = neighbor_count(np.pad(cells, 1))[1:-1, 1:-1]
    return np.where(cells, nb_in < 4, nb_in > 0)


@dataclass(frozen=True, eq=False)
class ResidualMeasure:
    masses: np.ndarray
    band: np.ndarray
    total_mass: float
    interior_mass: float
    boundary_band_mass: float
    h: float
    origin: tuple

    def ball_mass(self, x0, r: float) -> float:
        nx, ny = self.masses.shape
        X = self.origin[0] + self.h * np.arange(nx)[:, None]
        Y = self.origin[1] + self.h * np.arange(ny)[None, :]
        inside = np.hypot(X - x0[0], Y - x0[1]) <= r
        return float(np.sum(self.masses[inside]))

    @property
    def interior(self) -> np.ndarray:
        return ~self.band


def residual_measure(u: np.ndarray, support: Support, lambda_a: float) -> ResidualMeasure:
    """Per-cell masses m = (Delta_h u + lambda_a u) h^2 of the zero-extended
    field, with the stencil of ``apply_laplacian`` applied on every cell."""
    d = support.domain
    h = d.h
    w = np.where(support.cells, u, 0.0)
    lap = (neighbor_sum(w) - 4.0 * w) / (h * h)
    m = (lap + lambda_a * w) * h * h
    band = boundary_band(support.cells)
    band_mass = float(np.sum(m[band]))
    interior_mass = float(np.sum(m[~band]))
    return ResidualMeasure(
        masses=m,
        band=band,
        total_mass=interior_mass + band_mass,
        interior_mass=interior_mass,
        boundary_band_mass=band_mass,
        h=h,
        origin=d.origin,
    )


# ---------------------------------------------------------------------------
# harmonic replacement


def harmonic_replacement(
    domain: GridDomain, u: np.ndarray, ball: BallSpec, lambda_a: float, rtol: float = 1e-10
) -> np.ndarray:
    """v with -Delta_h v = lambda_a u on the ball cells and v = u elsewhere."""
    if not ball_inside_domain(domain, ball):
        raise ValueError("ball exits D")
    inside = ball_cells(domain, ball)
    if not inside.any():
        raise ValueError("degenerate ball")
    h = domain.h
    w = np.where(domain.mask, u, 0.0)
    outside = np.where(inside, 0.0, w)
    rhs_field = lambda_a * w + neighbor_sum(outside) / (h * h)
    A = assemble_laplacian(inside, h)
    b = rhs_field[inside]
    x, res, _ = conjugate_gradient(A.__matmul__, b, x0=w[inside], rtol=rtol, diag=A.diagonal())
    if not res <= rtol:
        raise ConvergenceError(f"harmonic replacement CG stalled (residual {res:.3e})", x, res)
    v = w.copy()
    v[inside] = x
    return v


# ---------------------------------------------------------------------------
# dichotomy and deficit


@dataclass(frozen=True)
class DichotomyRecord:
    center: tuple
    r: float
    average: float
    verdict: str
    c1: float
    c2: float
    contradiction: bool


def circle_cells(domain: GridDomain, x0, r: float) -> np.ndarray:
    X, Y = domain.centers()
    return np.abs(np.hypot(X - x0[0], Y - x0[1]) - r) <= 0.5 * domain.h


def dichotomy_scan(
    domain: GridDomain,
    u: np.ndarray,
    radii: Sequence[float],
    centers: Sequence,
    sqrt_lambda: float,
    c1_factor: float = 1.5,
    c2_factor: float = 0.1,
) -> list:
    """Classify each (center, r) by the scaled circle average of u against
    C1 = c1_factor sqrt(Lambda) and C2 = c2_factor sqrt(Lambda), then check
    the verdict on the field: "positive" needs u > 0 on B(x0, r), "zero"
    needs u == 0 on B(x0, r/2)."""
    c1 = c1_factor * sqrt_lambda
    c2 = c2_factor * sqrt_lambda
    X, Y = domain.centers()
    out = []
    for x0 in centers:
        x0 = (float(x0[0]), float(x0[1]))
        dist = np.hypot(X - x0[0], Y - x0[1])
        for r in radii:
            if r < 4 * domain.h - 1e-12:
                raise ValueError("radius below 4h")
            if not ball_inside_domain(domain, BallSpec(x0, r)):
                raise ValueError("ball exits D")
            ring = circle_cells(domain, x0, r)
            if not ring.any():
                raise ValueError("no circle cells")
            avg = float(np.mean(u[ring])) / r
            if avg >= c1:
                verdict = "positive"
                ok = bool(np.all(u[dist <= r] > 0))
            elif avg <= c2:
                verdict = "zero"
                ok = bool(np.all(u[dist <= 0.5 * r] == 0))
            else:
                verdict, ok = "undecided", True
            out.append(DichotomyRecord(x0, float(r), avg, verdict, c1, c2, not ok))
    return out


def dim2_deficit(
    domain: GridDomain,
    u: np.ndarray,
    support: Support,
    lambda_ref: float,
    x0,
    radii: Sequence[float],
) -> np.ndarray:
    """Per radius: sum over ball cells with u > 0 of max(Lambda - |grad u|^2, 0),
    divided by the ball's cell count.  Gradients follow ``cell_gradient``."""
    g = cell_gradient(u, support.cells, domain.h)
    integrand = np.maximum(lambda_ref - np.sum(g * g, axis=-1), 0.0)
    integrand = np.where(support.cells & (u > 0), integrand, 0.0)
    X, Y = domain.centers()
    dist = np.hypot(X - x0[0], Y - x0[1])
    vals = []
    for r in radii:
        ball = (dist <= r) & domain.mask
        if not ball.any():
            raise ValueError("degenerate ball")
        vals.append(float(np.sum(integrand[ball])) / float(np.sum(ball)))
    return np.array(vals)


# ---------------------------------------------------------------------------
# component trichotomy and summaries


@dataclass(frozen=True)
class ComponentVerdict:
    component: int
    cells: int
    verdict: str
    max_u: float


def component_verdicts(domain: GridDomain, u: np.ndarray, zero_rtol: float = 1e-6) -> list:
    """For each connected component of D: "positive" (u > 0 on every cell),
    "zero" (max u below zero_rtol max u) or "partial"."""
    umax = float(np.max(u))
    out = []
    for k in range(domain.n_components):
        comp = domain.component_id == k
        vals = u[comp]
        m = float(vals.max())
        if m < zero_rtol * umax:
            verdict = "zero"
        elif np.all(vals > 0):
            verdict = "positive"
        else:
            verdict = "partial"
        out.append(ComponentVerdict(k, int(comp.sum()), verdict, m))
    return out


def boundary_points(trace: BoundaryTrace, count: int) -> np.ndarray:
    """``count`` vertices evenly spaced in vertex order."""
    v = trace.vertices
    idx = np.linspace(0, len(v), count, endpoint=False).astype(int)
    return v[idx]


def max_gradient(u: np.ndarray, support: Support) -> float:
    g = cell_gradient(u, support.cells, support.domain.h)
    return float(np.sqrt(np.max(np.sum(g * g, axis=-1))))


def fit_circle(points: np.ndarray) -> tuple[np.ndarray, float]:
    """Algebraic least-squares circle (center, radius)."""
    x, y = points[:, 0], points[:, 1]
    A = np.column_stack([x, y, np.ones_like(x)])
    b = x * x + y * y
    sol, *_ = np.linalg.lstsq(A, b, rcond=None)
    cx, cy = sol[0] / 2, sol[1] / 2
    return np.array([cx, cy]), float(math.sqrt(sol[2] + cx * cx + cy * cy))


def circle_hausdorff(support: Support) -> tuple[float, np.ndarray, float]:
    """Max distance of boundary vertices from their best-fit circle."""
    v = extract_boundary(support).vertices
    c, r = fit_circle(v)
    return float(np.max(np.abs(np.hypot(v[:, 0] - c[0], v[:, 1] - c[1]) - r))), c, r
