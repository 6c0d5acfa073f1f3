"""Uniform 2-D grids for the box D, candidate supports and discrete balls.

Array convention: a field on a grid is an ``(nx, ny)`` array indexed
``[i, j]`` with cell center ``(origin[0] + i*h, origin[1] + j*h)``.  The
row-major flat index ``i*ny + j`` is the tie-breaking order used throughout
the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import ndimage

# 4-connectivity, i.e. the coupling graph of the 5-point stencil.
FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


def label_components(cells: np.ndarray) -> tuple[np.ndarray, int]:
    """4-connected labels, -1 outside ``cells``, numbered 0.. in row-major order
    of each component's first cell."""
    labels, n = ndimage.label(cells, structure=FOUR_CONNECTED)
    return labels.astype(np.int64) - 1, int(n)


@dataclass(frozen=True, eq=False)
class GridDomain:
    nx: int
    ny: int
    h: float
    origin: tuple[float, float]
    mask: np.ndarray
    component_id: np.ndarray

    def __post_init__(self):
        if not self.h > 0 or self.nx < 3 or self.ny < 3:
            raise ValueError("bad grid")
        if self.mask.shape != (self.nx, self.ny):
            raise ValueError("bad grid")
        if not self.mask.any():
            raise ValueError("empty domain")

    @classmethod
    def from_mask(cls, mask: np.ndarray, h: float, origin=(0.0, 0.0)) -> "GridDomain":
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 2:
            raise ValueError("bad grid")
        labels, _ = label_components(mask)
        return cls(
            nx=mask.shape[0],
            ny=mask.shape[1],
            h=float(h),
            origin=(float(origin[0]), float(origin[1])),
            mask=_frozen(mask),
            component_id=_frozen(labels),
        )

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def cell_area(self) -> float:
        return self.h * self.h

    @property
    def volume(self) -> float:
        return int(self.mask.sum()) * self.cell_area

    @property
    def n_components(self) -> int:
        return int(self.component_id.max()) + 1

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.origin[0] + self.h * np.arange(self.nx)
        y = self.origin[1] + self.h * np.arange(self.ny)
        return np.meshgrid(x, y, indexing="ij")

    def index_of(self, point: Sequence[float]) -> tuple[int, int]:
        """Nearest cell index to a point (may lie outside the grid)."""
        i = int(np.rint((point[0] - self.origin[0]) / self.h))
        j = int(np.rint((point[1] - self.origin[1]) / self.h))
        return i, j

    def full_support(self) -> "Support":
        return Support(self, self.mask)


@dataclass(frozen=True, eq=False)
class Support:
    """A candidate shape: a subset of the admissible cells."""

    domain: GridDomain
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=bool)
        if cells.shape != self.domain.shape:
            raise ValueError("support shape does not match domain")
        if np.any(cells & ~self.domain.mask):
            raise ValueError("support leaves the domain")
        object.__setattr__(self, "cells", _frozen(cells))

    @property
    def count(self) -> int:
        return int(self.cells.sum())

    @property
    def volume(self) -> float:
        return self.count * self.domain.cell_area

    def components(self) -> tuple[np.ndarray, int]:
        return label_components(self.cells)

    def with_cells(self, cells: np.ndarray) -> "Support":
        return Support(self.domain, cells)


@dataclass(frozen=True)
class BallSpec:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")

    def contains(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.hypot(x - self.center[0], y - self.center[1]) <= self.radius


def build_box_domain(
    rects: Sequence[Sequence[float]],
    h: float,
    anchor: str = "cell",
) -> GridDomain:
    """Rasterize a union of open rectangles ``(x0, x1, y0, y1)``.

    ``anchor="cell"`` puts cell centers at half-steps from the bounding-box
    corner, so an aligned rectangle of side L gets L/h cells and an exact
    measured area.  ``anchor="node"`` puts centers on the corner lattice
    itself; the cells lying on the box edges are then outside the open set
    and act as a Dirichlet rim, which is what makes the 5-point eigenvalues
    of the full box second-order accurate.
    """
    if not np.isfinite(h) or h <= 0:
        raise ValueError("bad grid")
    rects = [tuple(float(c) for c in r) for r in rects]
    if not rects:
        raise ValueError("empty domain")
    for r in rects:
        if len(r) != 4:
            raise ValueError("rectangle must be (x0, x1, y0, y1)")
    rects = [r for r in rects if r[1] > r[0] and r[3] > r[2]]
    if not rects:
        raise ValueError("empty domain")
    xmin = min(r[0] for r in rects)
    xmax = max(r[1] for r in rects)
    ymin = min(r[2] for r in rects)
    ymax = max(r[3] for r in rects)
    if anchor == "cell":
        nx = int(np.ceil((xmax - xmin) / h - 1e-9))
        ny = int(np.ceil((ymax - ymin) / h - 1e-9))
        origin = (xmin + 0.5 * h, ymin + 0.5 * h)
    elif anchor == "node":
        nx = int(np.ceil((xmax - xmin) / h - 1e-9)) + 1
        ny = int(np.ceil((ymax - ymin) / h - 1e-9)) + 1
        origin = (xmin, ymin)
    else:
        raise ValueError(f"unknown anchor {anchor!r}")
    if nx < 3 or ny < 3:
        raise ValueError("bad grid")
    x = origin[0] + h * np.arange(nx)
    y = origin[1] + h * np.arange(ny)
    X, Y = np.meshgrid(x, y, indexing="ij")
    eps = 1e-9 * h
    mask = np.zeros((nx, ny), dtype=bool)
    for x0, x1, y0, y1 in rects:
        mask |= (X > x0 + eps) & (X < x1 - eps) & (Y > y0 + eps) & (Y < y1 - eps)
    if not mask.any():
        raise ValueError("empty domain")
    return GridDomain.from_mask(mask, h, origin)


def ball_cells(domain: GridDomain, ball: BallSpec) -> np.ndarray:
    X, Y = domain.centers()
    return ball.contains(X, Y) & domain.mask


def ball_support(domain: GridDomain, ball: BallSpec) -> Support:
    cells = ball_cells(domain, ball)
    if not cells.any():
        raise ValueError("degenerate ball")
    return Support(domain, cells)


def measure_volume(support: Support) -> float:
    return support.count * support.domain.cell_area


def ball_inside_domain(domain: GridDomain, ball: BallSpec, margin: float = 0.0) -> bool:
    """True when every grid point within ``radius + margin`` of the center is an
    admissible cell and the enlarged ball does not reach the grid edge."""
    c, r = ball.center, ball.radius + margin
    lo_x, hi_x = c[0] - r, c[0] + r
    lo_y, hi_y = c[1] - r, c[1] + r
    x_first, y_first = domain.origin
    x_last = x_first + (domain.nx - 1) * domain.h
    y_last = y_first + (domain.ny - 1) * domain.h
    if lo_x <= x_first or hi_x >= x_last or lo_y <= y_first or hi_y >= y_last:
        return False
    X, Y = domain.centers()
    near = np.hypot(X - c[0], Y - c[1]) <= r
    return bool(np.all(domain.mask[near]))
