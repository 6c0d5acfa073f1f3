"""Closed-form reference values for disks and squares."""

from __future__ import annotations

import math


def bessel_j0(x: float, terms: int = 60) -> float:
    """J_0 from its power series sum (-1)^k (x/2)^(2k) / (k!)^2."""
    q = -(x * x) / 4.0
    term, total = 1.0, 1.0
    for k in range(1, terms):
        term *= q / (k * k)
        total += term
    return total


def bessel_j0_first_zero(tol: float = 1e-15) -> float:
    """First positive zero of J_0, by bisection on [2, 3]."""
    lo, hi = 2.0, 3.0
    flo = bessel_j0(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = bessel_j0(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


J01 = bessel_j0_first_zero()


def disk_eigenvalue(area: float) -> float:
    """lambda_1 of the disk of the given area: pi j^2 / area."""
    return math.pi * J01**2 / area


def disk_multiplier(area: float) -> float:
    """Multiplier of the optimal disk, pi j^2 / area^2."""
    return math.pi * J01**2 / area**2


def disk_boundary_gradient(area: float) -> float:
    """|grad u| on the boundary of the normalized disk eigenfunction, j sqrt(pi) / area."""
    return J01 * math.sqrt(math.pi) / area


def disk_perimeter(area: float) -> float:
    return 2.0 * math.sqrt(math.pi * area)


def square_fd_eigenvalue(h: float, side: float = 1.0) -> float:
    """Smallest 5-point eigenvalue of the square with nodes on the edges."""
    return 2.0 * (2.0 / h**2) * (1.0 - math.cos(math.pi * h / side))
