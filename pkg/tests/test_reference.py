import math

import pytest
from scipy import special

from eigshape.reference import (
    J01,
    bessel_j0,
    disk_boundary_gradient,
    disk_eigenvalue,
    disk_multiplier,
    disk_perimeter,
    square_fd_eigenvalue,
)


def test_first_zero():
    assert J01 == pytest.approx(2.404825557695773, abs=1e-14)
    assert J01 == pytest.approx(special.jn_zeros(0, 1)[0], abs=1e-14)


@pytest.mark.parametrize("x", [0.0, 0.5, 1.7, 2.4, 5.0])
def test_series_matches_scipy(x):
    assert bessel_j0(x) == pytest.approx(special.j0(x), abs=1e-14)


def test_disk_values_at_area_point_two():
    assert disk_eigenvalue(0.2) == pytest.approx(90.84, abs=5e-3)
    assert disk_multiplier(0.2) == pytest.approx(454.2, abs=5e-2)
    assert disk_boundary_gradient(0.2) == pytest.approx(21.31, abs=5e-3)
    assert disk_perimeter(0.2) == pytest.approx(1.5853, abs=5e-5)


def test_disk_relations():
    for a in (0.1, 0.2, 0.7):
        assert disk_multiplier(a) == pytest.approx(disk_eigenvalue(a) / a, rel=1e-14)
        assert disk_boundary_gradient(a) ** 2 == pytest.approx(disk_multiplier(a), rel=1e-14)


def test_square_fd_eigenvalue():
    assert square_fd_eigenvalue(0.25) == pytest.approx(18.745, abs=1e-3)
    assert square_fd_eigenvalue(1e-3) == pytest.approx(2 * math.pi**2, rel=1e-6)
