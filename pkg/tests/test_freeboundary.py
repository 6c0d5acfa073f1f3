import math

import numpy as np
import pytest

from eigshape.domain import BallSpec, Support, ball_cells, ball_support, build_box_domain
from eigshape.freeboundary import (
    boundary_band,
    boundary_points,
    circle_hausdorff,
    component_verdicts,
    density_ratio,
    dichotomy_scan,
    dim2_deficit,
    extract_boundary,
    gradient_trace,
    harmonic_replacement,
    max_gradient,
    perimeter_estimate,
    residual_measure,
)
from eigshape.reference import disk_boundary_gradient, disk_multiplier, disk_perimeter
from eigshape.spectral import dirichlet_energy, smallest_eigenpair

from conftest import block_domain, block_support

LAM_DISK = disk_multiplier(0.2)
R_DISK = math.sqrt(0.2 / math.pi)


def unit_square(n):
    return build_box_domain([(0, 1, 0, 1)], 1 / n, anchor="node")


# ---------------------------------------------------------------------------
# contours and perimeter


@pytest.mark.xfail(strict=True, reason="one smoothing pass rounds the 2x2 corners")
def test_two_by_two_block_contour_length():
    d = block_domain(4, 4)
    assert extract_boundary(block_support(d, 2, 4, 2, 4)).length == pytest.approx(2.0, rel=1e-6)


def test_two_by_two_block_unsmoothed_contour():
    d = block_domain(4, 4)
    t = extract_boundary(block_support(d, 2, 4, 2, 4), passes=0)
    assert len(t.polyline) == 1
    # marching squares at level 1/2 cuts each corner by half a cell diagonal
    assert t.length == pytest.approx(4 * 0.25 + 4 * 0.25 * math.sqrt(0.5), rel=1e-12)


def test_disk_contour_length():
    d = unit_square(256)
    s = ball_support(d, BallSpec((0.5, 0.5), 0.25))
    assert abs(extract_boundary(s).length / (2 * math.pi * 0.25) - 1) <= 0.03


def test_no_boundary_errors():
    d = unit_square(8)
    with pytest.raises(ValueError, match="no boundary"):
        extract_boundary(d.full_support())
    with pytest.raises(ValueError, match="no boundary"):
        extract_boundary(Support(d, np.zeros(d.shape, bool)))


def test_contour_vertices_near_indicator_change():
    d = unit_square(64)
    s = ball_support(d, BallSpec((0.45, 0.55), 0.3))
    band = boundary_band(s.cells)
    X, Y = d.centers()
    pts = np.stack([X[band], Y[band]], axis=1)
    for v in extract_boundary(s).vertices[::7]:
        assert np.min(np.hypot(*(pts - v).T)) <= d.h * (1 + 1e-9)


def test_perimeter_of_optimal_shape(fk):
    _, s, _ = fk
    assert abs(perimeter_estimate(s) / disk_perimeter(0.2) - 1) <= 0.03


def test_perimeter_refinement_stable():
    vals = []
    for n in (128, 256):
        d = unit_square(n)
        vals.append(perimeter_estimate(ball_support(d, BallSpec((0.5, 0.5), R_DISK))))
    assert abs(vals[1] / vals[0] - 1) <= 0.03


def test_optimal_shape_is_round(fk):
    d, s, _ = fk
    dist, _, _ = circle_hausdorff(s)
    assert dist <= 2 * d.h


# ---------------------------------------------------------------------------
# gradient trace


def test_disk_gradient_median(disk256):
    d, s, sp = disk256
    t = gradient_trace(sp.u, s, extract_boundary(s), math.sqrt(LAM_DISK))
    assert np.all(t.samples >= 0)
    assert abs(t.median / disk_boundary_gradient(0.2) - 1) <= 0.10
    assert abs(t.median / t.sqrt_lambda_ref - 1) <= 0.10


def test_spurious_segment_has_zero_gradient(disk256):
    d, s, sp = disk256
    cells = s.cells.copy()
    cells[20:30, 20:30] = True
    extra = Support(d, cells)
    t = gradient_trace(sp.u, extra, extract_boundary(extra), math.sqrt(LAM_DISK))
    corner = np.all(t.vertices < 0.15, axis=1)
    assert corner.any()
    assert np.max(t.samples[corner]) <= 1e-12
    assert np.max(t.samples[corner]) < 0.1 * math.sqrt(LAM_DISK)


def test_lipschitz_proxy(disk256):
    _, s, sp = disk256
    assert max_gradient(sp.u, s) <= 3 * math.sqrt(LAM_DISK)


# ---------------------------------------------------------------------------
# density ratio


def test_density_inside_and_outside(disk256):
    d, s, _ = disk256
    assert density_ratio(s, (0.5, 0.5), 0.1) == 1.0
    assert density_ratio(s, (0.1, 0.1), 0.05) == 0.0


def test_density_on_boundary(disk256):
    d, s, _ = disk256
    for p in boundary_points(extract_boundary(s), 12):
        assert abs(density_ratio(s, p, 8 * d.h) - 0.5) <= 0.1


def test_density_errors(disk256):
    d, s, _ = disk256
    with pytest.raises(ValueError, match="radius below 2h"):
        density_ratio(s, (0.5, 0.5), d.h)
    with pytest.raises(ValueError, match="ball exits D"):
        density_ratio(s, (0.02, 0.5), 0.1)


# ---------------------------------------------------------------------------
# residual measure


def test_residual_interior_and_sign(disk256):
    d, s, sp = disk256
    m = residual_measure(sp.u, s, sp.lam)
    scale = sp.lam * sp.u.max() * d.h**2
    assert np.max(np.abs(m.masses[m.interior])) <= 1e-6 * scale
    assert m.masses.min() >= -1e-8 * scale
    assert m.total_mass == m.interior_mass + m.boundary_band_mass
    assert m.boundary_band_mass / m.total_mass >= 0.99


def test_residual_mass_per_perimeter(disk256):
    _, s, sp = disk256
    m = residual_measure(sp.u, s, sp.lam)
    assert abs(m.total_mass / perimeter_estimate(s) / math.sqrt(LAM_DISK) - 1) <= 0.15


def test_residual_ball_growth_linear(disk256):
    d, s, sp = disk256
    m = residual_measure(sp.u, s, sp.lam)
    p = boundary_points(extract_boundary(s), 5)[2]
    ratios = [m.ball_mass(p, k * d.h) / (k * d.h) for k in (4, 8, 16)]
    assert max(ratios) <= 2 * min(ratios)
    assert min(ratios) > 0


def test_boundary_band_of_block():
    cells = np.zeros((6, 6), bool)
    cells[1:5, 1:5] = True
    band = boundary_band(cells)
    assert band[1:5, 1:5].sum() == 12
    assert not band[2:4, 2:4].any()
    assert band[0, 1:5].all() and not band[0, 0]


# ---------------------------------------------------------------------------
# harmonic replacement


def test_replacement_fixed_point_inside(disk256):
    d, s, sp = disk256
    v = harmonic_replacement(d, sp.u, BallSpec((0.5, 0.5), 0.1), sp.lam)
    assert np.max(np.abs(v - sp.u)) <= 1e-8 * sp.u.max()


def test_replacement_positive_across_boundary(disk256):
    d, s, sp = disk256
    ball = BallSpec((0.5 + R_DISK, 0.5), 0.06)
    v = harmonic_replacement(d, sp.u, ball, sp.lam)
    inside = ball_cells(d, ball)
    assert v[inside].min() > 0
    assert (sp.u[inside] == 0).any()


def test_replacement_energy_gap(disk256):
    d, s, sp = disk256
    ball = BallSpec((0.5 + R_DISK, 0.5), 0.06)
    v = harmonic_replacement(d, sp.u, ball, sp.lam)
    diff = v - sp.u
    assert dirichlet_energy(diff, d.mask, d.h) > 0
    same = harmonic_replacement(d, sp.u, BallSpec((0.5, 0.5), 0.1), sp.lam) - sp.u
    assert dirichlet_energy(same, d.mask, d.h) <= 1e-12


def test_replacement_ball_outside(disk256):
    d, _, sp = disk256
    with pytest.raises(ValueError, match="ball exits D"):
        harmonic_replacement(d, sp.u, BallSpec((0.01, 0.5), 0.1), sp.lam)


# ---------------------------------------------------------------------------
# dichotomy


def _normal_sweep(disk256, rc):
    d, _, sp = disk256
    p = np.array([0.5 + R_DISK, 0.5])
    n = np.array([-1.0, 0.0])
    centers = [p + k * d.h * n for k in range(-12, 13)]
    return dichotomy_scan(d, sp.u, [rc * d.h], centers, math.sqrt(LAM_DISK))


def test_dichotomy_inside_outside(disk256):
    d, _, sp = disk256
    recs = dichotomy_scan(d, sp.u, [4 * d.h, 8 * d.h], [(0.5, 0.5), (0.85, 0.85)], math.sqrt(LAM_DISK))
    assert [r.verdict for r in recs] == ["positive", "positive", "zero", "zero"]
    assert recs[2].average == 0.0
    assert not any(r.contradiction for r in recs)


@pytest.mark.parametrize("rc", [4, 8])
def test_dichotomy_sweep_flips_without_contradiction(disk256, rc):
    recs = _normal_sweep(disk256, rc)
    verdicts = [r.verdict for r in recs]
    assert verdicts[0] == "zero" and verdicts[-1] == "positive"
    assert not any(r.contradiction for r in recs)
    first_pos = verdicts.index("positive")
    last_zero = len(verdicts) - 1 - verdicts[::-1].index("zero")
    assert last_zero < first_pos


@pytest.mark.xfail(strict=True, reason="undecided band is 8 cells at r = 4h")
def test_dichotomy_undecided_band_width(disk256):
    recs = _normal_sweep(disk256, 4)
    assert sum(r.verdict == "undecided" for r in recs) <= 4


def test_dichotomy_radius_guard(disk256):
    d, _, sp = disk256
    with pytest.raises(ValueError, match="radius below 4h"):
        dichotomy_scan(d, sp.u, [2 * d.h], [(0.5, 0.5)], 1.0)


# ---------------------------------------------------------------------------
# two-dimensional deficit


def test_dim2_interior_point(disk256):
    d, s, sp = disk256
    vals = dim2_deficit(d, sp.u, s, LAM_DISK, (0.5, 0.5), [16 * d.h, 8 * d.h, 4 * d.h])
    assert np.all(np.abs(vals / LAM_DISK - 1) <= 0.2)


def test_dim2_boundary_point(disk256):
    d, s, sp = disk256
    radii = [16 * d.h, 8 * d.h, 4 * d.h]
    for p in boundary_points(extract_boundary(s), 8):
        vals = dim2_deficit(d, sp.u, s, LAM_DISK, p, radii)
        # as a function of r the deficit decreases
        assert np.all(np.diff(vals) >= 0)
        assert vals[-1] <= 0.3 * LAM_DISK


@pytest.mark.xfail(strict=True, reason="at finite h the deficit grows as the ball shrinks")
def test_dim2_shrinks_towards_zero(disk256):
    d, s, sp = disk256
    p = boundary_points(extract_boundary(s), 8)[0]
    vals = dim2_deficit(d, sp.u, s, LAM_DISK, p, [16 * d.h, 8 * d.h, 4 * d.h])
    assert np.all(np.diff(vals) <= 0)


@pytest.mark.xfail(strict=True, reason="deficit is restricted to cells with u > 0")
def test_dim2_zero_field(disk256):
    d, s, _ = disk256
    vals = dim2_deficit(d, np.zeros(d.shape), s, LAM_DISK, (0.5, 0.5), [16 * d.h, 8 * d.h])
    assert np.allclose(vals, LAM_DISK)


# ---------------------------------------------------------------------------
# component verdicts


def test_component_verdicts_two_squares():
    d = build_box_domain([(0, 1, 0, 1), (1.5, 2.1, 0, 0.6)], 0.05, anchor="node")
    sp = smallest_eigenpair(d, d.full_support())
    v = component_verdicts(d, sp.u)
    assert [c.verdict for c in v] == ["positive", "zero"]
    assert v[1].max_u == 0.0


def test_component_partial(disk256):
    d, _, sp = disk256
    assert [c.verdict for c in component_verdicts(d, sp.u)] == ["partial"]
