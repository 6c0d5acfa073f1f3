import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eigshape.domain import (
    BallSpec,
    GridDomain,
    Support,
    ball_inside_domain,
    ball_support,
    build_box_domain,
    label_components,
    measure_volume,
)


def test_unit_square_eight_by_eight():
    d = build_box_domain([(0, 1, 0, 1)], 1 / 8)
    assert d.mask.sum() == 64
    assert d.n_components == 1
    assert d.volume == pytest.approx(1.0, abs=1e-14)


def test_two_squares_components_and_area():
    d = build_box_domain([(0, 1, 0, 1), (1.5, 2.1, 0, 0.6)], 0.1)
    assert d.n_components == 2
    assert d.volume == pytest.approx(1.36, abs=1e-12)


def test_empty_rect_list():
    with pytest.raises(ValueError, match="empty domain"):
        build_box_domain([], 0.1)


def test_degenerate_rects_are_empty():
    with pytest.raises(ValueError, match="empty domain"):
        build_box_domain([(0, 0, 0, 1)], 0.1)


@pytest.mark.parametrize("h", [0.0, -0.1, float("nan")])
def test_bad_resolution(h):
    with pytest.raises(ValueError, match="bad grid"):
        build_box_domain([(0, 1, 0, 1)], h)


def test_node_anchor_has_dirichlet_rim():
    d = build_box_domain([(0, 1, 0, 1)], 0.25, anchor="node")
    assert d.shape == (5, 5)
    assert d.mask.sum() == 9
    assert not d.mask[0].any() and not d.mask[-1].any()


def test_component_ids_match_labels():
    d = build_box_domain([(0, 1, 0, 1), (1.5, 2.1, 0, 0.6)], 0.1)
    assert np.all((d.component_id == -1) == ~d.mask)
    for k in range(d.n_components):
        assert np.unique(d.component_id[d.component_id == k]).size == 1


def test_domain_is_immutable():
    d = build_box_domain([(0, 1, 0, 1)], 0.25)
    with pytest.raises(ValueError):
        d.mask[0, 0] = False


def test_ball_volume_close_to_area():
    h = 0.01
    d = build_box_domain([(0, 1, 0, 1)], h)
    s = ball_support(d, BallSpec((0.5, 0.5), 0.3))
    assert abs(s.volume - math.pi * 0.09) <= 2 * h * 2 * math.pi * 0.3
    assert measure_volume(s) == s.volume


def test_tiny_ball_is_one_cell():
    d = build_box_domain([(0, 1, 0, 1)], 0.1)
    X, Y = d.centers()
    s = ball_support(d, BallSpec((X[3, 4], Y[3, 4]), 0.04))
    assert s.count == 1 and s.cells[3, 4]
    assert s.volume == pytest.approx(0.01, rel=1e-14)


def test_ball_outside_is_degenerate():
    d = build_box_domain([(0, 1, 0, 1)], 0.1)
    with pytest.raises(ValueError, match="degenerate ball"):
        ball_support(d, BallSpec((5.0, 5.0), 0.3))


def test_measure_volume_examples():
    d = build_box_domain([(0, 1, 0, 1)], 1 / 8)
    assert measure_volume(d.full_support()) == pytest.approx(1.0)
    d = build_box_domain([(0, 1, 0, 1)], 0.25)
    c = np.zeros(d.shape, bool)
    c[:2, :2] = True
    assert measure_volume(Support(d, c)) == 0.25


def test_support_must_stay_inside():
    d = build_box_domain([(0, 1, 0, 1)], 0.25, anchor="node")
    with pytest.raises(ValueError, match="leaves the domain"):
        Support(d, np.ones(d.shape, bool))


def test_ball_inside_domain():
    d = build_box_domain([(0, 1, 0, 1)], 1 / 64, anchor="node")
    assert ball_inside_domain(d, BallSpec((0.5, 0.5), 0.3))
    assert not ball_inside_domain(d, BallSpec((0.5, 0.5), 0.5))
    assert not ball_inside_domain(d, BallSpec((0.5, 0.5), 0.45), margin=0.06)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.booleans(), min_size=36, max_size=36))
def test_label_components_properties(bits):
    cells = np.array(bits).reshape(6, 6)
    labels, n = label_components(cells)
    assert np.all((labels == -1) == ~cells)
    assert set(np.unique(labels[cells])) == set(range(n))
    # first cells of components appear in increasing label order
    firsts = [np.flatnonzero((labels == k).ravel())[0] for k in range(n)]
    assert firsts == sorted(firsts)


@settings(max_examples=30, deadline=None)
@given(
    st.integers(3, 12),
    st.integers(3, 12),
    st.lists(st.booleans(), min_size=144, max_size=144),
)
def test_volume_is_count_times_area(nx, ny, bits):
    mask = np.array(bits[: nx * ny]).reshape(nx, ny)
    mask[1, 1] = True
    d = GridDomain.from_mask(mask, 0.125)
    s = d.full_support()
    assert s.volume == s.count * 0.125**2
    assert d.volume == s.volume
