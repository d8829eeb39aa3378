"""Synthetic cases: determinism, ground-truth algebra, constraint orientation."""

import numpy as np
import pytest

from contourlift.fields import gradient
from contourlift.model import validate
from contourlift.synth import (CASE_FACTORIES, cone_center_height,
                               make_cone_case, make_mixed_1d_signal,
                               make_pyramid_case, make_ramp_case,
                               make_semisphere_case, max_abs_err, rmse)


@pytest.mark.parametrize("name", sorted(CASE_FACTORIES))
def test_factories_are_deterministic(name):
    a = CASE_FACTORIES[name]()
    b = CASE_FACTORIES[name]()
    assert np.array_equal(a.ground_truth, b.ground_truth)
    assert len(a.lines) == len(b.lines)
    for la, lb in zip(a.lines, b.lines):
        assert np.array_equal(la.points, lb.points)
        assert np.array_equal(la.normals, lb.normals)
    assert a.extra_heights == b.extra_heights


@pytest.mark.parametrize("name", sorted(CASE_FACTORIES))
def test_constraints_validate_cleanly(name):
    case = CASE_FACTORIES[name]()
    assert validate(case.constraints(), case.weights) == []


@pytest.mark.parametrize("name", sorted(CASE_FACTORIES))
def test_true_signs_point_up_slope(name):
    """Oriented normals on matched cells must positively correlate with the
    analytic gradient wherever it is informative (off creases and plateaus)."""
    case = CASE_FACTORIES[name]()
    cs = case.constraints(true_signs=True)
    g = gradient(case.ground_truth)
    along = cs.normals[0] * g[0] + cs.normals[1] * g[1]
    cells = (cs.normal_weight > 0.0) & (np.hypot(g[0], g[1]) > 1e-9)
    if cells.any():
        assert np.mean(along[cells] > 0.0) > 0.97


def test_ramp_ground_truth_is_affine():
    case = make_ramp_case(64)
    gt = case.ground_truth
    assert np.allclose(np.diff(gt, axis=1), 1.0 / 47.0)
    assert np.allclose(gt[:, 8], 0.0) and np.allclose(gt[:, 55], 1.0)
    assert case.eval_mask[:, 8:56].all()
    assert not case.eval_mask[:, :8].any()


def test_cone_ground_truth_and_center_metric():
    case = make_cone_case(64)
    c = 31.5
    radius = 0.75 * 31.5
    xs, ys = case.grid.meshgrid()
    r = np.hypot(xs - c, ys - c)
    inside = r <= radius
    assert np.allclose(case.ground_truth[inside],
                       (radius / 2.0) * (1.0 - r[inside] / radius))
    assert np.all(case.ground_truth[~inside] == 0.0)
    assert cone_center_height(case, case.ground_truth) == pytest.approx(
        case.ground_truth[r < 0.15 * radius].mean())


def test_cone_line_sits_mid_wall_with_base_and_apex_anchors():
    case = make_cone_case(64)
    c = 31.5
    radius = 0.75 * 31.5
    assert case.level_values == [radius / 4.0]  # half the apex height
    rr = np.hypot(case.lines[0].points[:, 0] - c,
                  case.lines[0].points[:, 1] - c)
    assert np.allclose(rr, radius / 2.0)
    # first pin is the apex, the rest trace the base ring at level zero
    assert case.extra_heights[0] == (32, 32, radius / 2.0, 1e5)
    rest = case.extra_heights[1:]
    assert len(rest) > 0
    pr = np.hypot(np.array([p[0] for p in rest], dtype=float) - c,
                  np.array([p[1] for p in rest], dtype=float) - c)
    assert np.all(np.abs(pr - radius) < 1.0)
    assert all(p[2] == 0.0 and p[3] == 1e5 for p in rest)


def test_semisphere_levels_nest_and_pin_the_equator():
    case = make_semisphere_case(96, contours=4)
    radius = 0.42 * 95
    assert case.level_values[0] == pytest.approx(radius / 3.0)
    assert np.all(np.diff(case.level_values) > 0.0)
    assert max(case.level_values) < radius
    # all pins at level zero on the equator circle
    xs = np.array([p[0] for p in case.extra_heights], dtype=float)
    ys = np.array([p[1] for p in case.extra_heights], dtype=float)
    r = np.hypot(xs - 47.5, ys - 47.5)
    assert np.all(np.abs(r - radius) < 1.0)
    assert all(p[2] == 0.0 for p in case.extra_heights)
    # doubling the contour count keeps the existing levels
    fine = make_semisphere_case(96, contours=8)
    assert np.allclose(fine.level_values[::2], case.level_values)


def test_semisphere_rejects_zero_contours():
    with pytest.raises(ValueError):
        make_semisphere_case(64, contours=0)


def test_pyramid_lines_avoid_creases_and_corners():
    case = make_pyramid_case(64)
    c = 31.5
    u_breaks = np.array([0.80, 0.53, 0.40, 0.16]) * 31.5
    for line in case.lines:
        u = np.maximum(np.abs(line.points[:, 0] - c),
                       np.abs(line.points[:, 1] - c))
        assert np.all(np.min(np.abs(u[:, None] - u_breaks), axis=1) > 1.0)
        # no sample within a cell of a diagonal corner
        d = np.abs(np.abs(line.points[:, 0] - c) -
                   np.abs(line.points[:, 1] - c))
        assert np.all(d > 1.0)


def test_pyramid_weights_split_by_region():
    case = make_pyramid_case(64)
    c = 31.5
    xs, ys = case.grid.meshgrid()
    u = np.maximum(np.abs(xs - c), np.abs(ys - c))
    wall1 = (u <= 0.80 * c * 2 / 2) & (u >= 0.53 * 31.5)
    assert np.all(case.weights.g[wall1] == 10.0)
    assert np.all(case.weights.h[wall1] == 0.0)
    flat = u > 0.80 * 31.5
    assert np.all(case.weights.g[flat] == 0.0)
    assert np.all(case.weights.h[flat] == 10.0)


def test_pyramid_profile_heights():
    case = make_pyramid_case(64)
    gt = case.ground_truth
    assert gt[31, 31] == pytest.approx(gt.max())
    h1 = 0.5 * (0.80 - 0.53) * 31.5
    h2 = h1 + 0.5 * (0.40 - 0.16) * 31.5
    assert gt.max() == pytest.approx(h2)
    # terrace is flat at h1
    c = 31.5
    xs, ys = case.grid.meshgrid()
    u = np.maximum(np.abs(xs - c), np.abs(ys - c))
    terrace = (u <= 0.51 * 31.5) & (u >= 0.42 * 31.5)
    assert np.all(gt[terrace] == pytest.approx(h1))


def test_mixed_signal_sections():
    case = make_mixed_1d_signal(256, 8)
    prof = case.ground_truth[0]
    assert np.array_equal(case.ground_truth, np.tile(prof, (8, 1)))
    assert prof[:128].max() == pytest.approx(5.0)
    assert np.all(prof[int(0.55 * 256):int(0.70 * 256)] == 5.0)
    assert np.all(prof[int(0.75 * 256):int(0.90 * 256)] == -5.0)
    # vector-only lines carry no height data
    cs = case.constraints()
    n_height_lines = 7
    assert cs.height_mask.sum() == n_height_lines * 8
    assert cs.normal_mask.sum() == 14 * 8


def test_error_metrics():
    a = np.array([[0.0, 1.0], [2.0, 3.0]])
    b = np.array([[0.0, 0.0], [0.0, 0.0]])
    assert rmse(a, b) == pytest.approx(np.sqrt(14.0 / 4.0))
    assert max_abs_err(a, b) == 3.0
    mask = np.array([[True, False], [False, False]])
    assert rmse(a, b, mask) == 0.0
