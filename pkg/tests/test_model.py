import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contourlift.fields import Grid2D
from contourlift.model import (ConstraintSet, RegularizerWeights,
                               SolverConfig, energy, validate)


def ramp_field(nx=6, ny=4, slope=1.0):
    xs, _ = Grid2D(nx, ny).meshgrid()
    return slope * xs


def test_energy_of_ramp_hand_computed():
    # slope-1 ramp on 6x4: |DI| = 1 on the first 5 columns (structural zero
    # on the last), |HI|_F = 1 only where the slope shuts off (column 4)
    grid = Grid2D(6, 4)
    f = ramp_field()
    w = RegularizerWeights.constant(grid, 1.0, 1.0)
    cs = ConstraintSet.empty(grid)
    assert energy(f, cs, w) == pytest.approx(4 * 5 * 1.0 + 4 * 1.0)


def test_energy_second_order_only():
    grid = Grid2D(6, 4)
    w = RegularizerWeights.constant(grid, 2.0, 0.0)
    assert energy(ramp_field(), ConstraintSet.empty(grid), w) \
        == pytest.approx(2.0 * 4)


def test_energy_fidelity_term():
    grid = Grid2D(4, 4)
    cs = ConstraintSet.empty(grid)
    cs.height_mask[1, 2] = True
    cs.heights[1, 2] = 5.0
    cs.height_weight[1, 2] = 10.0
    w = RegularizerWeights.constant(grid, 0.0, 1.0)
    f = np.zeros((4, 4))
    assert energy(f, cs, w) == pytest.approx(10.0 * 25.0)


def matched_setup():
    grid = Grid2D(6, 4)
    cs = ConstraintSet.empty(grid)
    cs.normal_mask[2, 3] = True
    cs.normals[0, 2, 3] = 1.0
    cs.normal_weight[2, 3] = 2.0
    w = RegularizerWeights.constant(grid, 0.0, 0.0)
    return grid, cs, w


def test_energy_matching_modes():
    _, cs, w = matched_setup()
    f = ramp_field()          # DI.v = 1 at the constrained cell
    assert energy(f, cs, w, "normal") == pytest.approx(-2.0)
    assert energy(f, cs, w, "tangent") == pytest.approx(+2.0)
    assert energy(f, cs, w, "none") == 0.0
    with pytest.raises(ValueError):
        energy(f, cs, w, "sideways")


def test_energy_shift_invariance():
    grid = Grid2D(8, 8)
    rng = np.random.default_rng(3)
    f = rng.standard_normal((8, 8))
    cs = ConstraintSet.empty(grid)
    cs.height_mask[4, 4] = True
    cs.heights[4, 4] = 1.0
    cs.height_weight[4, 4] = 7.0
    w = RegularizerWeights.constant(grid, 1.0, 0.5)
    shifted = cs.copy()
    shifted.heights = cs.heights + 3.0
    assert energy(f + 3.0, shifted, w) == pytest.approx(energy(f, cs, w))


def test_without_matching_zeroes_weight_only():
    _, cs, _ = matched_setup()
    iso = cs.without_matching()
    assert np.all(iso.normal_weight == 0.0)
    assert np.array_equal(iso.normal_mask, cs.normal_mask)
    assert np.array_equal(iso.normals, cs.normals)
    # and the original is untouched
    assert cs.normal_weight[2, 3] == 2.0


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(c_q=0.0)
    with pytest.raises(ValueError):
        SolverConfig(matching_mode="bogus")
    cfg = SolverConfig().with_mode("tangent")
    assert cfg.matching_mode == "tangent"


def valid_setup():
    grid = Grid2D(5, 5)
    cs = ConstraintSet.empty(grid)
    cs.height_mask[2, 2] = True
    cs.heights[2, 2] = 1.0
    cs.height_weight[2, 2] = 1e5
    cs.normal_mask[1, 1] = True
    cs.normals[0, 1, 1] = 0.6
    cs.normals[1, 1, 1] = 0.8
    cs.normal_weight[1, 1] = 1.0
    w = RegularizerWeights.constant(grid, 1.0, 0.0)
    return cs, w


def test_validate_accepts_good_set():
    cs, w = valid_setup()
    assert validate(cs, w) == []


def test_validate_flags_problems():
    cs, w = valid_setup()
    cs.normals[0, 1, 1] = 2.0   # not unit
    assert any("unit" in p for p in validate(cs, w))

    cs, w = valid_setup()
    cs.height_mask[:] = False
    cs.height_weight[:] = 0.0
    assert any("height" in p for p in validate(cs, w))

    cs, w = valid_setup()
    cs.height_weight[0, 0] = 1.0   # weight outside the mask
    assert validate(cs, w)

    cs, w = valid_setup()
    cs.heights[2, 2] = np.nan
    assert validate(cs, w)

    cs, w = valid_setup()
    w.g[:] = 0.0
    w.h[:] = 0.0
    assert any("regulariz" in p for p in validate(cs, w))

    cs, w = valid_setup()
    w.h[:] = -1.0
    assert validate(cs, w)


@settings(max_examples=20, deadline=None)
@given(st.floats(-5, 5), st.integers(0, 2 ** 31 - 1))
def test_energy_shift_property(c, seed):
    grid = Grid2D(6, 6)
    r = np.random.default_rng(seed)
    f = r.standard_normal((6, 6))
    cs = ConstraintSet.empty(grid)
    cs.height_mask[3, 2] = True
    cs.heights[3, 2] = 0.5
    cs.height_weight[3, 2] = 2.0
    w = RegularizerWeights.constant(grid, 0.7, 0.3)
    shifted = cs.copy()
    shifted.heights = cs.heights + c
    assert energy(f + c, shifted, w) == pytest.approx(energy(f, cs, w),
                                                      rel=1e-9, abs=1e-9)
