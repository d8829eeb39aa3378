import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from contourlift.fields import (Grid2D, cell_fro_norm, cell_norm, divergence,
                                gradient, inner, jacobian, laplacian, norm2,
                                tensor_divergence)

rng = np.random.default_rng(7)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid2D(1, 5)
    with pytest.raises(ValueError):
        Grid2D(5, 1)
    with pytest.raises(ValueError):
        Grid2D(4, 4, spacing=0.5)
    g = Grid2D(3, 4)
    assert g.shape == (4, 3)
    assert g.size == 12
    assert g.scalar().shape == (4, 3)
    assert g.vector().shape == (2, 4, 3)
    assert g.tensor().shape == (2, 2, 4, 3)


def test_gradient_of_linear_ramp():
    xs, ys = Grid2D(5, 4).meshgrid()
    v = gradient(2.0 * xs + 3.0 * ys)
    # forward differences: exact slope inside, structural zero on the far edge
    assert np.allclose(v[0][:, :-1], 2.0)
    assert np.all(v[0][:, -1] == 0.0)
    assert np.allclose(v[1][:-1, :], 3.0)
    assert np.all(v[1][-1, :] == 0.0)


def test_second_difference_of_squared_coordinate():
    # f(i) = i^2 on a strip: grad_x = 2i+1, second difference = 2 inside
    xs, _ = Grid2D(8, 3).meshgrid()
    f = xs ** 2
    v = gradient(f)
    assert np.allclose(v[0][:, :-1], 2.0 * xs[:, :-1] + 1.0)
    second = gradient(v[0])[0]
    assert np.allclose(second[:, :-2], 2.0)


def test_divergence_is_negative_adjoint_of_gradient():
    for ny, nx in ((2, 2), (3, 5), (7, 4), (16, 16)):
        f = rng.standard_normal((ny, nx))
        v = rng.standard_normal((2, ny, nx))
        lhs = inner(gradient(f), v)
        rhs = -inner(f, divergence(v))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_tensor_divergence_is_negative_adjoint_of_jacobian():
    for ny, nx in ((2, 3), (6, 6), (5, 9)):
        v = rng.standard_normal((2, ny, nx))
        t = rng.standard_normal((2, 2, ny, nx))
        lhs = inner(jacobian(v), t)
        rhs = -inner(v, tensor_divergence(t))
        assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs))


def test_jacobian_rows_are_component_gradients():
    v = rng.standard_normal((2, 6, 5))
    t = jacobian(v)
    assert np.array_equal(t[0], gradient(v[0]))
    assert np.array_equal(t[1], gradient(v[1]))


def test_laplacian_matches_div_grad_and_is_negative_semidefinite():
    f = rng.standard_normal((9, 7))
    assert np.allclose(laplacian(f), divergence(gradient(f)))
    # <f, div grad f> = -|grad f|^2 <= 0
    assert inner(f, laplacian(f)) <= 1e-12


def test_laplacian_of_constant_is_zero():
    assert np.all(laplacian(np.full((5, 8), 3.7)) == 0.0)


def test_cell_norms():
    v = np.zeros((2, 2, 2))
    v[0, 0, 0] = 3.0
    v[1, 0, 0] = 4.0
    assert cell_norm(v)[0, 0] == 5.0
    assert np.all(cell_norm(v)[1:, 1:] == 0.0)
    t = np.zeros((2, 2, 2, 2))
    t[:, :, 1, 1] = 1.0
    assert cell_fro_norm(t)[1, 1] == 2.0


def test_norm2_is_euclidean():
    a = np.array([[3.0, 4.0]])
    assert norm2(a) == 5.0


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 9), st.integers(2, 9), st.integers(0, 2 ** 31 - 1))
def test_adjointness_property(ny, nx, seed):
    r = np.random.default_rng(seed)
    f = r.standard_normal((ny, nx))
    v = r.standard_normal((2, ny, nx))
    assert abs(inner(gradient(f), v) + inner(f, divergence(v))) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(2, 9), st.integers(2, 9), st.integers(0, 2 ** 31 - 1))
def test_gradient_kills_constants_and_shift_invariance(ny, nx, seed):
    r = np.random.default_rng(seed)
    f = r.standard_normal((ny, nx))
    c = r.standard_normal()
    assert np.all(gradient(np.full((ny, nx), c)) == 0.0)
    assert np.allclose(gradient(f + c), gradient(f))
