import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlmfg.exceptions import ConfigurationError
from nlmfg.grid import integrate, make_grid
from nlmfg.kernels import fourier_green_basis, kernel_eval, linear_spread_basis
from nlmfg.problem import (
    ProblemSpec,
    Rectangle,
    confinement_cost,
    gaussian_density,
    gaussian_mixture,
    obstacle_cost,
    rectangle_mask,
    static_in_time,
    terminal_cost_preset,
    turnpike_potential,
    turnpike_rescale,
    uniform_density,
)

UNIT = make_grid((0, 1, 0, 1), 16, 16, 4)
SQUARE = make_grid((-1, 1, -1, 1), 16, 16, 4)


def test_gaussian_density():
    # odd cell count so that (0.5, 0.9) is a cell center
    g = make_grid((0, 1, 0, 1), 15, 15, 4)
    rho = gaussian_density(0.5, 0.9, 0.2, g)
    assert np.unravel_index(np.argmax(rho), rho.shape) == g.cell_of(0.5, 0.9) == (7, 13)
    assert abs(integrate(rho, g) - 1) <= 1e-12
    with pytest.raises(ConfigurationError):
        gaussian_density(0, 0, 0, UNIT)


def test_mixture_mass():
    centers = [(-1.2 + 0.4 * j, -0.9) for j in range(1, 6)]
    assert abs(integrate(gaussian_mixture(centers, 0.2, SQUARE), SQUARE) - 1) <= 1e-12
    assert abs(integrate(gaussian_mixture(centers[:2], 0.2, SQUARE, [3.0, 7.0]), SQUARE) - 1) <= 1e-12


class PointGrid:
    """Stand-in grid whose only cell center is ``point``."""

    shape = (1, 1)

    def __init__(self, point):
        self.point = point

    def mesh(self):
        return np.array([[self.point[0]]]), np.array([[self.point[1]]])


def test_confinement():
    assert confinement_cost((0.5, 0.5), 1e3, 8, PointGrid((1.0, 1.0)))[0, 0] == 3.90625
    assert confinement_cost((0.5, 0.5), 1e3, 8, PointGrid((0.5, 0.5)))[0, 0] == 0.0
    q = confinement_cost((0.5, 0.5), 1e3, 8, UNIT)
    assert np.all(q >= 0)
    assert np.all(confinement_cost((0.5, 0.5), 0.0, 8, UNIT) == 0)
    with pytest.raises(ConfigurationError):
        confinement_cost((0.5, 0.5), 1.0, 3, UNIT)
    with pytest.raises(ConfigurationError):
        confinement_cost((0.5, 0.5), -1.0, 8, UNIT)


def test_obstacles():
    assert np.all(obstacle_cost([], 1e4, UNIT) == 0)
    rect = Rectangle(0.1, 0.3, 0.1, 0.25)
    mask = rectangle_mask(rect, UNIT)
    assert mask.sum() == 6
    q = obstacle_cost([rect], 1e4, UNIT)
    assert np.count_nonzero(q) == 6 * UNIT.n_t and set(np.unique(q)) == {0.0, 1e4}
    with pytest.raises(ConfigurationError):
        obstacle_cost([Rectangle(2, 3, 0, 1)], 1.0, UNIT)
    with pytest.raises(ConfigurationError):
        obstacle_cost([Rectangle(0.5, 0.1, 0, 1)], 1.0, UNIT)


def test_moving_obstacle_is_shifted_static_mask():
    g = make_grid((0, 1, 0, 1), 8, 8, 4)
    # one cell per interval upward: velocity * dt = 1/8
    rect = Rectangle(0.25, 0.5, 0.0, 0.25, velocity=(0.0, 0.5))
    static = rectangle_mask(Rectangle(0.25, 0.5, 0.0, 0.25), g)
    q = obstacle_cost([rect], 1.0, g)
    for l in range(4):
        shifted = np.zeros_like(static)
        shifted[:, l:] = static[:, : 8 - l]
        np.testing.assert_array_equal(q[l] > 0, shifted)
    off_domain = obstacle_cost([Rectangle(0.25, 0.5, 0.75, 1.0, velocity=(0.0, 1.0))], 1.0, g)
    assert np.count_nonzero(off_domain[0]) > np.count_nonzero(off_domain[3])


def test_rectangle_lists():
    assert Rectangle.from_list([0, 1, 2, 3]).velocity == (0.0, 0.0)
    r = Rectangle.from_list([0, 1, 2, 3, 4, 5])
    assert r.to_list() == [0, 1, 2, 3, 4, 5]
    with pytest.raises(ConfigurationError):
        Rectangle.from_list([0, 1, 2])


def _value_at(name, point):
    return terminal_cost_preset(name, PointGrid(point))[0, 0]


def test_terminal_presets():
    assert _value_at("spread", (0.5, 0.1)) == -2.0
    assert _value_at("subregion", (0.0, 0.5)) == -4.0
    assert _value_at("gaussian_repulsion", (0.0, 0.9)) == -2.0
    assert np.all(terminal_cost_preset("zero", UNIT) == 0)
    with pytest.raises(ConfigurationError):
        terminal_cost_preset("nope", UNIT)


def _spec(grid, basis=None, Q=None):
    basis = basis or linear_spread_basis(1.0, 1.0, grid)
    Q = static_in_time(np.zeros(grid.shape), grid) if Q is None else Q
    return ProblemSpec(grid, uniform_density(grid), np.zeros(grid.shape), Q, basis)


def test_problem_spec_validation():
    with pytest.raises(ConfigurationError):
        ProblemSpec(UNIT, np.ones(UNIT.shape) * 2, np.zeros(UNIT.shape), np.zeros((4, 16, 16)),
                    linear_spread_basis(1, 1, UNIT))
    with pytest.raises(ConfigurationError):
        ProblemSpec(UNIT, uniform_density(UNIT), np.zeros(UNIT.shape), np.zeros((3, 16, 16)),
                    linear_spread_basis(1, 1, UNIT))
    with pytest.raises(ConfigurationError):
        ProblemSpec(UNIT, uniform_density(UNIT), np.zeros(UNIT.shape), np.zeros((4, 16, 16)),
                    linear_spread_basis(1, 1, UNIT), beta=0)
    bad_q = np.zeros((4, 16, 16))
    bad_q[0, 0, 0] = np.inf
    with pytest.raises(ConfigurationError):
        ProblemSpec(UNIT, uniform_density(UNIT), np.zeros(UNIT.shape), bad_q, linear_spread_basis(1, 1, UNIT))
    with pytest.raises(ConfigurationError):
        ProblemSpec(UNIT, uniform_density(UNIT), np.zeros(UNIT.shape), np.zeros((4, 16, 16)),
                    linear_spread_basis(1, 1, SQUARE))


def test_turnpike_potential_sampling():
    torus = make_grid((0, 1, 0, 1), 8, 8, 4, "periodic")
    x1, x2 = torus.mesh()
    q = turnpike_potential(torus)
    assert q[3, 5] == -math.sin(2 * math.pi * x2[3, 5]) - math.sin(2 * math.pi * x1[3, 5]) \
        - math.cos(4 * math.pi * x1[3, 5])
    assert q.min() < 0


def test_turnpike_rescale():
    torus = make_grid((0, 1, 0, 1), 8, 8, 4, "periodic")
    spec = _spec(torus, fourier_green_basis(2.0, 2, torus), static_in_time(np.full(torus.shape, 0.3), torus))
    assert turnpike_rescale(spec, 1.0) is spec
    s10 = turnpike_rescale(spec, 10.0)
    assert s10.beta == 10.0 and s10.time_scale == 10.0
    np.testing.assert_allclose(s10.Q, 3.0, rtol=1e-15)
    rng = np.random.default_rng(0)
    for _ in range(10):
        p, q = [tuple(v) for v in rng.integers(0, 8, size=(2, 2))]
        assert kernel_eval(s10.basis, p, q) == pytest.approx(10 * kernel_eval(spec.basis, p, q), rel=1e-12, abs=1e-12)
    with pytest.raises(ConfigurationError):
        turnpike_rescale(spec, 0.5)
    with pytest.raises(ConfigurationError):
        turnpike_rescale(_spec(UNIT), 2.0)


@given(st.floats(1.0, 10.0), st.floats(1.0, 10.0))
@settings(max_examples=20, deadline=None)
def test_turnpike_rescale_composes(t1, t2):
    torus = make_grid((0, 1, 0, 1), 4, 4, 2, "periodic")
    spec = _spec(torus, fourier_green_basis(1.0, 1, torus), static_in_time(turnpike_potential(torus), torus))
    twice = turnpike_rescale(turnpike_rescale(spec, t1), t2)
    once = turnpike_rescale(spec, t1 * t2)
    assert twice.beta == pytest.approx(once.beta, rel=1e-14)
    np.testing.assert_allclose(twice.Q, once.Q, rtol=1e-13)
    np.testing.assert_allclose(twice.basis.features, once.basis.features, rtol=1e-13)
