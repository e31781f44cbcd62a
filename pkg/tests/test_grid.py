import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nlmfg.exceptions import ConfigurationError
from nlmfg.grid import (
    Grid,
    cell_to_face,
    divergence,
    face_to_cell_sq,
    gradient_forward,
    integrate,
    laplacian,
    make_grid,
    time_diff_forward,
)


def test_spacings():
    assert make_grid((0, 1, 0, 1), 64, 64, 32).dx1 == 1 / 64
    assert make_grid((-1, 1, -1, 1), 64, 64, 32).dx1 == 2 / 64
    assert make_grid((0, 1, 0, 1), 8, 8, 32).dt == 1 / 32


@pytest.mark.parametrize("bounds,n", [((0, 0, 0, 1), 4), ((1, 0, 0, 1), 4), ((0, 1, 0, 1), 1), ((0, 1, 0, 1), 0)])
def test_make_grid_rejects_bad_input(bounds, n):
    with pytest.raises(ConfigurationError):
        make_grid(bounds, n, 4, 4)


def test_make_grid_rejects_unknown_bc():
    with pytest.raises(ConfigurationError):
        make_grid((0, 1, 0, 1), 4, 4, 4, bc="dirichlet")


def test_cell_centers_and_level_lookup():
    g = make_grid((0, 1, 0, 1), 4, 4, 10)
    np.testing.assert_allclose(g.x1, [0.125, 0.375, 0.625, 0.875])
    assert g.level_of(0.1) == 1 and g.level_of(0.9) == 9 and g.level_of(1.0) == 10
    assert g.cell_of(0.5, 0.9) == (2, 3)
    with pytest.raises(ConfigurationError):
        g.level_of(1.5)


def test_time_diff_forward():
    g = make_grid((0, 1, 0, 1), 3, 4, 5)
    const = np.ones((6, 3, 4))
    assert np.all(time_diff_forward(const, g) == 0)
    ramp = np.broadcast_to((np.arange(6) * g.dt)[:, None, None], (6, 3, 4))
    np.testing.assert_allclose(time_diff_forward(ramp, g, 2), 1.0, rtol=1e-12)
    rng = np.random.default_rng(0)
    rho = rng.random((6, 3, 4))
    out = time_diff_forward(rho, g)
    for l in range(5):
        for i in range(3):
            for j in range(4):
                assert out[l, i, j] == (rho[l + 1, i, j] - rho[l, i, j]) / g.dt


def _divergence_loops(m1, m2, g):
    # cell (i, j) is bounded by faces i-1/2, i+1/2 and j-1/2, j+1/2
    n1, n2 = g.shape
    out = np.zeros((n1, n2))
    for i in range(n1):
        for j in range(n2):
            def face1(k):
                if g.periodic:
                    return m1[k % n1, j]
                return m1[k, j] if 0 <= k < n1 - 1 else 0.0

            def face2(k):
                if g.periodic:
                    return m2[i, k % n2]
                return m2[i, k] if 0 <= k < n2 - 1 else 0.0

            out[i, j] = (face1(i) - face1(i - 1)) / g.dx1 + (face2(j) - face2(j - 1)) / g.dx2
    return out


@pytest.mark.parametrize("bc", ["noflux", "periodic"])
def test_divergence_matches_loop_oracle(bc):
    g = make_grid((0, 2, -1, 1), 5, 4, 2, bc)
    rng = np.random.default_rng(1)
    m1, m2 = rng.normal(size=(2, 5, 4))
    np.testing.assert_allclose(divergence(m1, m2, g), _divergence_loops(m1, m2, g), rtol=1e-13, atol=1e-13)


def test_divergence_hand_values_on_4x4():
    # m1 on face i+1/2 equals its x1 coordinate; the boundary face at x1 = 1 is zero
    g = make_grid((0, 1, 0, 1), 4, 4, 2)
    faces = (np.arange(4) + 1) * g.dx1
    m1 = np.broadcast_to(faces[:, None], (4, 4)).copy()
    div = divergence(m1, np.zeros((4, 4)), g)
    np.testing.assert_allclose(div[0], 0.25 / 0.25)
    np.testing.assert_allclose(div[1:3], 1.0)
    np.testing.assert_allclose(div[3], (0.0 - 0.75) / 0.25)


def test_divergence_zero_flux():
    g = make_grid((0, 1, 0, 1), 4, 4, 2)
    assert np.all(divergence(np.zeros((4, 4)), np.zeros((4, 4)), g) == 0)


@given(st.integers(0, 2**32 - 1), st.sampled_from(["noflux", "periodic"]))
@settings(max_examples=30, deadline=None)
def test_divergence_integrates_to_zero(seed, bc):
    g = make_grid((-1, 1, -1, 1), 7, 5, 2, bc)
    m1, m2 = np.random.default_rng(seed).normal(size=(2, 7, 5))
    assert abs(integrate(divergence(m1, m2, g), g)) <= 1e-12


@given(st.integers(0, 2**32 - 1), st.sampled_from(["noflux", "periodic"]))
@settings(max_examples=30, deadline=None)
def test_divergence_is_minus_gradient_adjoint(seed, bc):
    g = make_grid((0, 1, 0, 3), 6, 5, 2, bc)
    rng = np.random.default_rng(seed)
    phi = rng.normal(size=(6, 5))
    m1, m2 = rng.normal(size=(2, 6, 5))
    g1, g2 = gradient_forward(phi, g)
    if bc == "noflux":
        m1[-1, :] = 0.0
        m2[:, -1] = 0.0
    lhs = np.sum(divergence(m1, m2, g) * phi)
    rhs = -np.sum(m1 * g1 + m2 * g2)
    assert abs(lhs - rhs) <= 1e-11 * (1 + abs(lhs))


@given(st.integers(0, 2**32 - 1), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=30, deadline=None)
def test_operators_are_linear(seed, alpha, beta):
    g = make_grid((0, 1, 0, 1), 5, 6, 2)
    rng = np.random.default_rng(seed)
    u, v = rng.normal(size=(2, 5, 6))
    for op in (lambda f: gradient_forward(f, g)[0], lambda f: gradient_forward(f, g)[1],
               lambda f: laplacian(f, g), lambda f: divergence(f, 2 * f, g)):
        lhs = op(alpha * u + beta * v)
        rhs = alpha * op(u) + beta * op(v)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + np.max(np.abs(rhs)))


def test_gradient_constant_and_periodic_ramp():
    g = make_grid((0, 1, 0, 1), 4, 4, 2, "periodic")
    g1, g2 = gradient_forward(np.full((4, 4), 3.0), g)
    assert np.all(g1 == 0) and np.all(g2 == 0)
    x1, _ = g.mesh()
    g1, _ = gradient_forward(x1, g)
    np.testing.assert_allclose(g1[:3], 1.0)
    np.testing.assert_allclose(g1[3], (0.125 - 0.875) / 0.25)


def test_gradient_noflux_boundary_faces_are_zero():
    g = make_grid((0, 1, 0, 1), 4, 3, 2)
    g1, g2 = gradient_forward(np.random.default_rng(2).normal(size=(4, 3)), g)
    assert np.all(g1[-1] == 0) and np.all(g2[:, -1] == 0)


def test_integrate():
    assert integrate(np.ones((8, 8)), make_grid((0, 1, 0, 1), 8, 8, 2)) == pytest.approx(1.0, abs=1e-15)
    assert integrate(np.ones((8, 8)), make_grid((-1, 1, -1, 1), 8, 8, 2)) == pytest.approx(4.0, abs=1e-14)
    half = np.zeros((8, 8))
    half[:4] = 1
    assert integrate(half, make_grid((-1, 1, -1, 1), 8, 8, 2)) == pytest.approx(2.0, abs=1e-14)
    g = make_grid((0, 1, 0, 1), 2, 2, 4)
    assert integrate(np.ones((5, 2, 2)), g, time=True) == pytest.approx(5 * 0.25)


def test_face_cell_transfers():
    g = make_grid((0, 1, 0, 1), 3, 3, 2)
    f1 = np.arange(9.0).reshape(3, 3)
    f2 = np.zeros((3, 3))
    f1[-1] = 0.0
    sq = face_to_cell_sq(f1, f2, g)
    # cell (1, 0) is bounded by faces 0 and 1 along x1
    assert sq[1, 0] == 0.5 * (f1[0, 0] ** 2 + f1[1, 0] ** 2)
    assert sq[0, 0] == 0.5 * f1[0, 0] ** 2
    c = np.arange(9.0).reshape(3, 3)
    c1, c2 = cell_to_face(c, g)
    assert c1[0, 1] == 0.5 * (c[0, 1] + c[1, 1])
    assert c2[2, 1] == 0.5 * (c[2, 1] + c[2, 2])


def test_unvalidated_single_cell_grid_is_usable():
    g = Grid(0.0, 1.0, 0.0, 1.0, 1, 1, 1)
    assert divergence(np.ones((1, 1)), np.ones((1, 1)), g)[0, 0] == 0.0
